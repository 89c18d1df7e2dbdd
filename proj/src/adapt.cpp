#include "joule/adapt.hpp"

#include "joule/errors.hpp"
#include "joule/mesh_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace joule {

std::vector<int> mark_dorfler(std::span<const double> per_cell_mass, double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw ArgumentError("mark_dorfler: theta must be in [0, 1]");
    double total = 0.0;
    for (double m : per_cell_mass) {
        if (m < 0.0) throw ArgumentError("mark_dorfler: negative indicator mass");
        total += m;
    }
    if (total == 0.0) return {};

    std::vector<int> order(per_cell_mass.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (per_cell_mass[a] != per_cell_mass[b]) return per_cell_mass[a] > per_cell_mass[b];
        return a < b;
    });

    if (theta == 1.0) {
        std::vector<int> marked;
        for (int c : order)
            if (per_cell_mass[c] > 0.0) marked.push_back(c);
        std::sort(marked.begin(), marked.end());
        return marked;
    }

    std::vector<int> marked;
    double sum = 0.0;
    for (int c : order) {
        marked.push_back(c);
        sum += per_cell_mass[c];
        if (sum >= theta * total) break;
    }
    std::sort(marked.begin(), marked.end());
    return marked;
}

namespace {

void dump_level(const std::string& dir, int level, const Mesh& mesh, const PicardState& state,
                const EstimatorReport& report) {
    namespace fs = std::filesystem;
    fs::path level_dir = fs::path(dir) / ("level_" + std::to_string(level));
    fs::create_directories(level_dir);
    {
        std::ofstream os(level_dir / "solution_phi.vtk");
        write_vtk(mesh, {{"phi", vertex_values(state.phi)}}, os);
    }
    {
        std::ofstream os(level_dir / "solution_u.vtk");
        write_vtk(mesh, {{"u", vertex_values(state.u)}}, os);
    }
    {
        std::ofstream os(level_dir / "estimators.csv");
        write_estimator_csv(report, os);
    }
}

} // namespace

AdaptHistory adaptive_solve(const ProblemData& data, const Mesh& initial_mesh,
                            const AdaptParams& params) {
    if (params.max_levels < 1) throw ArgumentError("adaptive_solve: max_levels must be >= 1");

    AdaptHistory history;
    auto mesh = std::make_shared<Mesh>(initial_mesh);
    std::ofstream level_log;
    if (params.dump_dir) {
        std::filesystem::create_directories(*params.dump_dir);
        level_log.open(std::filesystem::path(*params.dump_dir) / "levels.txt");
        level_log << "level cells ndofs_phi ndofs_u estimator_total gamma picard_iterations\n";
    }

    for (int level = 0; level < params.max_levels; ++level) {
        Spaces spaces{std::make_shared<FunctionSpace>(mesh, params.degree_phi),
                      std::make_shared<FunctionSpace>(mesh, params.degree_u)};
        auto [state, report] = solve_joule(data, spaces, params.picard);

        EstimatorReport est = estimate(state.phi, state.u, data, params.picard.threads);
        AdaptRecord rec;
        rec.level = level;
        rec.num_cells = mesh->num_cells();
        rec.ndofs_phi = spaces.phi->ndofs();
        rec.ndofs_u = spaces.u->ndofs();
        rec.estimator_total = est.weighted_total;
        rec.picard_iterations = report.iterations;
        rec.gamma = shape_regularity(*mesh);
        if (params.error_x) rec.error_x = params.error_x(state);
        history.levels.push_back(rec);

        if (params.dump_dir) {
            dump_level(*params.dump_dir, level, *mesh, state, est);
            level_log << level << ' ' << rec.num_cells << ' ' << rec.ndofs_phi << ' '
                      << rec.ndofs_u << ' ' << rec.estimator_total << ' ' << rec.gamma << ' '
                      << rec.picard_iterations << '\n';
        }

        history.final_mesh = mesh;
        history.final_state = state;

        if (!report.converged) {
            history.failed = true;
            break;
        }
        if (est.weighted_total <= params.target_total || level == params.max_levels - 1) break;

        std::vector<int> marked = mark_dorfler(est.per_cell_total, params.theta);
        if (marked.empty()) break;
        mesh = std::make_shared<Mesh>(refine(*mesh, marked));
    }
    return history;
}

} // namespace joule
