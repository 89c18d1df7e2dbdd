#include "joule/adapt.hpp"
#include "joule/config.hpp"
#include "joule/errors.hpp"
#include "joule/mesh_io.hpp"
#include "joule/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;
using namespace joule;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_override;
    int threads = 0; // 0: keep config value
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run configuration file")->required();
    cmd->add_option("--set", args.overrides, "override a config entry: section.key=value");
    cmd->add_option("--output", args.output_override, "output directory (overrides config)");
    cmd->add_option("--threads", args.threads, "worker threads for assembly/estimation");
    cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

RunConfig load_config(const CommonArgs& args) {
    RunConfig config = parse_config_file(args.config_path);
    for (const std::string& s : args.overrides) apply_override(config, s);
    if (!args.output_override.empty()) config.output = args.output_override;
    if (args.threads > 0) config.threads = args.threads;
    if (args.quiet) config.quiet = true;
    return config;
}

PicardOptions picard_options(const RunConfig& config) {
    PicardOptions opts;
    opts.tol = config.tol;
    opts.max_iterations = config.max_iterations;
    opts.damping = config.damping;
    opts.threads = config.threads;
    return opts;
}

double coeff_max(const FeFunction& f) {
    double m = -std::numeric_limits<double>::infinity();
    for (double c : f.coeffs) m = std::max(m, c);
    return m;
}

double coeff_min(const FeFunction& f) {
    double m = std::numeric_limits<double>::infinity();
    for (double c : f.coeffs) m = std::min(m, c);
    return m;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream os(dir / name);
    if (!os) throw ConfigError("cannot write to '" + (dir / name).string() + "'");
    return os;
}

void write_manifest_header(std::ostream& os, const std::string& subcommand,
                           const RunConfig& config, double elapsed_s) {
    os << "joule run manifest\n";
    os << "subcommand: " << subcommand << '\n';
    os << "version: " << kVersion << '\n';
    os << "elapsed_seconds: " << elapsed_s << '\n';
    os << "--- config ---\n";
    os << serialize(config);
    os << "--- end config ---\n";
}

void write_solution(const fs::path& dir, const Mesh& mesh, const PicardState& state) {
    {
        auto os = open_out(dir, "solution_phi.vtk");
        write_vtk(mesh, {{"phi", vertex_values(state.phi)}}, os);
    }
    {
        auto os = open_out(dir, "solution_u.vtk");
        write_vtk(mesh, {{"u", vertex_values(state.u)}}, os);
    }
}

void report_block(std::ostream& os, const PicardState& state, const SolveReport& report,
                  const ProblemData& data) {
    os.precision(12);
    os << "report:\n";
    os << "  converged: " << (report.converged ? "yes" : "no") << '\n';
    os << "  picard_iterations: " << report.iterations << '\n';
    os << "  final_increment: " << report.final_increment << '\n';
    os << "  iterate_norm_max: " << report.iterate_norm_max << '\n';
    os << "  phi_min: " << coeff_min(state.phi) << '\n';
    os << "  phi_max: " << coeff_max(state.phi) << '\n';
    os << "  u_min: " << coeff_min(state.u) << '\n';
    os << "  u_max: " << coeff_max(state.u) << '\n';
    os << "  g_lo: " << data.g_lo << '\n';
    os << "  g_hi: " << data.g_hi << '\n';
    for (std::size_t i = 0; i < report.linear_stats.size(); ++i) {
        const auto& s = report.linear_stats[i];
        os << "  step " << i + 1 << ": cg_phi " << s.cg_iterations_phi << " (" << s.residual_phi
           << "), cg_u " << s.cg_iterations_u << " (" << s.residual_u << ")\n";
    }
    SmallDataReport sd = small_data_check(state.phi, data, data.conductivity.lipschitz(), 1.0,
                                          1.0, 0.5);
    os << to_string(sd);
    os << "  note: C8, C9 defaulted to 1.0; the check is indicative only\n";
}

int cmd_solve(const CommonArgs& args, bool with_estimate) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig config = load_config(args);
    if (!config.quiet && config.bounds == "auto" && config.mms_phi.empty())
        std::cerr << "note: Dirichlet bounds sampled from g_phi on the Dirichlet boundary "
                     "(sample-based estimate)\n";
    auto mesh = std::make_shared<Mesh>(mesh_from_config(config));
    std::optional<ExactSolution> exact;
    ProblemData data = problem_from_config(config, *mesh, &exact);
    Spaces spaces{std::make_shared<FunctionSpace>(mesh, config.degree_phi),
                  std::make_shared<FunctionSpace>(mesh, config.degree_u)};
    auto [state, report] = solve_joule(data, spaces, picard_options(config));

    const fs::path out(config.output);
    write_solution(out, *mesh, state);
    if (with_estimate) {
        EstimatorReport est = estimate(state.phi, state.u, data, config.threads);
        auto os = open_out(out, "estimators.csv");
        write_estimator_csv(est, os);
        if (!config.quiet)
            std::cout << "estimator total: " << est.weighted_total << '\n';
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto manifest = open_out(out, "manifest.txt");
    write_manifest_header(manifest, with_estimate ? "estimate" : "solve", config, elapsed);
    report_block(manifest, state, report, data);
    if (!config.quiet)
        std::cout << (report.converged ? "converged" : "NOT converged") << " in "
                  << report.iterations << " iterations; u_max = " << coeff_max(state.u) << '\n';
    return report.converged ? 0 : 3;
}

int cmd_study(const CommonArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig config = load_config(args);
    auto mesh = std::make_shared<Mesh>(mesh_from_config(config));
    std::optional<ExactSolution> exact;
    ProblemData data = problem_from_config(config, *mesh, &exact);
    if (!exact) throw ConfigError("study requires an [mms] block with exact_phi and exact_u");

    ConvergenceTable table = convergence_study(data, *exact, *mesh, config.levels,
                                               config.degree_phi, config.degree_u,
                                               picard_options(config));
    const fs::path out(config.output);
    {
        auto os = open_out(out, "convergence.csv");
        write_convergence_csv(table, os);
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto manifest = open_out(out, "manifest.txt");
    write_manifest_header(manifest, "study", config, elapsed);
    manifest << "report:\n";
    manifest << "  levels_completed: " << table.rows.size() << '\n';
    manifest << "  truncated: " << (table.truncated ? "yes" : "no") << '\n';
    if (!config.quiet) {
        const auto r = rates(table, &ConvergenceRow::err_phi_h1);
        std::cout << "study finished: " << table.rows.size() << " levels";
        if (!r.empty()) std::cout << ", last phi H1 rate " << r.back();
        std::cout << '\n';
    }
    return table.truncated ? 3 : 0;
}

int cmd_adapt(const CommonArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig config = load_config(args);
    auto mesh = std::make_shared<Mesh>(mesh_from_config(config));
    std::optional<ExactSolution> exact;
    ProblemData data = problem_from_config(config, *mesh, &exact);

    AdaptParams params;
    params.theta = config.theta;
    params.max_levels = config.max_levels;
    params.target_total = config.target_total;
    params.degree_phi = config.degree_phi;
    params.degree_u = config.degree_u;
    params.picard = picard_options(config);
    params.dump_dir = (fs::path(config.output) / "levels").string();

    AdaptHistory history = adaptive_solve(data, *mesh, params);

    const fs::path out(config.output);
    if (history.final_state) write_solution(out, *history.final_mesh, *history.final_state);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto manifest = open_out(out, "manifest.txt");
    write_manifest_header(manifest, "adapt", config, elapsed);
    manifest << "report:\n";
    manifest << "  levels: " << history.levels.size() << '\n';
    manifest << "  failed: " << (history.failed ? "yes" : "no") << '\n';
    manifest << "  level cells ndofs_phi ndofs_u total gamma picard\n";
    manifest.precision(12);
    for (const auto& rec : history.levels)
        manifest << "  " << rec.level << ' ' << rec.num_cells << ' ' << rec.ndofs_phi << ' '
                 << rec.ndofs_u << ' ' << rec.estimator_total << ' ' << rec.gamma << ' '
                 << rec.picard_iterations << '\n';
    if (!config.quiet && !history.levels.empty())
        std::cout << "adapt finished at level " << history.levels.back().level << " with total "
                  << history.levels.back().estimator_total << '\n';
    return history.failed ? 3 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive finite element solver for the stationary Joule heating system"};
    app.require_subcommand(1);

    CommonArgs solve_args, adapt_args, study_args, estimate_args;
    CLI::App* solve = app.add_subcommand("solve", "solve on a fixed mesh");
    add_common(solve, solve_args);
    CLI::App* adapt = app.add_subcommand("adapt", "adaptive solve-estimate-mark-refine loop");
    add_common(adapt, adapt_args);
    CLI::App* study = app.add_subcommand("study", "uniform convergence study against exact fields");
    add_common(study, study_args);
    CLI::App* estim = app.add_subcommand("estimate", "solve and write the error indicators");
    add_common(estim, estimate_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(solve_args, false);
        if (estim->parsed()) return cmd_solve(estimate_args, true);
        if (study->parsed()) return cmd_study(study_args);
        if (adapt->parsed()) return cmd_adapt(adapt_args);
    } catch (const MeshError& e) {
        std::cerr << "mesh error: " << e.what() << '\n';
        return 4;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "expression error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
