#include "joule/adapt.hpp"
#include "joule/errors.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace joule;
using namespace joule::testing;

namespace {

/// Brute-force minimal bulk cardinality: smallest subset size whose mass
/// reaches theta * total. Exponential; keep n <= 20.
int min_bulk_cardinality(const std::vector<double>& mass, double theta) {
    const int n = static_cast<int>(mass.size());
    double total = 0.0;
    for (double m : mass) total += m;
    int best = n + 1;
    for (unsigned s = 0; s < (1u << n); ++s) {
        double sum = 0.0;
        int card = 0;
        for (int i = 0; i < n; ++i)
            if (s & (1u << i)) {
                sum += mass[i];
                ++card;
            }
        if (sum >= theta * total) best = std::min(best, card);
    }
    return best;
}

} // namespace

TEST_CASE("dorfler marking on hand-built instances") {
    std::vector<double> mass{4.0, 2.0, 1.0, 1.0};
    auto marked = mark_dorfler(mass, 0.6);
    CHECK(marked == std::vector<int>{0, 1}); // mass 6 >= 4.8

    auto all = mark_dorfler(std::vector<double>{1.0, 0.0, 2.0}, 1.0);
    CHECK(all == std::vector<int>{0, 2}); // zero-mass cells excluded

    CHECK(mark_dorfler(std::vector<double>{0.0, 0.0}, 0.5).empty());
    CHECK(mark_dorfler(std::vector<double>{1.0, 3.0}, 0.0) == std::vector<int>{1});
    CHECK_THROWS_AS(mark_dorfler(std::vector<double>{-1.0}, 0.5), ArgumentError);
    CHECK_THROWS_AS(mark_dorfler(std::vector<double>{1.0}, 1.5), ArgumentError);

    // ties break toward the lower cell id
    auto tie = mark_dorfler(std::vector<double>{2.0, 2.0, 2.0}, 0.3);
    CHECK(tie == std::vector<int>{0});
}

TEST_CASE("greedy marking is minimal and deterministic") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> mass_dist(0.0, 1.0);
    std::uniform_real_distribution<double> theta_dist(0.05, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 2 + static_cast<int>(rng() % 11);
        std::vector<double> mass(n);
        for (double& m : mass) m = rng() % 5 == 0 ? 0.0 : mass_dist(rng);
        const double theta = theta_dist(rng);

        auto marked = mark_dorfler(mass, theta);
        auto again = mark_dorfler(mass, theta);
        CHECK(marked == again);

        double total = 0.0, sum = 0.0;
        for (double m : mass) total += m;
        double smallest = std::numeric_limits<double>::infinity();
        for (int c : marked) {
            sum += mass[c];
            smallest = std::min(smallest, mass[c]);
        }
        if (total == 0.0) {
            CHECK(marked.empty());
            continue;
        }
        CHECK(sum >= theta * total - 1e-15 * total);
        CHECK(static_cast<int>(marked.size()) == min_bulk_cardinality(mass, theta));
        // dropping the lightest marked cell must violate the criterion
        if (theta > 0.0 && marked.size() > 1)
            CHECK(sum - smallest < theta * total);
    }
}

TEST_CASE("infinite target stops after one level") {
    AdaptParams params;
    params.target_total = std::numeric_limits<double>::infinity();
    params.max_levels = 5;
    params.degree_u = 2;
    AdaptHistory h =
        adaptive_solve(decoupled_benchmark_data(), unit_box_mesh(2, 2, x_slab_dirichlet()), params);
    CHECK(h.levels.size() == 1);
    CHECK(!h.failed);
}

TEST_CASE("estimator totals decrease on the smooth benchmark") {
    AdaptParams params;
    params.theta = 0.5;
    params.max_levels = 5;
    params.degree_phi = 1;
    params.degree_u = 1;
    AdaptHistory h =
        adaptive_solve(decoupled_benchmark_data(), unit_box_mesh(2, 2, x_slab_dirichlet()), params);
    REQUIRE(h.levels.size() == 5);
    CHECK(!h.failed);
    const double gamma0 = h.levels.front().gamma;
    for (std::size_t i = 0; i + 1 < h.levels.size(); ++i) {
        CHECK(h.levels[i + 1].estimator_total < h.levels[i].estimator_total);
        CHECK(h.levels[i + 1].ndofs_phi >= h.levels[i].ndofs_phi);
        CHECK(h.levels[i + 1].ndofs_u >= h.levels[i].ndofs_u);
        CHECK(h.levels[i + 1].level == h.levels[i].level + 1);
    }
    for (const auto& rec : h.levels) CHECK(rec.gamma <= 2.0 * gamma0 + 1e-12);
}

TEST_CASE("l-shape run refines toward the re-entrant corner") {
    AdaptParams params;
    params.theta = 0.5;
    params.max_levels = 10;
    // Dirichlet data x clashes with the homogeneous Neumann crack edge, so the
    // potential carries the r^(1/3) singular mode at the origin.
    ProblemData data = decoupled_benchmark_data();
    data.g_lo = -1.0;
    data.g_hi = 1.0;
    AdaptHistory h = adaptive_solve(data, l_shape_mesh(), params);
    REQUIRE(!h.levels.empty());
    CHECK(!h.failed);

    // cells concentrate near the corner: the smallest cells touch (0,0)
    const Mesh& final_mesh = *h.final_mesh;
    double hmin = 1e9;
    int smallest = -1;
    for (int c = 0; c < final_mesh.num_cells(); ++c)
        if (final_mesh.cell_diameter(c) < hmin) {
            hmin = final_mesh.cell_diameter(c);
            smallest = c;
        }
    CHECK(norm(final_mesh.cell_centroid(smallest)) < 0.25);
}

TEST_CASE("per-level artifacts are dumped when requested") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "joule_adapt_dump_test";
    fs::remove_all(dir);
    AdaptParams params;
    params.max_levels = 2;
    params.degree_u = 2;
    params.dump_dir = dir.string();
    AdaptHistory h =
        adaptive_solve(decoupled_benchmark_data(), unit_box_mesh(2, 2, x_slab_dirichlet()), params);
    CHECK(fs::exists(dir / "levels.txt"));
    CHECK(fs::exists(dir / "level_0" / "solution_phi.vtk"));
    CHECK(fs::exists(dir / "level_0" / "solution_u.vtk"));
    CHECK(fs::exists(dir / "level_0" / "estimators.csv"));
    CHECK(fs::exists(dir / "level_1" / "estimators.csv"));
    fs::remove_all(dir);
}

TEST_CASE("picard failure truncates the history with a flag") {
    AdaptParams params;
    params.max_levels = 4;
    params.picard.tol = 1e-300;
    params.picard.max_iterations = 1;
    AdaptHistory h =
        adaptive_solve(decoupled_benchmark_data(), unit_box_mesh(2, 2, x_slab_dirichlet()), params);
    CHECK(h.failed);
    CHECK(h.levels.size() == 1);
}
