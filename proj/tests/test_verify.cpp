#include "joule/verify.hpp"
#include "joule/errors.hpp"
#include "joule/quadrature.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace joule;
using namespace joule::testing;

TEST_CASE("manufactured sources for phi* = x, u* = 0, sigma = 1") {
    Mesh mesh = unit_box_mesh(2, 2, all_dirichlet());
    ProblemData data = mms_problem(Expr::parse("x"), Expr::parse("0"),
                                   Conductivity::constant(1.0), mesh);
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        Vec3 p{dist(rng), dist(rng), 0.0};
        CHECK(data.f_phi(p) == doctest::Approx(0.0).scale(1.0));
        CHECK(data.f_u(p) == doctest::Approx(-1.0)); // -lap u* - |grad phi*|^2
        CHECK(data.g_phi(p) == doctest::Approx(p.x));
        CHECK(data.g_u(p) == doctest::Approx(0.0).scale(1.0));
    }
    CHECK(data.g_lo == doctest::Approx(0.0).scale(1.0));
    CHECK(data.g_hi == doctest::Approx(1.0));
}

TEST_CASE("constant exact fields produce zero sources") {
    Mesh mesh = unit_box_mesh(2, 1, all_dirichlet());
    ProblemData data = mms_problem(Expr::parse("2"), Expr::parse("3"),
                                   Conductivity::sigmoid(1.0, 0.3, 1.0), mesh);
    Vec3 p{0.3, 0.7, 0.0};
    CHECK(data.f_phi(p) == doctest::Approx(0.0).scale(1.0));
    CHECK(data.f_u(p) == doctest::Approx(0.0).scale(1.0));
    CHECK(data.h_robin(p, {1, 0, 0}) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("manufactured laplacian matches the closed form and finite differences") {
    const double pi = M_PI;
    std::ostringstream src;
    src.precision(17);
    src << "sin(" << pi << "*x)*sin(" << pi << "*y)";
    Expr phi = Expr::parse(src.str());
    Mesh mesh = unit_box_mesh(2, 2, all_dirichlet());
    ProblemData data = mms_problem(phi, Expr::parse("0"), Conductivity::constant(1.0), mesh);

    std::mt19937 rng(43);
    std::uniform_real_distribution<double> dist(0.05, 0.95);
    for (int rep = 0; rep < 10; ++rep) {
        Vec3 p{dist(rng), dist(rng), 0.0};
        const double expected = 2.0 * pi * pi * std::sin(pi * p.x) * std::sin(pi * p.y);
        CHECK(data.f_phi(p) == doctest::Approx(expected).epsilon(1e-10));
        // nested central differences as an independent oracle
        const double h = 1e-4;
        auto f = [&](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); };
        const double lap_fd = (f(p.x + h, p.y) + f(p.x - h, p.y) + f(p.x, p.y + h) +
                               f(p.x, p.y - h) - 4.0 * f(p.x, p.y)) /
                              (h * h);
        CHECK(data.f_phi(p) == doctest::Approx(-lap_fd).epsilon(1e-5));
    }
}

TEST_CASE("mms input validation") {
    Mesh mesh = unit_box_mesh(2, 1, all_dirichlet());
    CHECK_THROWS_AS(mms_problem(Expr(), Expr::parse("0"), Conductivity::constant(1.0), mesh),
                    ArgumentError);
    CHECK_THROWS_AS(
        mms_problem(Expr::parse("u"), Expr::parse("0"), Conductivity::constant(1.0), mesh),
        ArgumentError);
    // 1/x blows up at the x = 0 boundary of the sampled box
    CHECK_THROWS_AS(
        mms_problem(Expr::parse("1/x"), Expr::parse("0"), Conductivity::constant(1.0), mesh),
        DataError);
}

TEST_CASE("convergence study on an exactly representable potential") {
    Mesh mesh = unit_box_mesh(2, 2, x_slab_dirichlet());
    ProblemData data = decoupled_benchmark_data();
    ExactSolution exact{Expr::parse("x"), Expr::parse("x*(1-x)/2")};
    PicardOptions opts;
    opts.tol = 1e-10;
    ConvergenceTable table = convergence_study(data, exact, mesh, 3, 1, 2, opts);
    REQUIRE(table.rows.size() == 3);
    CHECK(!table.truncated);
    for (const auto& row : table.rows) {
        CHECK(row.err_phi_h1 <= 1e-9);
        CHECK(row.err_u_h1 <= 1e-8);
        CHECK(row.picard_iterations <= 3);
    }
    // h halves between levels
    CHECK(table.rows[0].h_max == doctest::Approx(2.0 * table.rows[1].h_max).epsilon(1e-12));
    CHECK_THROWS_AS(convergence_study(data, exact, mesh, 1, 1, 1, opts), ArgumentError);
}

TEST_CASE("convergence study observes first-order H1 rates for P1") {
    Mesh mesh = unit_box_mesh(2, 2, all_dirichlet());
    Conductivity sigma = Conductivity::sigmoid(1.0, 0.1, 1.0);
    ProblemData data = mms_problem(Expr::parse("x*x*y + x"), Expr::parse("x*y*(1-x)*(1-y)"),
                                   sigma, mesh);
    ExactSolution exact{Expr::parse("x*x*y + x"), Expr::parse("x*y*(1-x)*(1-y)")};
    ConvergenceTable table = convergence_study(data, exact, mesh, 3, 1, 1, {});
    REQUIRE(table.rows.size() == 3);
    auto r_phi = rates(table, &ConvergenceRow::err_phi_h1);
    auto r_u = rates(table, &ConvergenceRow::err_u_h1);
    CHECK(r_phi.back() == doctest::Approx(1.0).epsilon(0.3));
    CHECK(r_u.back() == doctest::Approx(1.0).epsilon(0.3));
    for (const auto& row : table.rows) {
        CHECK(row.effectivity > 0.0);
        CHECK(row.estimator_total > 0.0);
    }
}

TEST_CASE("manufactured Robin conditions converge at first order") {
    // u is Dirichlet on the x-sides and Robin (kappa = 1) on the y-sides,
    // where h = u* + du*/dnu picks up both normal orientations
    BoundaryTagger tagger = [](const Vec3& c) {
        const bool xside = c.x < 1e-9 || c.x > 1.0 - 1e-9;
        return std::make_pair(PhiTag::dirichlet, xside ? UTag::dirichlet : UTag::robin);
    };
    Mesh initial = unit_box_mesh(2, 2, tagger);
    Conductivity sigma = Conductivity::sigmoid(1.0, 0.1, 1.0);
    Expr phi_star = Expr::parse("x*y + x");
    Expr u_star = Expr::parse("x + y*y");
    ProblemData data = mms_problem(phi_star, u_star, sigma, initial, Expr::parse("1"));

    // h carries the normal derivative: at y = 0 the outward normal is (0,-1)
    CHECK(data.h_robin({0.5, 0.0, 0.0}, {0, -1, 0}) == doctest::Approx(0.5 + 0.0 - 0.0));
    CHECK(data.h_robin({0.5, 1.0, 0.0}, {0, 1, 0}) == doctest::Approx(1.5 + 2.0));

    PicardOptions opts;
    opts.tol = 1e-9;
    ConvergenceTable t =
        convergence_study(data, {phi_star, u_star}, initial, 3, 1, 1, opts);
    REQUIRE(t.rows.size() == 3);
    CHECK(!t.truncated);
    auto r_u = rates(t, &ConvergenceRow::err_u_h1);
    CHECK(r_u.back() == doctest::Approx(1.0).epsilon(0.3));
    auto r_ul = rates(t, &ConvergenceRow::err_u_l2);
    CHECK(r_ul.back() == doctest::Approx(2.0).epsilon(0.2));

    // the Robin residual indicator is active and sane
    auto mesh = std::make_shared<Mesh>(initial);
    Spaces spaces{std::make_shared<FunctionSpace>(mesh, 1),
                  std::make_shared<FunctionSpace>(mesh, 1)};
    auto [state, report] = solve_joule(data, spaces, opts);
    REQUIRE(report.converged);
    EstimatorReport est = estimate(state.phi, state.u, data);
    REQUIRE(!est.rho_e_robin.empty());
    double robin_mass = 0.0;
    for (double v : est.rho_e_robin) robin_mass += v;
    CHECK(robin_mass > 0.0);
}

TEST_CASE("3D P2 study converges on a cubic exact pair") {
    Mesh initial = unit_box_mesh(3, 1, all_dirichlet());
    Conductivity sigma = Conductivity::sigmoid(1.0, 0.1, 1.0);
    Expr phi_star = Expr::parse("x*y*z + x*x");
    Expr u_star = Expr::parse("x + y*y*z");
    ProblemData data = mms_problem(phi_star, u_star, sigma, initial);
    PicardOptions opts;
    opts.tol = 1e-9;
    ConvergenceTable t = convergence_study(data, {phi_star, u_star}, initial, 2, 2, 2, opts);
    REQUIRE(t.rows.size() == 2);
    CHECK(!t.truncated);
    auto r_phi = rates(t, &ConvergenceRow::err_phi_h1);
    auto r_u = rates(t, &ConvergenceRow::err_u_h1);
    // second order for P2 in H1
    CHECK(r_phi[0] > 1.6);
    CHECK(r_u[0] > 1.6);
    CHECK(t.rows[1].estimator_total < t.rows[0].estimator_total);
    CHECK(t.rows[1].effectivity > 0.05);
    CHECK(t.rows[1].effectivity < 50.0);
}

TEST_CASE("rate arithmetic") {
    ConvergenceTable t;
    t.rows.push_back({1.0, 10, 0.4, 0, 0, 0, 0, 0, 0, 0, 0});
    t.rows.push_back({0.5, 30, 0.1, 0, 0, 0, 0, 0, 0, 0, 0});
    auto r = rates(t, &ConvergenceRow::err_phi_h1);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == doctest::Approx(2.0));
}

TEST_CASE("csv table export") {
    ConvergenceTable t;
    t.rows.push_back({1.0, 10, 0.4, 0.3, 0.1, 0.05, 0.5, 1.1, 2, 1.0, 0.0});
    t.rows.push_back({0.5, 30, 0.2, 0.15, 0.025, 0.0125, 0.25, 1.2, 2, 1.0, 0.0});
    std::ostringstream os;
    write_convergence_csv(t, os);
    std::istringstream is(os.str());
    std::string header, row1, row2;
    std::getline(is, header);
    std::getline(is, row1);
    std::getline(is, row2);
    CHECK(header.rfind("h_max,ndofs,", 0) == 0);
    CHECK(row1.find(",,,,") != std::string::npos); // first row has no rates
    CHECK(row2.find(",1,") != std::string::npos);  // rate 1.0 for both H1 errors
}

TEST_CASE("small data check reproduces hand arithmetic") {
    // criterion-1 configuration: |grad phi|_L3 = |grad g|_L3 = 1, range = 1
    ProblemData data = decoupled_benchmark_data();
    auto mesh = std::make_shared<Mesh>(unit_box_mesh(2, 4, x_slab_dirichlet()));
    Spaces spaces{std::make_shared<FunctionSpace>(mesh, 1),
                  std::make_shared<FunctionSpace>(mesh, 2)};
    PicardOptions opts;
    opts.tol = 1e-10;
    auto [state, report] = solve_joule(data, spaces, opts);
    REQUIRE(report.converged);

    SmallDataReport rep = small_data_check(state.phi, data, 1.0, 1.0, 1.0, 0.5);
    CHECK(rep.grad_phi_l3 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.grad_gphi_l3 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.c6 == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(rep.c5 == doctest::Approx(4.0).epsilon(1e-9)); // 1*1*2*1*max(1, 2)
    CHECK(rep.threshold == doctest::Approx(0.25 * 1.0 / (rep.c6 + 0.5)).epsilon(1e-12));
    CHECK(!rep.satisfied);

    // constant sigma: C7 = 0 makes C5 vanish and the check pass
    SmallDataReport zero = small_data_check(state.phi, data, 0.0, 1.0, 1.0, 0.5);
    CHECK(zero.c5 == 0.0);
    CHECK(zero.satisfied);

    // doubling C7 doubles C5 bit-exactly, C6 unchanged
    SmallDataReport twice = small_data_check(state.phi, data, 2.0, 1.0, 1.0, 0.5);
    CHECK(twice.c5 == 2.0 * rep.c5);
    CHECK(twice.c6 == rep.c6);

    CHECK_THROWS_AS(small_data_check(state.phi, data, 1.0, 1.0, 1.0, 1.5), ArgumentError);
    CHECK_THROWS_AS(small_data_check(state.phi, data, 1.0, 0.0, 1.0, 0.5), ArgumentError);

    // monotonicity in each input
    SmallDataReport c8_up = small_data_check(state.phi, data, 1.0, 2.0, 1.0, 0.5);
    SmallDataReport c9_up = small_data_check(state.phi, data, 1.0, 1.0, 2.0, 0.5);
    CHECK(c8_up.c5 >= rep.c5);
    CHECK(c9_up.c5 >= rep.c5);

    const std::string text = to_string(rep);
    CHECK(text.find("C5") != std::string::npos);
    CHECK(text.find("satisfied") != std::string::npos);
}

TEST_CASE("nodal overshoot") {
    auto mesh = std::make_shared<Mesh>(unit_box_mesh(2, 1, all_dirichlet()));
    auto space = std::make_shared<FunctionSpace>(mesh, 1);
    FeFunction f{space, {0.0, 0.5, 1.2, -0.3}};
    CHECK(nodal_overshoot(f, 0.0, 1.0) == doctest::Approx(0.5)); // 0.2 above + 0.3 below
    CHECK(nodal_overshoot(f, -1.0, 2.0) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("clamp activity dies out under refinement") {
    // manufactured potential with an interior peak at the declared upper
    // bound: the discrete solution may poke above it, on a vanishing fraction
    // of quadrature points
    std::ostringstream src;
    src.precision(17);
    src << "sin(" << M_PI << "*x)*sin(" << M_PI << "*y)";
    Expr phi_star = Expr::parse(src.str());
    Expr u_star = Expr::parse("16*x*y*(1-x)*(1-y)");
    Conductivity sigma = Conductivity::sigmoid(1.0, 0.1, 1.0);

    std::vector<double> active_fraction;
    for (int n : {4, 8, 16}) {
        auto mesh = std::make_shared<Mesh>(unit_box_mesh(2, n, all_dirichlet()));
        ProblemData data = mms_problem(phi_star, u_star, sigma, *mesh);
        Spaces spaces{std::make_shared<FunctionSpace>(mesh, 1),
                      std::make_shared<FunctionSpace>(mesh, 1)};
        PicardOptions opts;
        opts.tol = 1e-9;
        auto [state, report] = solve_joule(data, spaces, opts);
        REQUIRE(report.converged);

        QuadratureRule rule = simplex_quadrature(2, 4);
        long active = 0, total = 0;
        for (int c = 0; c < mesh->num_cells(); ++c)
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const double v = state.phi.eval(c, rule.points[q]);
                if (v < data.g_lo || v > data.g_hi) ++active;
                ++total;
            }
        active_fraction.push_back(static_cast<double>(active) / total);
    }
    CHECK(active_fraction.back() <= active_fraction.front() + 1e-12);
    CHECK(active_fraction.back() < 0.02);
}

TEST_CASE("interpolated exact solutions drive the estimator toward zero") {
    Mesh coarse = unit_box_mesh(2, 2, all_dirichlet());
    Conductivity sigma = Conductivity::constant(1.0);
    Expr phi_star = Expr::parse("x*x - y*y");
    Expr u_star = Expr::parse("x*y");
    ProblemData data = mms_problem(phi_star, u_star, sigma, coarse);

    double previous = -1.0;
    for (int n : {2, 4, 8}) {
        auto mesh = std::make_shared<Mesh>(unit_box_mesh(2, n, all_dirichlet()));
        auto space = std::make_shared<FunctionSpace>(mesh, 1);
        FeFunction phi = interpolate(space, field_of(phi_star));
        FeFunction u = interpolate(space, field_of(u_star));
        EstimatorReport rep = estimate(phi, u, data);
        if (previous > 0.0) CHECK(rep.weighted_total < previous);
        previous = rep.weighted_total;
    }
}
