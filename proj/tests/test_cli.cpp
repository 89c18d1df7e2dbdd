#include "joule/config.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

// End-to-end runs of the installed binary; JOULE_CLI_PATH is injected by the
// build so the tests always exercise the freshly built executable.

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(JOULE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

void write_benchmark_config(const fs::path& file, const fs::path& out_dir,
                            const std::string& extra = "") {
    std::ofstream os(file);
    os << "[mesh]\n"
       << "dimension = 2\n"
       << "source = box\n"
       << "n = 4\n"
       << "dirichlet_phi = \"x < 1e-9 | x > 1 - 1e-9\"\n"
       << "dirichlet_u = \"x < 1e-9 | x > 1 - 1e-9\"\n"
       << "[space]\n"
       << "degree_phi = 1\n"
       << "degree_u = 2\n"
       << "[problem]\n"
       << "sigma = \"constant 1\"\n"
       << "g_phi = \"x\"\n"
       << "g_u = \"0\"\n"
       << "h = \"0\"\n"
       << "kappa = \"0\"\n"
       << "bounds = auto\n"
       << "[solver]\n"
       << "tol = 1e-9\n"
       << "[output]\n"
       << "directory = " << out_dir.string() << "\n"
       << "quiet = true\n"
       << extra;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("solve writes artifacts and reports the benchmark maximum") {
    TempDir tmp("joule_cli_solve");
    write_benchmark_config(tmp.path / "run.ini", tmp.path / "out");
    const int code = run_cli("solve --config " + (tmp.path / "run.ini").string());
    CHECK(code == 0);
    CHECK(fs::exists(tmp.path / "out" / "manifest.txt"));
    CHECK(fs::exists(tmp.path / "out" / "solution_phi.vtk"));
    CHECK(fs::exists(tmp.path / "out" / "solution_u.vtk"));
    const std::string manifest = slurp(tmp.path / "out" / "manifest.txt");
    CHECK(manifest.find("u_max: 0.125") != std::string::npos);
    CHECK(manifest.find("converged: yes") != std::string::npos);
}

TEST_CASE("manifest echoes a config that re-parses to the same run") {
    TempDir tmp("joule_cli_echo");
    write_benchmark_config(tmp.path / "run.ini", tmp.path / "out");
    REQUIRE(run_cli("solve --config " + (tmp.path / "run.ini").string() +
                    " --set solver.max_iterations=17") == 0);
    const std::string manifest = slurp(tmp.path / "out" / "manifest.txt");
    const std::string open_marker = "--- config ---\n";
    const std::string close_marker = "--- end config ---";
    auto b = manifest.find(open_marker);
    auto e = manifest.find(close_marker);
    REQUIRE(b != std::string::npos);
    REQUIRE(e != std::string::npos);
    std::istringstream is(manifest.substr(b + open_marker.size(), e - b - open_marker.size()));
    joule::RunConfig echoed = joule::parse_config(is);
    CHECK(echoed.max_iterations == 17);
    CHECK(joule::serialize(echoed) == manifest.substr(b + open_marker.size(), e - b - open_marker.size()));
}

TEST_CASE("estimate emits a deterministic csv") {
    TempDir tmp("joule_cli_estimate");
    write_benchmark_config(tmp.path / "run.ini", tmp.path / "out");
    REQUIRE(run_cli("estimate --config " + (tmp.path / "run.ini").string()) == 0);
    const std::string first = slurp(tmp.path / "out" / "estimators.csv");
    REQUIRE(run_cli("estimate --config " + (tmp.path / "run.ini").string()) == 0);
    const std::string second = slurp(tmp.path / "out" / "estimators.csv");
    CHECK(!first.empty());
    CHECK(first == second); // bit-identical reruns
    REQUIRE(run_cli("estimate --config " + (tmp.path / "run.ini").string() + " --threads 3") == 0);
    const std::string threaded = slurp(tmp.path / "out" / "estimators.csv");
    CHECK(first == threaded); // thread count does not change the output
}

TEST_CASE("study produces the convergence table") {
    TempDir tmp("joule_cli_study");
    write_benchmark_config(tmp.path / "run.ini", tmp.path / "out",
                           "[mms]\nexact_phi = \"x*y\"\nexact_u = \"x+y\"\n"
                           "[study]\nlevels = 2\n[space]\ndegree_phi = 1\ndegree_u = 1\n");
    const int code = run_cli("study --config " + (tmp.path / "run.ini").string() +
                             " --set mesh.n=2");
    CHECK(code == 0);
    const std::string csv = slurp(tmp.path / "out" / "convergence.csv");
    CHECK(csv.rfind("h_max,", 0) == 0);
    int lines = 0;
    for (char ch : csv)
        if (ch == '\n') ++lines;
    CHECK(lines == 3); // header + 2 levels
}

TEST_CASE("adapt dumps per-level artifacts") {
    TempDir tmp("joule_cli_adapt");
    write_benchmark_config(tmp.path / "run.ini", tmp.path / "out",
                           "[adapt]\ntheta = 0.5\nmax_levels = 2\n");
    CHECK(run_cli("adapt --config " + (tmp.path / "run.ini").string()) == 0);
    CHECK(fs::exists(tmp.path / "out" / "levels" / "level_0" / "estimators.csv"));
    CHECK(fs::exists(tmp.path / "out" / "levels" / "level_1" / "solution_u.vtk"));
    CHECK(fs::exists(tmp.path / "out" / "manifest.txt"));
}

TEST_CASE("the shipped l-shape config runs from the repository root") {
    // the config references configs/lshape.msh relative to the source tree
    const fs::path repo = JOULE_SOURCE_DIR;
    REQUIRE(fs::exists(repo / "configs" / "lshape.ini"));
    TempDir tmp("joule_cli_lshape");
    const std::string cmd = "cd " + repo.string() + " && " + std::string(JOULE_CLI_PATH) +
                            " adapt --config configs/lshape.ini --output " + tmp.path.string() +
                            " --set adapt.max_levels=3 --quiet > /dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(fs::exists(tmp.path / "levels" / "level_2" / "estimators.csv"));
}

TEST_CASE("exit codes distinguish failure classes") {
    TempDir tmp("joule_cli_errors");

    // malformed expression: config error (2) with a parse position
    write_benchmark_config(tmp.path / "bad_expr.ini", tmp.path / "out");
    {
        std::ofstream os(tmp.path / "bad_expr.ini", std::ios::app);
        os << "[mms]\nexact_phi = \"x+*y\"\nexact_u = \"0\"\n";
    }
    CHECK(run_cli("solve --config " + (tmp.path / "bad_expr.ini").string()) == 2);

    // missing config file
    CHECK(run_cli("solve --config " + (tmp.path / "missing.ini").string()) == 2);

    // Picard non-convergence (3)
    write_benchmark_config(tmp.path / "nc.ini", tmp.path / "out2",
                           "[solver]\ntol = 1e-300\nmax_iterations = 1\n");
    CHECK(run_cli("solve --config " + (tmp.path / "nc.ini").string()) == 3);

    // mesh error (4): gmsh file with an unmapped physical group
    {
        std::ofstream os(tmp.path / "square.msh");
        os << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n"
           << "$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n"
           << "$Elements\n6\n"
           << "1 1 2 10 1 1 2\n2 1 2 10 2 2 3\n3 1 2 20 3 3 4\n4 1 2 20 4 4 1\n"
           << "5 2 2 99 1 1 2 3\n6 2 2 99 1 1 3 4\n$EndElements\n";
        std::ofstream cfg(tmp.path / "file_mesh.ini");
        cfg << "[mesh]\ndimension = 2\nsource = file\npath = " << (tmp.path / "square.msh").string()
            << "\nphysical_tags = \"10 = dirichlet_phi dirichlet_u\"\n"
            << "[problem]\nsigma = \"constant 1\"\ng_phi = \"x\"\n"
            << "[output]\ndirectory = " << (tmp.path / "out3").string() << "\nquiet = true\n";
    }
    CHECK(run_cli("solve --config " + (tmp.path / "file_mesh.ini").string()) == 4);
}
