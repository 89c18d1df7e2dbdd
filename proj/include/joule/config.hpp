#pragma once

#include "joule/expr.hpp"
#include "joule/mesh.hpp"
#include "joule/problem.hpp"
#include "joule/verify.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace joule {

/// Boundary predicate over the facet centroid: comparisons of expressions
/// combined with & (and) and | (or); a bare expression counts as "nonzero".
class Predicate {
public:
    static Predicate parse(std::string_view src);
    bool eval(const Vec3& p) const;
    const std::string& source() const { return source_; }

private:
    struct Clause {
        Expr lhs;
        int op = -1; // -1 bare, 0 '<', 1 '<=', 2 '>', 3 '>=', 4 '='
        Expr rhs;
    };
    std::vector<std::vector<Clause>> or_of_ands_;
    std::string source_;
};

/// One run of the CLI, as read from the flat-section key/value config file.
struct RunConfig {
    // [mesh]
    int dimension = 2;
    std::string mesh_source = "box"; // box | file
    int box_n = 4;
    std::string mesh_path;
    std::string dirichlet_phi = "1"; // predicate over facet centroids
    std::string dirichlet_u = "1";
    std::string physical_tags; // "1 = dirichlet_phi dirichlet_u; 2 = neumann_phi robin_u"
    // [space]
    int degree_phi = 1;
    int degree_u = 1;
    // [problem]
    std::string sigma = "constant 1";
    std::string g_phi = "0";
    std::string g_u = "0";
    std::string h = "0";
    std::string kappa = "0";
    std::string bounds = "auto"; // auto | explicit
    double g_lo = 0.0;
    double g_hi = 0.0;
    // [solver]
    double tol = 1e-8;
    int max_iterations = 50;
    double damping = 1.0;
    // [adapt]
    double theta = 0.5;
    int max_levels = 10;
    double target_total = 0.0;
    // [study]
    int levels = 4;
    // [mms]
    std::string mms_phi;
    std::string mms_u;
    // [output]
    std::string output = "out";
    int threads = 1;
    bool quiet = false;
};

/// Throws ConfigError with the offending line/key. Unknown keys are rejected.
RunConfig parse_config(std::istream& is);
RunConfig parse_config_file(const std::string& path);
/// Applies one "section.key=value" override.
void apply_override(RunConfig& config, const std::string& assignment);
/// Canonical echo; parsing it back yields an equivalent RunConfig.
std::string serialize(const RunConfig& config);

/// Builders wired from the config.
BoundaryTagger tagger_from_config(const RunConfig& config);
Mesh mesh_from_config(const RunConfig& config);
Conductivity conductivity_from_config(const RunConfig& config);
/// Problem data; for mms configs the exact fields drive sources and data and
/// `exact` is filled in.
ProblemData problem_from_config(const RunConfig& config, const Mesh& mesh,
                                std::optional<ExactSolution>* exact = nullptr);

} // namespace joule
