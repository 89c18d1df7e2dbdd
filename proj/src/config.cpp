#include "joule/config.hpp"

#include "joule/errors.hpp"
#include "joule/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace joule {

// ---------------------------------------------------------------------------
// Predicate
// ---------------------------------------------------------------------------

Predicate Predicate::parse(std::string_view src) {
    Predicate pred;
    pred.source_ = std::string(src);
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    };
    auto word = [&](std::string_view w) {
        skip_ws();
        if (src.substr(pos, w.size()) == w) {
            pos += w.size();
            return true;
        }
        return false;
    };

    pred.or_of_ands_.emplace_back();
    for (;;) {
        Clause clause;
        std::size_t used = 0;
        clause.lhs = Expr::parse_prefix(src.substr(pos), used);
        pos += used;
        skip_ws();
        if (pos < src.size() && (src[pos] == '<' || src[pos] == '>' || src[pos] == '=')) {
            const char c = src[pos++];
            const bool eq = pos < src.size() && src[pos] == '=';
            if (eq) ++pos;
            clause.op = c == '<' ? (eq ? 1 : 0) : (c == '>' ? (eq ? 3 : 2) : 4);
            clause.rhs = Expr::parse_prefix(src.substr(pos), used);
            pos += used;
        }
        pred.or_of_ands_.back().push_back(std::move(clause));
        skip_ws();
        if (pos >= src.size()) break;
        if (word("&&") || word("&") || word("and")) continue;
        if (word("||") || word("|") || word("or")) {
            pred.or_of_ands_.emplace_back();
            continue;
        }
        throw ParseError("predicate: expected '&', '|' or end of input", pos);
    }
    if (pred.or_of_ands_.back().empty()) throw ParseError("predicate: trailing operator", pos);
    return pred;
}

bool Predicate::eval(const Vec3& p) const {
    for (const auto& conj : or_of_ands_) {
        bool all = true;
        for (const Clause& c : conj) {
            const double a = c.lhs.eval(p);
            bool ok = false;
            switch (c.op) {
                case -1: ok = a != 0.0; break;
                case 0: ok = a < c.rhs.eval(p); break;
                case 1: ok = a <= c.rhs.eval(p); break;
                case 2: ok = a > c.rhs.eval(p); break;
                case 3: ok = a >= c.rhs.eval(p); break;
                case 4: ok = a == c.rhs.eval(p); break;
            }
            if (!ok) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

double to_double(const std::string& key, const std::string& v) {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        int i = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

void assign(RunConfig& c, const std::string& key, const std::string& raw) {
    const std::string v = unquote(raw);
    if (key == "mesh.dimension") c.dimension = to_int(key, v);
    else if (key == "mesh.source") c.mesh_source = v;
    else if (key == "mesh.n") c.box_n = to_int(key, v);
    else if (key == "mesh.path") c.mesh_path = v;
    else if (key == "mesh.dirichlet_phi") c.dirichlet_phi = v;
    else if (key == "mesh.dirichlet_u") c.dirichlet_u = v;
    else if (key == "mesh.physical_tags") c.physical_tags = v;
    else if (key == "space.degree_phi") c.degree_phi = to_int(key, v);
    else if (key == "space.degree_u") c.degree_u = to_int(key, v);
    else if (key == "problem.sigma") c.sigma = v;
    else if (key == "problem.g_phi") c.g_phi = v;
    else if (key == "problem.g_u") c.g_u = v;
    else if (key == "problem.h") c.h = v;
    else if (key == "problem.kappa") c.kappa = v;
    else if (key == "problem.bounds") c.bounds = v;
    else if (key == "problem.g_lo") c.g_lo = to_double(key, v);
    else if (key == "problem.g_hi") c.g_hi = to_double(key, v);
    else if (key == "solver.tol") c.tol = to_double(key, v);
    else if (key == "solver.max_iterations") c.max_iterations = to_int(key, v);
    else if (key == "solver.damping") c.damping = to_double(key, v);
    else if (key == "adapt.theta") c.theta = to_double(key, v);
    else if (key == "adapt.max_levels") c.max_levels = to_int(key, v);
    else if (key == "adapt.target_total") c.target_total = to_double(key, v);
    else if (key == "study.levels") c.levels = to_int(key, v);
    else if (key == "mms.exact_phi") c.mms_phi = v;
    else if (key == "mms.exact_u") c.mms_u = v;
    else if (key == "output.directory") c.output = v;
    else if (key == "output.threads") c.threads = to_int(key, v);
    else if (key == "output.quiet") c.quiet = to_bool(key, v);
    else throw ConfigError("config: unknown key '" + key + "'");
}

} // namespace

RunConfig parse_config(std::istream& is) {
    RunConfig config;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (section.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": key outside any section");
        try {
            assign(config, section + "." + key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + " (line " + std::to_string(lineno) + ")");
        }
    }
    return config;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open '" + path + "'");
    return parse_config(is);
}

void apply_override(RunConfig& config, const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
    assign(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string serialize(const RunConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "[mesh]\n";
    os << "dimension = " << c.dimension << '\n';
    os << "source = " << c.mesh_source << '\n';
    os << "n = " << c.box_n << '\n';
    if (!c.mesh_path.empty()) os << "path = " << c.mesh_path << '\n';
    os << "dirichlet_phi = \"" << c.dirichlet_phi << "\"\n";
    os << "dirichlet_u = \"" << c.dirichlet_u << "\"\n";
    if (!c.physical_tags.empty()) os << "physical_tags = \"" << c.physical_tags << "\"\n";
    os << "[space]\n";
    os << "degree_phi = " << c.degree_phi << '\n';
    os << "degree_u = " << c.degree_u << '\n';
    os << "[problem]\n";
    os << "sigma = \"" << c.sigma << "\"\n";
    os << "g_phi = \"" << c.g_phi << "\"\n";
    os << "g_u = \"" << c.g_u << "\"\n";
    os << "h = \"" << c.h << "\"\n";
    os << "kappa = \"" << c.kappa << "\"\n";
    os << "bounds = " << c.bounds << '\n';
    os << "g_lo = " << c.g_lo << '\n';
    os << "g_hi = " << c.g_hi << '\n';
    os << "[solver]\n";
    os << "tol = " << c.tol << '\n';
    os << "max_iterations = " << c.max_iterations << '\n';
    os << "damping = " << c.damping << '\n';
    os << "[adapt]\n";
    os << "theta = " << c.theta << '\n';
    os << "max_levels = " << c.max_levels << '\n';
    os << "target_total = " << c.target_total << '\n';
    os << "[study]\n";
    os << "levels = " << c.levels << '\n';
    if (!c.mms_phi.empty() || !c.mms_u.empty()) {
        os << "[mms]\n";
        os << "exact_phi = \"" << c.mms_phi << "\"\n";
        os << "exact_u = \"" << c.mms_u << "\"\n";
    }
    os << "[output]\n";
    os << "directory = " << c.output << '\n';
    os << "threads = " << c.threads << '\n';
    os << "quiet = " << (c.quiet ? "true" : "false") << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

BoundaryTagger tagger_from_config(const RunConfig& config) {
    Predicate phi_pred = Predicate::parse(config.dirichlet_phi);
    Predicate u_pred = Predicate::parse(config.dirichlet_u);
    return [phi_pred, u_pred](const Vec3& c) {
        return std::make_pair(phi_pred.eval(c) ? PhiTag::dirichlet : PhiTag::neumann,
                              u_pred.eval(c) ? UTag::dirichlet : UTag::robin);
    };
}

namespace {

/// Parses "1 = dirichlet_phi dirichlet_u; 2 = neumann_phi robin_u".
std::map<int, std::pair<PhiTag, UTag>> parse_physical_tags(const std::string& mapping) {
    std::map<int, std::pair<PhiTag, UTag>> out;
    std::istringstream groups(mapping);
    std::string group;
    while (std::getline(groups, group, ';')) {
        group = trim(group);
        if (group.empty()) continue;
        std::size_t eq = group.find('=');
        if (eq == std::string::npos)
            throw ConfigError("physical_tags: expected '<id> = <phi tag> <u tag>' in '" + group + "'");
        int id = to_int("mesh.physical_tags", trim(group.substr(0, eq)));
        std::istringstream words(group.substr(eq + 1));
        std::string w1, w2;
        words >> w1 >> w2;
        auto phi_of = [&](const std::string& w) {
            if (w == "dirichlet_phi") return PhiTag::dirichlet;
            if (w == "neumann_phi") return PhiTag::neumann;
            throw ConfigError("physical_tags: unknown phi tag '" + w + "'");
        };
        auto u_of = [&](const std::string& w) {
            if (w == "dirichlet_u") return UTag::dirichlet;
            if (w == "robin_u") return UTag::robin;
            throw ConfigError("physical_tags: unknown u tag '" + w + "'");
        };
        out.emplace(id, std::make_pair(phi_of(w1), u_of(w2)));
    }
    if (out.empty()) throw ConfigError("physical_tags: no mappings given");
    return out;
}

} // namespace

Mesh mesh_from_config(const RunConfig& config) {
    if (config.mesh_source == "box")
        return unit_box_mesh(config.dimension, config.box_n, tagger_from_config(config));
    if (config.mesh_source == "file") {
        if (config.mesh_path.empty()) throw ConfigError("mesh.source = file requires mesh.path");
        std::ifstream is(config.mesh_path);
        if (!is) throw ConfigError("mesh: cannot open '" + config.mesh_path + "'");
        auto map = parse_physical_tags(config.physical_tags);
        return read_gmsh(is, config.dimension, [map](int physical) {
            auto it = map.find(physical);
            if (it == map.end())
                throw MeshError("gmsh physical group " + std::to_string(physical) +
                                " has no tag mapping");
            return it->second;
        });
    }
    throw ConfigError("mesh.source must be 'box' or 'file'");
}

Conductivity conductivity_from_config(const RunConfig& config) {
    std::istringstream ss(config.sigma);
    std::string family;
    ss >> family;
    if (family == "constant") {
        double s0 = 1.0;
        if (!(ss >> s0)) throw ConfigError("problem.sigma: constant needs one value");
        return Conductivity::constant(s0);
    }
    if (family == "sigmoid") {
        double a, b, c;
        if (!(ss >> a >> b >> c)) throw ConfigError("problem.sigma: sigmoid needs three values");
        return Conductivity::sigmoid(a, b, c);
    }
    if (family == "expr") {
        std::string rest;
        std::getline(ss, rest);
        return Conductivity::expression(Expr::parse(trim(unquote(trim(rest)))));
    }
    throw ConfigError("problem.sigma: unknown family '" + family + "'");
}

ProblemData problem_from_config(const RunConfig& config, const Mesh& mesh,
                                std::optional<ExactSolution>* exact) {
    if (exact) exact->reset();
    Conductivity sigma = conductivity_from_config(config);

    if (!config.mms_phi.empty() || !config.mms_u.empty()) {
        if (config.mms_phi.empty() || config.mms_u.empty())
            throw ConfigError("mms: both exact_phi and exact_u must be given");
        Expr phi = Expr::parse(config.mms_phi);
        Expr u = Expr::parse(config.mms_u);
        Expr kappa = config.kappa == "0" ? Expr() : Expr::parse(config.kappa);
        ProblemData data = mms_problem(phi, u, sigma, mesh, kappa);
        if (exact) *exact = ExactSolution{phi, u};
        return data;
    }

    ProblemData data;
    data.conductivity = sigma;
    Expr g_phi = Expr::parse(config.g_phi);
    if (g_phi.uses_var(3)) throw ConfigError("problem.g_phi may not depend on u");
    data.g_phi = field_of(g_phi);
    data.grad_g_phi = gradient_field_of(g_phi, mesh.dim());
    data.g_u = field_of(Expr::parse(config.g_u));
    data.h_robin = robin_field_of(Expr::parse(config.h));
    data.kappa = field_of(Expr::parse(config.kappa));
    if (config.bounds == "auto") {
        auto [lo, hi] = sample_dirichlet_bounds(mesh, data.g_phi);
        data.g_lo = lo;
        data.g_hi = hi;
    } else if (config.bounds == "explicit") {
        if (!(config.g_lo <= config.g_hi))
            throw ConfigError("problem.g_lo must not exceed problem.g_hi");
        data.g_lo = config.g_lo;
        data.g_hi = config.g_hi;
    } else {
        throw ConfigError("problem.bounds must be 'auto' or 'explicit'");
    }
    return data;
}

} // namespace joule
