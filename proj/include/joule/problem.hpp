#pragma once

#include "joule/expr.hpp"
#include "joule/geometry.hpp"
#include "joule/mesh.hpp"

#include <functional>
#include <optional>
#include <span>
#include <utility>

namespace joule {

using ScalarField = std::function<double(const Vec3&)>;
using VectorField = std::function<Vec3(const Vec3&)>;
/// Robin data may depend on the facet normal (needed by manufactured
/// solutions, where h = kappa*u + du/dnu).
using RobinField = std::function<double(const Vec3&, const Vec3& normal)>;

/// Temperature-dependent electrical conductivity with positive lower bound,
/// upper bound and Lipschitz constant of the derivative's supremum.
class Conductivity {
public:
    static Conductivity constant(double sigma0);
    /// sigma(u) = a + b*tanh(c*u)
    static Conductivity sigmoid(double a, double b, double c);
    /// Expression in the variable u; bounds and the Lipschitz constant are
    /// sampled over [u_min, u_max].
    static Conductivity expression(Expr e, double u_min = -50.0, double u_max = 50.0);

    double value(double u) const;
    double derivative(double u) const;
    /// Pointwise sigma and sigma' for a batch of temperatures. Throws
    /// DataError if an expression family produces a non-finite value.
    void eval(std::span<const double> u, std::span<double> sigma, std::span<double> dsigma) const;

    double lower() const { return lower_; }     // sigma_o
    double upper() const { return upper_; }     // sigma^o
    double lipschitz() const { return lipschitz_; } // C7 = sup |sigma'|

private:
    enum class Family { constant, sigmoid, expression };
    Family family_ = Family::constant;
    double a_ = 1.0, b_ = 0.0, c_ = 0.0;
    Expr expr_;
    double lower_ = 1.0, upper_ = 1.0, lipschitz_ = 0.0;
};

/// Full statement of one Joule heating problem: conductivity, boundary data,
/// Dirichlet bounds for the cutoff, and optional manufactured sources.
struct ProblemData {
    Conductivity conductivity;
    ScalarField g_phi;       // Dirichlet data for phi, given on all of the closure of Omega
    VectorField grad_g_phi;  // analytic gradient of g_phi
    ScalarField g_u;
    RobinField h_robin;
    ScalarField kappa;
    double g_lo = 0.0; // g_o
    double g_hi = 0.0; // g^o
    ScalarField f_phi; // empty unless manufactured
    ScalarField f_u;

    bool has_sources() const { return static_cast<bool>(f_phi) || static_cast<bool>(f_u); }
};

/// The truncation of the reformulated weak problem:
/// cutoff(f) = min(max(f + g_phi(x), g_lo), g_hi) - g_phi(x).
double cutoff(double f, double gphi_at_x, double g_lo, double g_hi);

/// Indicator used for the a.e. gradient of the cutoff: 1 where the clamp is
/// inactive (ties count as inactive), 0 where it clips.
double cutoff_grad_factor(double f_plus_gphi, double g_lo, double g_hi);

/// Samples g_phi at quadrature nodes of all DIRICHLET_PHI facets and returns
/// (min, max); used when the bounds are not user-declared.
std::pair<double, double> sample_dirichlet_bounds(const Mesh& mesh, const ScalarField& g_phi);

/// Convenience builders for fields.
ScalarField field_of(const Expr& e);
VectorField gradient_field_of(const Expr& e, int dim);
RobinField robin_field_of(const Expr& e);
ScalarField zero_field();

} // namespace joule
