#include "joule/quadrature.hpp"

#include "joule/errors.hpp"

#include <cmath>

namespace joule {

void gauss_legendre(int n, std::vector<double>& points, std::vector<double>& weights) {
    points.resize(n);
    weights.resize(n);
    // Newton iteration on P_n over [-1,1], then map to [0,1].
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        points[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
}

QuadratureRule simplex_quadrature(int dim, int degree) {
    if (dim < 1 || dim > 3) throw ArgumentError("simplex_quadrature: dim must be 1, 2 or 3");
    if (degree < 0) throw ArgumentError("simplex_quadrature: degree must be nonnegative");
    QuadratureRule rule;
    rule.dim = dim;
    rule.degree = degree;

    auto npts = [](int poly_degree) { return (poly_degree + 2) / 2; }; // ceil((d+1)/2)

    if (dim == 1) {
        std::vector<double> x, w;
        gauss_legendre(npts(degree), x, w);
        for (std::size_t i = 0; i < x.size(); ++i) {
            rule.points.push_back({x[i], 0.0, 0.0});
            rule.weights.push_back(w[i]);
        }
        return rule;
    }

    if (dim == 2) {
        // x = s, y = t(1-s); Jacobian (1-s) raises the s-degree by one.
        std::vector<double> xs, ws, xt, wt;
        gauss_legendre(npts(degree + 1), xs, ws);
        gauss_legendre(npts(degree), xt, wt);
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (std::size_t j = 0; j < xt.size(); ++j) {
                double s = xs[i], t = xt[j];
                rule.points.push_back({s, t * (1.0 - s), 0.0});
                rule.weights.push_back(ws[i] * wt[j] * (1.0 - s));
            }
        return rule;
    }

    // x = s, y = t(1-s), z = r(1-s)(1-t); Jacobian (1-s)^2 (1-t).
    std::vector<double> xs, ws, xt, wt, xr, wr;
    gauss_legendre(npts(degree + 2), xs, ws);
    gauss_legendre(npts(degree + 1), xt, wt);
    gauss_legendre(npts(degree), xr, wr);
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < xt.size(); ++j)
            for (std::size_t k = 0; k < xr.size(); ++k) {
                double s = xs[i], t = xt[j], r = xr[k];
                rule.points.push_back({s, t * (1.0 - s), r * (1.0 - s) * (1.0 - t)});
                rule.weights.push_back(ws[i] * wt[j] * wr[k] * (1.0 - s) * (1.0 - s) * (1.0 - t));
            }
    return rule;
}

} // namespace joule
