#pragma once

#include <array>
#include <cmath>

namespace joule {

/// Point / vector in up to three dimensions. 2D meshes keep z = 0.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator*(const Vec3& a, double s) { return s * a; }
inline Vec3& operator+=(Vec3& a, const Vec3& b) { a.x += b.x; a.y += b.y; a.z += b.z; return a; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Affine map x = v0 + J*xi from the reference simplex onto a physical cell.
/// Columns of J are the edge vectors v_i - v_0; the inverse transpose maps
/// reference gradients to physical ones.
struct AffineMap {
    Vec3 origin;
    double jac[3][3];     // column j = v_{j+1} - v_0 (unused rows/cols identity-padded)
    double inv[3][3];     // inverse of jac
    double det = 0.0;     // determinant of the dim x dim block
    int dim = 0;

    Vec3 to_physical(const Vec3& ref) const {
        Vec3 p = origin;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                p[i] += jac[i][j] * ref[j];
        return p;
    }

    Vec3 to_reference(const Vec3& phys) const {
        Vec3 d = phys - origin;
        Vec3 r;
        for (int i = 0; i < dim; ++i) {
            r[i] = 0.0;
            for (int j = 0; j < dim; ++j) r[i] += inv[i][j] * d[j];
        }
        return r;
    }

    /// Push a reference gradient forward: grad_x = J^{-T} grad_ref.
    Vec3 push_gradient(const Vec3& ref_grad) const {
        Vec3 g;
        for (int i = 0; i < dim; ++i) {
            g[i] = 0.0;
            for (int j = 0; j < dim; ++j) g[i] += inv[j][i] * ref_grad[j];
        }
        return g;
    }
};

} // namespace joule
