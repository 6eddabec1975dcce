#pragma once

// Conversions between the upper half-plane, the Poincare disk and the
// Beltrami-Klein disk, with the Jacobians needed for pullback metrics.
// The Cayley map used here sends the base point i to the disk center.

#include <array>

#include "domlip/moebius.hpp"

namespace domlip {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

inline Mat2 mat2(double m00, double m01, double m10, double m11) {
    return {{{m00, m01}, {m10, m11}}};
}

inline Mat2 mat2_identity() { return mat2(1, 0, 0, 1); }

inline Mat2 mul(const Mat2& A, const Mat2& B) {
    return mat2(A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1],
                A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]);
}

inline Vec2 mul(const Mat2& A, const Vec2& v) {
    return {A[0][0] * v[0] + A[0][1] * v[1], A[1][0] * v[0] + A[1][1] * v[1]};
}

inline Mat2 transpose(const Mat2& A) {
    return mat2(A[0][0], A[1][0], A[0][1], A[1][1]);
}

inline double det(const Mat2& A) { return A[0][0] * A[1][1] - A[0][1] * A[1][0]; }

inline Mat2 inverse(const Mat2& A) {
    const double d = det(A);
    if (std::abs(d) < 1e-300) throw SingularSystem("inverse: 2x2 matrix is singular");
    return mat2(A[1][1] / d, -A[0][1] / d, -A[1][0] / d, A[0][0] / d);
}

/// Real 2x2 matrix of multiplication by the complex number w.
inline Mat2 conformal(Complex w) {
    return mat2(w.real(), -w.imag(), w.imag(), w.real());
}

// Half-plane <-> Poincare disk, w = (z - i)/(z + i).

inline Complex halfplane_to_disk(Complex z) { return (z - Complex(0, 1)) / (z + Complex(0, 1)); }

inline Complex disk_to_halfplane(Complex w) {
    return Complex(0, 1) * (1.0 + w) / (1.0 - w);
}

/// dw/dz of the Cayley map, as a complex number.
inline Complex halfplane_to_disk_deriv(Complex z) {
    const Complex q = z + Complex(0, 1);
    return Complex(0, 2) / (q * q);
}

// Poincare disk <-> Klein disk, u = 2w / (1 + |w|^2).

inline Vec2 disk_to_klein(Complex w) {
    const double r2 = std::norm(w);
    return {2.0 * w.real() / (1.0 + r2), 2.0 * w.imag() / (1.0 + r2)};
}

inline Complex klein_to_disk(const Vec2& u) {
    const double r2 = u[0] * u[0] + u[1] * u[1];
    const double s = 1.0 + std::sqrt(std::max(0.0, 1.0 - r2));
    return {u[0] / s, u[1] / s};
}

/// Real Jacobian d(Klein)/d(disk) at w.
inline Mat2 disk_to_klein_jacobian(Complex w) {
    const double r2 = std::norm(w);
    const double q = 1.0 + r2;
    const double a = 2.0 / q, b = 4.0 / (q * q);
    return mat2(a - b * w.real() * w.real(), -b * w.real() * w.imag(),
                -b * w.real() * w.imag(), a - b * w.imag() * w.imag());
}

inline Vec2 halfplane_to_klein(const Point& p) {
    return disk_to_klein(halfplane_to_disk(p.z()));
}

inline Point halfplane_from_klein(const Vec2& u) {
    const Complex z = disk_to_halfplane(klein_to_disk(u));
    return Point(z.real(), z.imag());
}

/// Real Jacobian d(Klein)/d(half-plane) at z.
inline Mat2 halfplane_to_klein_jacobian(Complex z) {
    const Complex w = halfplane_to_disk(z);
    return mul(disk_to_klein_jacobian(w), conformal(halfplane_to_disk_deriv(z)));
}

/// Klein-model metric tensor at u: I/(1-|u|^2) + u u^T/(1-|u|^2)^2.
inline Mat2 klein_metric(const Vec2& u) {
    const double r2 = u[0] * u[0] + u[1] * u[1];
    const double s = 1.0 - r2;
    if (s <= 0.0) throw SingularMetric("klein_metric: point outside the open disk");
    const double a = 1.0 / s, b = 1.0 / (s * s);
    return mat2(a + b * u[0] * u[0], b * u[0] * u[1],
                b * u[0] * u[1], a + b * u[1] * u[1]);
}

inline Vec2 apply_klein(const Moebius& g, const Vec2& u) {
    return halfplane_to_klein(g.apply(halfplane_from_klein(u)));
}

// Hyperboloid lift of Klein points; geodesic midpoints are linear here,
// so they commute with every isometry.

inline std::array<double, 3> klein_to_hyperboloid(const Vec2& u) {
    const double r2 = u[0] * u[0] + u[1] * u[1];
    const double t = 1.0 / std::sqrt(std::max(1e-300, 1.0 - r2));
    return {t, t * u[0], t * u[1]};
}

inline Vec2 hyperboloid_to_klein(const std::array<double, 3>& X) {
    return {X[1] / X[0], X[2] / X[0]};
}

inline Vec2 klein_midpoint(const Vec2& u, const Vec2& v) {
    const auto X = klein_to_hyperboloid(u);
    const auto Y = klein_to_hyperboloid(v);
    const std::array<double, 3> S = {X[0] + Y[0], X[1] + Y[1], X[2] + Y[2]};
    return hyperboloid_to_klein(S);
}

inline Point halfplane_midpoint(const Point& p, const Point& q) {
    return halfplane_from_klein(klein_midpoint(halfplane_to_klein(p), halfplane_to_klein(q)));
}

inline double dist_klein(const Vec2& u, const Vec2& v) {
    return dist(halfplane_from_klein(u), halfplane_from_klein(v));
}

} // namespace domlip
