#pragma once

// Upper half-plane model of the hyperbolic plane and its isometries,
// represented by unit-determinant 2x2 real matrices modulo sign.

#include <array>
#include <cmath>
#include <complex>
#include <optional>

#include "domlip/errors.hpp"

namespace domlip {

using Complex = std::complex<double>;

/// A point of the upper half-plane, z = x + iy with y > 0.
struct Point {
    double x = 0.0;
    double y = 1.0;

    Point() = default;
    Point(double x_, double y_) : x(x_), y(y_) {}
    explicit Point(Complex z) : x(z.real()), y(z.imag()) {}

    Complex z() const { return {x, y}; }
    bool valid() const { return std::isfinite(x) && std::isfinite(y) && y > 0.0; }
};

/// A point of the boundary circle: a real coordinate or the point at infinity.
struct BoundaryPoint {
    double coord = 0.0;
    bool at_infinity = false;

    static BoundaryPoint infinity() { return BoundaryPoint{0.0, true}; }
    static BoundaryPoint finite(double u) { return BoundaryPoint{u, false}; }

    bool operator==(const BoundaryPoint& o) const {
        if (at_infinity || o.at_infinity) return at_infinity == o.at_infinity;
        return coord == o.coord;
    }
};

enum class IsometryType { Identity, Elliptic, Parabolic, Hyperbolic };

inline const char* to_string(IsometryType t) {
    switch (t) {
        case IsometryType::Identity: return "Identity";
        case IsometryType::Elliptic: return "Elliptic";
        case IsometryType::Parabolic: return "Parabolic";
        case IsometryType::Hyperbolic: return "Hyperbolic";
    }
    return "?";
}

// |tr| within this of 2 counts as parabolic; fixed-point equations are
// ill-conditioned closer to the branch locus than this.
inline constexpr double kTraceTol = 1e-9;

/// Element of PSL(2,R): unit determinant, sign-normalized so the first
/// entry of (a,b,c,d) that is not numerically zero is positive.
struct Moebius {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    Moebius() = default;
    Moebius(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {
        normalize();
    }

    static Moebius identity() { return {}; }

    static Moebius diagonal(double lambda) { return {lambda, 0.0, 0.0, 1.0 / lambda}; }

    /// Hyperbolic translation of length t along the imaginary axis.
    static Moebius axial(double t) { return diagonal(std::exp(t / 2.0)); }

    /// z -> z + s.
    static Moebius horizontal(double s) { return {1.0, s, 0.0, 1.0}; }

    /// Rotation by angle phi about the point i.
    static Moebius rotation(double phi) {
        const double ch = std::cos(phi / 2.0), sh = std::sin(phi / 2.0);
        return {ch, sh, -sh, ch};
    }

    /// Translation of length t along the geodesic (-1, 1) through i.
    static Moebius cross_axial(double t) {
        const double ch = std::cosh(t / 2.0), sh = std::sinh(t / 2.0);
        return {ch, sh, sh, ch};
    }

    // Compensated 2x2 determinant: a*d and b*c cancel catastrophically for
    // large-entry products of unit-determinant factors.
    double det() const {
        const double w = b * c;
        const double e = std::fma(b, c, -w);
        return std::fma(a, d, -w) - e;
    }
    double trace() const { return a + d; }

    void normalize() {
        const double dt = det();
        if (!(dt > 0.0)) throw Error("Moebius: determinant must be positive");
        const double s = std::sqrt(dt);
        a /= s; b /= s; c /= s; d /= s;
        fix_sign();
    }

    void fix_sign() {
        const double eps = 1e-13 * frobenius();
        for (double v : {a, b, c, d}) {
            if (std::abs(v) > eps) {
                if (v < 0.0) { a = -a; b = -b; c = -c; d = -d; }
                return;
            }
        }
    }

    double frobenius() const { return std::sqrt(a * a + b * b + c * c + d * d); }

    Moebius inverse() const { return {d, -b, -c, a}; }

    Moebius operator*(const Moebius& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d,
                c * o.a + d * o.c, c * o.b + d * o.d};
    }

    Moebius conjugated_by(const Moebius& h) const { return h * (*this) * h.inverse(); }

    /// Frobenius distance to the nearer of +I, -I.
    double dist_to_identity() const {
        const double dp = std::hypot(std::hypot(a - 1, b), std::hypot(c, d - 1));
        const double dm = std::hypot(std::hypot(a + 1, b), std::hypot(c, d + 1));
        return std::min(dp, dm);
    }

    double dist_to(const Moebius& o) const {
        const double dp = std::hypot(std::hypot(a - o.a, b - o.b), std::hypot(c - o.c, d - o.d));
        const double dm = std::hypot(std::hypot(a + o.a, b + o.b), std::hypot(c + o.c, d + o.d));
        return std::min(dp, dm);
    }

    Complex apply(Complex z) const { return (a * z + b) / (c * z + d); }

    Point apply(const Point& p) const {
        const Complex w = apply(p.z());
        return Point(w.real(), std::abs(w.imag()));
    }

    BoundaryPoint apply(const BoundaryPoint& p) const {
        if (p.at_infinity) {
            if (std::abs(c) < 1e-300) return BoundaryPoint::infinity();
            return BoundaryPoint::finite(a / c);
        }
        const double denom = c * p.coord + d;
        if (std::abs(denom) < 1e-14 * (std::abs(c * p.coord) + std::abs(d) + 1e-300))
            return BoundaryPoint::infinity();
        return BoundaryPoint::finite((a * p.coord + b) / denom);
    }

    /// Complex derivative at z: 1/(cz+d)^2.
    Complex derivative(Complex z) const {
        const Complex q = c * z + d;
        return 1.0 / (q * q);
    }
};

/// Hyperbolic distance: arccosh(1 + |z-w|^2 / (2 Im z Im w)).
inline double dist(const Point& p, const Point& q) {
    const double dx = p.x - q.x, dy = p.y - q.y;
    const double u = 1.0 + (dx * dx + dy * dy) / (2.0 * p.y * q.y);
    return std::acosh(std::max(1.0, u));
}

inline IsometryType classify(const Moebius& g) {
    if (g.dist_to_identity() < kTraceTol) return IsometryType::Identity;
    const double t = std::abs(g.trace());
    if (std::abs(t - 2.0) <= kTraceTol) return IsometryType::Parabolic;
    return t < 2.0 ? IsometryType::Elliptic : IsometryType::Hyperbolic;
}

/// Translation length: 2 arccosh(|tr|/2) for hyperbolic elements, else 0.
inline double translation_length(const Moebius& g) {
    if (classify(g) != IsometryType::Hyperbolic) return 0.0;
    return 2.0 * std::acosh(std::abs(g.trace()) / 2.0);
}

/// Fixed points on the boundary of a hyperbolic element, as
/// (repelling, attracting).
inline std::pair<BoundaryPoint, BoundaryPoint> axis(const Moebius& g) {
    if (classify(g) != IsometryType::Hyperbolic)
        throw NotHyperbolic("axis: element is not hyperbolic");
    if (std::abs(g.c) < 1e-14 * g.frobenius()) {
        // Fixed points: infinity and b/(d-a).
        const BoundaryPoint fin = BoundaryPoint::finite(g.b / (g.d - g.a));
        const BoundaryPoint inf = BoundaryPoint::infinity();
        // Infinity is attracting iff |a| > |d|.
        if (std::abs(g.a) > std::abs(g.d)) return {fin, inf};
        return {inf, fin};
    }
    // Roots of c z^2 + (d-a) z - b = 0.
    const double disc = g.trace() * g.trace() - 4.0;
    const double sq = std::sqrt(std::max(0.0, disc));
    const double r1 = ((g.a - g.d) + sq) / (2.0 * g.c);
    const double r2 = ((g.a - g.d) - sq) / (2.0 * g.c);
    // Attracting fixed point x has |g'(x)| > ... derivative 1/(cx+d)^2, attracting iff |cx+d| > 1.
    const auto mult = [&](double x) { return std::abs(g.c * x + g.d); };
    if (mult(r1) > mult(r2)) return {BoundaryPoint::finite(r2), BoundaryPoint::finite(r1)};
    return {BoundaryPoint::finite(r1), BoundaryPoint::finite(r2)};
}

/// A Moebius map sending p to the point at infinity (an isometry).
inline Moebius send_to_infinity(const BoundaryPoint& p) {
    if (p.at_infinity) return Moebius::identity();
    // z -> -1/(z - p)
    return Moebius(0.0, -1.0, 1.0, -p.coord);
}

/// Busemann function B_{p,x0}(x), normalized so that B_{inf,i}(x+iy) = -ln y.
/// Level sets are horospheres tangent to p; B decreases toward p.
inline double busemann(const BoundaryPoint& p, const Point& x0, const Point& x) {
    const Moebius s = send_to_infinity(p);
    return -std::log(s.apply(x).y / s.apply(x0).y);
}

/// Point at parameter t >= 0 on the unit-speed geodesic ray from x toward p.
inline Point horoflow(const BoundaryPoint& p, double t, const Point& x) {
    const Moebius s = send_to_infinity(p);
    const Point u = s.apply(x);
    return s.inverse().apply(Point(u.x, u.y * std::exp(t)));
}

/// Angle of the hyperbolic comparison triangle with side lengths
/// (l_opp, l_1, l_2) at the vertex opposite to l_opp.
inline double comparison_angle(double l_opp, double l_1, double l_2) {
    if (!(l_1 > 0.0) || !(l_2 > 0.0) || !(l_opp >= 0.0))
        throw DegenerateTriangle("comparison_angle: side lengths must be positive");
    // cosh l_opp = cosh l1 cosh l2 - sinh l1 sinh l2 cos(angle)
    const double num = std::cosh(l_1) * std::cosh(l_2) - std::cosh(l_opp);
    const double den = std::sinh(l_1) * std::sinh(l_2);
    double c = num / den;
    const double tol = 1e-9 * (1.0 + std::abs(num) / den);
    if (c > 1.0 + tol || c < -1.0 - tol)
        throw DegenerateTriangle("comparison_angle: sides violate the triangle constraint");
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c);
}

/// Comparison angle at the vertex x of the triangle (x, y, z).
inline double angle_at_vertex(const Point& y, const Point& x, const Point& z) {
    const double d1 = dist(x, y), d2 = dist(x, z);
    if (d1 < 1e-14 || d2 < 1e-14)
        throw CoincidentPoints("angle_at_vertex: vertex coincides with an endpoint");
    const double dyz = dist(y, z);
    if (dyz < 1e-15) return 0.0;
    return comparison_angle(dyz, d1, d2);
}

/// Euclidean-unit direction at x of the geodesic ray toward the boundary
/// point p (hyperbolic angles equal Euclidean ones in this chart).
inline std::array<double, 2> ray_direction(const Point& x, const BoundaryPoint& p) {
    if (p.at_infinity) return {0.0, 1.0};
    const double u = p.coord;
    if (std::abs(u - x.x) < 1e-300 * (1.0 + std::abs(u))) {
        // Vertical ray downward.
        return {0.0, -1.0};
    }
    // Geodesic through x and u: semicircle centered at m on the real axis.
    const double m = (x.x * x.x + x.y * x.y - u * u) / (2.0 * (x.x - u));
    // Tangent to the circle at x, oriented toward u.
    double tx = x.y, ty = -(x.x - m);
    if ((u - x.x) * tx < 0.0) { tx = -tx; ty = -ty; }
    const double n = std::hypot(tx, ty);
    return {tx / n, ty / n};
}

/// Limit angle at x between the rays toward boundary points p and q;
/// defines the visual distance d_x on the boundary circle.
inline double boundary_angle(const BoundaryPoint& p, const Point& x, const BoundaryPoint& q) {
    if (p == q) throw EqualBoundaryPoints("boundary_angle: boundary points coincide");
    const auto dp = ray_direction(x, p);
    const auto dq = ray_direction(x, q);
    const double c = std::clamp(dp[0] * dq[0] + dp[1] * dq[1], -1.0, 1.0);
    return std::acos(c);
}

} // namespace domlip
