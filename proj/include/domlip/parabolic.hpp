#pragma once

// Detection of reducible representations: those whose image fixes a point
// of the closed hyperbolic plane. A boundary fixed point yields a real
// morphism m with |m| equal to the length spectrum; an interior fixed point
// forces the spectrum to vanish.

#include <cmath>
#include <optional>
#include <vector>

#include "domlip/representation.hpp"

namespace domlip {

struct ParabolicData {
    bool boundary = true;        // false: common fixed point is interior
    BoundaryPoint fixed_point;   // valid when boundary
    Point interior_point;       // valid when !boundary
    std::vector<double> m;       // morphism value per generator (zero when interior)

    double m_of(const Word& w) const {
        double s = 0.0;
        for (int l : w.letters) s += l > 0 ? m[l - 1] : -m[-l - 1];
        return s;
    }
};

/// Chordal distance between boundary points (diameter-2 circle metric);
/// well conditioned at infinity.
inline double boundary_chordal(const BoundaryPoint& p, const BoundaryPoint& q) {
    const auto embed = [](const BoundaryPoint& b) -> Complex {
        if (b.at_infinity) return {1.0, 0.0};
        return (Complex(b.coord, 0.0) - Complex(0, 1)) / (Complex(b.coord, 0.0) + Complex(0, 1));
    };
    return std::abs(embed(p) - embed(q));
}

inline bool fixes_boundary(const Moebius& g, const BoundaryPoint& p, double tol) {
    return boundary_chordal(g.apply(p), p) < tol;
}

/// Fixed points of a single non-identity map, boundary and interior.
inline void fixed_set(const Moebius& g, std::vector<BoundaryPoint>& bdry,
                      std::vector<Point>& interior) {
    const double tr = g.trace();
    const double disc = tr * tr - 4.0;
    if (std::abs(g.c) < 1e-13 * g.frobenius()) {
        bdry.push_back(BoundaryPoint::infinity());
        if (std::abs(g.d - g.a) > 1e-13 * g.frobenius())
            bdry.push_back(BoundaryPoint::finite(g.b / (g.d - g.a)));
        return;
    }
    if (disc >= -kTraceTol) {
        const double sq = std::sqrt(std::max(0.0, disc));
        bdry.push_back(BoundaryPoint::finite(((g.a - g.d) + sq) / (2.0 * g.c)));
        if (sq > kTraceTol)
            bdry.push_back(BoundaryPoint::finite(((g.a - g.d) - sq) / (2.0 * g.c)));
    } else {
        const double sq = std::sqrt(-disc);
        const double im = sq / (2.0 * g.c);
        interior.push_back(Point((g.a - g.d) / (2.0 * g.c), std::abs(im)));
    }
}

inline std::optional<ParabolicData> detect_parabolic(const SurfaceRep& rep, int radius = 3,
                                                     double tol = 1e-6) {
    if (relator_residual(rep) > tol)
        throw RelatorViolation("detect_parabolic: relator residual exceeds tolerance");

    const Point base(0.0, 1.0);
    std::vector<const Moebius*> nontrivial;
    for (const Moebius& g : rep.images)
        if (g.dist_to_identity() > tol) nontrivial.push_back(&g);

    ParabolicData data;
    data.m.assign(rep.images.size(), 0.0);

    if (nontrivial.empty()) {
        // Trivial representation: everything is fixed.
        data.boundary = false;
        data.interior_point = base;
        return data;
    }

    std::vector<BoundaryPoint> bdry;
    std::vector<Point> interior;
    fixed_set(*nontrivial.front(), bdry, interior);

    const auto fixed_by_all_bdry = [&](const BoundaryPoint& p) {
        for (const Moebius* g : nontrivial)
            if (!fixes_boundary(*g, p, tol)) return false;
        return true;
    };
    const auto fixed_by_all_interior = [&](const Point& p) {
        for (const Moebius* g : nontrivial)
            if (dist(g->apply(p), p) > tol) return false;
        return true;
    };

    std::optional<BoundaryPoint> common_bdry;
    for (const BoundaryPoint& p : bdry)
        if (fixed_by_all_bdry(p)) { common_bdry = p; break; }
    std::optional<Point> common_interior;
    if (!common_bdry)
        for (const Point& p : interior)
            if (fixed_by_all_interior(p)) { common_interior = p; break; }

    if (!common_bdry && !common_interior) return std::nullopt;

    if (common_interior) {
        data.boundary = false;
        data.interior_point = *common_interior;
    } else {
        data.boundary = true;
        data.fixed_point = *common_bdry;
        for (std::size_t i = 0; i < rep.images.size(); ++i)
            data.m[i] = busemann(data.fixed_point, base, rep.images[i].apply(base));
    }

    // The morphism must reproduce the length spectrum on the test ball.
    bool ok = true;
    visit_ball(rep.group, radius, [&](const Word& w) {
        if (!ok) return;
        const double l = translation_length(rep.evaluate(w));
        if (std::abs(std::abs(data.m_of(w)) - l) > tol) ok = false;
    });
    if (!ok) return std::nullopt;
    return data;
}

} // namespace domlip
