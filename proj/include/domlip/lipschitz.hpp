#pragma once

// Two-sided bracketing of the minimal equivariant Lipschitz constant:
// length-spectrum ratios from below, the stretch of a solved harmonic map
// from above, with domination verdicts and the Thurston asymmetric
// distance built on top.

#include <cmath>
#include <unordered_set>

#include "domlip/harmonic.hpp"

namespace domlip {

struct LipEstimate {
    double lower = 0.0;
    double upper = 0.0;
    Word witness_word;              // achieves the lower bound
    EquivariantMap witness_map;     // achieves the upper bound
    int ball_radius = 0;
    double scale = 1.0;             // alpha of the target metric
};

struct DominationVerdict {
    enum class Kind { StrictlyDominated, NotDominated, Inconclusive };
    Kind kind = Kind::Inconclusive;
    double margin = 0.0;   // 1 - upper when strictly dominated
    Word witness_word;     // length-ratio certificate when not dominated
    double lower = 0.0;
    double upper = 0.0;
};

inline const char* to_string(DominationVerdict::Kind k) {
    switch (k) {
        case DominationVerdict::Kind::StrictlyDominated: return "StrictlyDominated";
        case DominationVerdict::Kind::NotDominated: return "NotDominated";
        default: return "Inconclusive";
    }
}

/// Max of l(rho(w)) / l(j(w)) over the ball, with the achieving word. A
/// certified lower bound for the Lipschitz constant: an equivariant
/// lambda-Lipschitz map contracts every translation length by lambda.
inline std::pair<double, Word> lip_lower(const SurfaceRep& j, const SurfaceRep& rho,
                                         int radius) {
    if (!is_fuchsian(j))
        throw NotFuchsian("lip_lower: the domain representation must be Fuchsian");

    double best = 0.0;
    Word witness;
    // Conjugate words share traces; skip repeated (tr j, tr rho) pairs.
    std::unordered_set<long long> seen;
    visit_ball(j.group, radius, [&](const Word& w) {
        if (w.letters.empty()) return;
        const Moebius gj = j.evaluate(w);
        const Moebius gr = rho.evaluate(w);
        const long long key = std::llround(gj.trace() * 1e7) * 1000003LL +
                              std::llround(gr.trace() * 1e7);
        if (!seen.insert(key).second) return;
        const double lj = translation_length(gj);
        if (lj <= 0.0)
            throw NotFuchsian("lip_lower: domain word with zero translation length");
        const double ratio = translation_length(gr) / lj;
        if (ratio > best) {
            best = ratio;
            witness = w;
        }
    });
    return {best, witness};
}

/// Parabolic (boundary-reducible) targets: lower bound from the morphism
/// spectrum, upper bound from the stretch of the line-valued harmonic
/// solution. Lip(j, rho) equals Lip(j, m) in this case.
inline LipEstimate lip_parabolic(const SurfaceRep& j, const ParabolicData& m,
                                 const Mesh& mesh, int radius = 6) {
    if (!is_fuchsian(j))
        throw NotFuchsian("lip_parabolic: the domain representation must be Fuchsian");
    LipEstimate est;
    est.ball_radius = radius;

    visit_ball(j.group, radius, [&](const Word& w) {
        if (w.letters.empty()) return;
        const double lj = translation_length(j.evaluate(w));
        if (lj <= 0.0)
            throw NotFuchsian("lip_parabolic: domain word with zero translation length");
        const double ratio = std::abs(m.m_of(w)) / lj;
        if (ratio > est.lower) {
            est.lower = ratio;
            est.witness_word = w;
        }
    });

    auto [map, rep] = solve_harmonic_line(mesh, m.m);
    double worst = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        worst = std::max(worst, face_stretch(map, mesh, static_cast<int>(f)));
    est.upper = worst;
    est.witness_map = std::move(map);
    return est;
}

/// Stretch of the solved equivariant map: an upper bound for the discrete
/// map's Lipschitz constant. Reroutes boundary-reducible targets to the
/// line solver.
inline std::pair<double, EquivariantMap> lip_upper(const SurfaceRep& j, const SurfaceRep& rho,
                                                   const Mesh& mesh,
                                                   TargetSpace target = TargetSpace::plane(),
                                                   SolveOptions opts = {}) {
    const auto pd = detect_parabolic(rho);
    if (pd && pd->boundary) {
        LipEstimate est = lip_parabolic(j, *pd, mesh, 3);
        return {est.upper / target.alpha, std::move(est.witness_map)};
    }

    auto [map, rep] = pd && !pd->boundary
                          ? solve_harmonic(mesh, rho, target,
                                           constant_init(mesh, rho, target, pd->interior_point),
                                           opts)
                          : solve_harmonic_cascade(mesh, rho, target, opts);
    double worst = 0.0;
    for (double s : rep.stretch) worst = std::max(worst, s);
    return {worst, std::move(map)};
}

inline LipEstimate lip_estimate(const SurfaceRep& j, const SurfaceRep& rho, const Mesh& mesh,
                                int radius = 6, TargetSpace target = TargetSpace::plane(),
                                SolveOptions opts = {}) {
    LipEstimate est;
    est.ball_radius = radius;
    est.scale = target.alpha;
    auto [lo, w] = lip_lower(j, rho, radius);
    est.lower = lo / target.alpha;
    est.witness_word = std::move(w);
    auto [up, map] = lip_upper(j, rho, mesh, target, opts);
    est.upper = up;
    est.witness_map = std::move(map);
    if (est.lower > est.upper + 1e-9)
        throw Error("lip_estimate: lower bound exceeded upper bound");
    return est;
}

/// Verdict from a computed bracket. The not-dominated side is an exact
/// length-spectrum certificate, so it is accepted at ratio >= 1 up to
/// rounding; the strictly-dominated side keeps a 1e-3 safety margin
/// because the upper bound carries mesh error.
inline DominationVerdict verdict_from(const LipEstimate& est) {
    DominationVerdict v;
    v.lower = est.lower;
    v.upper = est.upper;
    if (est.lower >= 1.0 - 1e-9) {
        v.kind = DominationVerdict::Kind::NotDominated;
        v.witness_word = est.witness_word;
    } else if (est.upper < 1.0 - 1e-3) {
        v.kind = DominationVerdict::Kind::StrictlyDominated;
        v.margin = 1.0 - est.upper;
    } else {
        v.kind = DominationVerdict::Kind::Inconclusive;
    }
    return v;
}

inline DominationVerdict check_domination(const SurfaceRep& j, const SurfaceRep& rho,
                                          const Mesh& mesh, int radius = 6,
                                          TargetSpace target = TargetSpace::plane(),
                                          SolveOptions opts = {}) {
    // The lower bound alone can certify non-domination without a solve.
    LipEstimate est;
    est.ball_radius = radius;
    est.scale = target.alpha;
    auto [lo, w] = lip_lower(j, rho, radius);
    est.lower = lo / target.alpha;
    est.witness_word = std::move(w);
    if (est.lower >= 1.0 - 1e-9) {
        est.upper = est.lower;
        return verdict_from(est);
    }
    auto [up, map] = lip_upper(j, rho, mesh, target, opts);
    est.upper = up;
    est.witness_map = std::move(map);
    if (est.lower > est.upper + 1e-9)
        throw Error("check_domination: lower bound exceeded upper bound");
    return verdict_from(est);
}

/// Rescaling the target metric by 1/alpha^2 divides every stretch, hence
/// both bounds, by alpha exactly.
inline LipEstimate scaled_lip(LipEstimate est, double alpha) {
    if (alpha < 1.0) throw Error("scaled_lip: alpha must be at least 1");
    est.lower /= alpha;
    est.upper /= alpha;
    est.scale *= alpha;
    return est;
}

/// Bracket of the Thurston asymmetric distance d(j, j') = log Lip(j, j').
inline std::pair<double, double> thurston_distance(const SurfaceRep& j, const SurfaceRep& jp,
                                                   const Mesh& mesh, int radius = 6,
                                                   SolveOptions opts = {}) {
    if (!is_fuchsian(jp))
        throw NotFuchsian("thurston_distance: both representations must be Fuchsian");
    const LipEstimate est = lip_estimate(j, jp, mesh, radius, TargetSpace::plane(), opts);
    return {std::log(est.lower), std::log(est.upper)};
}

/// Bounds along a path of targets; reports the largest jump of each bound
/// between consecutive steps.
struct ContinuityRow {
    double lower = 0.0;
    double upper = 0.0;
};

struct ContinuityTable {
    std::vector<ContinuityRow> rows;
    double max_lower_jump = 0.0;
    double max_upper_jump = 0.0;
};

inline ContinuityTable lip_continuity_probe(const SurfaceRep& j,
                                            const std::vector<SurfaceRep>& rho_path,
                                            const Mesh& mesh, int radius = 6,
                                            SolveOptions opts = {}) {
    ContinuityTable table;
    for (const SurfaceRep& rho : rho_path) {
        auto [lo, w] = lip_lower(j, rho, radius);
        auto [up, map] = lip_upper(j, rho, mesh, TargetSpace::plane(), opts);
        table.rows.push_back({lo, up});
        const std::size_t n = table.rows.size();
        if (n > 1) {
            table.max_lower_jump = std::max(table.max_lower_jump,
                                            std::abs(table.rows[n - 1].lower - table.rows[n - 2].lower));
            table.max_upper_jump = std::max(table.max_upper_jump,
                                            std::abs(table.rows[n - 1].upper - table.rows[n - 2].upper));
        }
    }
    return table;
}

} // namespace domlip
