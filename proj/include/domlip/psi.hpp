#pragma once

// The functional F(X) = E(X, j0) - E(X, rho) over Fenchel-Nielsen
// coordinates, its Hopf-difference gradient, minimization (the inverse of
// the map Psi), the forward map, and the verification identities.
//
// Smoothness of X -> F(X) across mesh rebuilds is obtained by transporting
// one reference mesh: the combinatorics are frozen and the vertices are
// moved by the harmonic map onto the new structure, so finite differences
// in X never see remeshing jumps.

#include <optional>

#include "domlip/fenchel_nielsen.hpp"
#include "domlip/lipschitz.hpp"

namespace domlip {

struct MeshParams {
    double target_edge = 0.35;
    SolveOptions solve;
};

struct FunctionalEval {
    FNCoords X;
    double E_j0 = 0.0;
    double E_rho = 0.0;
    double F = 0.0;                 // E_j0 - E_rho
    QuadDiff grad;                  // -Phi(X, j0) + Phi(X, rho)
    std::vector<double> grad_fd;    // optional finite-difference gradient
};

struct PsiResult {
    FNCoords argmin;
    double F_min = 0.0;
    double grad_norm_at_exit = 0.0;
    int iterations = 0;
    bool properness_warning = false;
    bool residual_floor = false;
    std::vector<FunctionalEval> path;
};

namespace detail {

/// One harmonic solve toward an arbitrary target representation, routed by
/// its reducibility type. Returns energy, Hopf differential and the map.
struct TargetSolve {
    double energy = 0.0;
    QuadDiff phi;
    EquivariantMap map;
    bool converged = true;
};

inline TargetSolve solve_toward(const Mesh& mesh, const SurfaceRep& target,
                                const EquivariantMap* warm = nullptr, SolveOptions opts = {}) {
    TargetSolve out;
    const auto pd = detect_parabolic(target);
    if (pd && pd->boundary) {
        auto [map, rep] = solve_harmonic_line(mesh, pd->m);
        out.energy = rep.total;
        out.map = std::move(map);
        out.phi = hopf_differential(out.map, mesh);
        return out;
    }
    if (pd && !pd->boundary) {
        // Common interior fixed point: the constant map is harmonic with
        // zero energy and vanishing Hopf differential.
        out.map = constant_init(mesh, target, TargetSpace::plane(), pd->interior_point);
        out.phi = QuadDiff(mesh.faces.size());
        return out;
    }
    const bool warm_ok =
        warm && warm->class_points.size() == static_cast<std::size_t>(mesh.num_classes);
    auto [map, rep] = warm_ok
                          ? solve_harmonic(mesh, target, TargetSpace::plane(), *warm, opts)
                          : solve_harmonic_cascade(mesh, target, TargetSpace::plane(), opts);
    out.energy = rep.total;
    out.converged = rep.converged;
    out.map = std::move(map);
    out.phi = hopf_differential(out.map, mesh);
    return out;
}

/// Moves the reference mesh onto the structure with holonomy jX: same
/// combinatorics, vertices replaced by their images under the harmonic
/// map, derived per-face data recomputed.
inline Mesh transport_mesh(const Mesh& ref, const SurfaceRep& jX,
                           const EquivariantMap* warm = nullptr, SolveOptions opts = {},
                           EquivariantMap* map_out = nullptr) {
    EquivariantMap init = warm && warm->class_points.size() == static_cast<std::size_t>(ref.num_classes)
                              ? *warm
                              : identity_init(ref, jX, TargetSpace::plane());
    init.rho = jX;
    auto [map, rep] = solve_harmonic(ref, jX, TargetSpace::plane(), init, opts);

    Mesh out;
    out.holonomy = jX;
    out.faces = ref.faces;
    out.pairings = ref.pairings;
    out.class_rep = ref.class_rep;
    out.class_word = ref.class_word;
    out.class_id = ref.class_id;
    out.num_classes = ref.num_classes;
    out.resolution = ref.resolution;
    out.vertices.reserve(ref.vertices.size());
    out.klein.reserve(ref.vertices.size());
    for (std::size_t v = 0; v < ref.vertices.size(); ++v) {
        const Point p = map.value(ref, static_cast<int>(v));
        out.vertices.push_back(p);
        out.klein.push_back(halfplane_to_klein(p));
    }
    out.conformal.reserve(out.faces.size());
    out.face_area.reserve(out.faces.size());
    for (std::size_t f = 0; f < out.faces.size(); ++f) {
        const auto& t = out.faces[f];
        const Complex zc = out.barycenter(static_cast<int>(f));
        out.conformal.push_back(1.0 / (zc.imag() * zc.imag()));
        out.face_area.push_back(std::numbers::pi -
                                angle_at_vertex(out.vertices[t[1]], out.vertices[t[0]], out.vertices[t[2]]) -
                                angle_at_vertex(out.vertices[t[0]], out.vertices[t[1]], out.vertices[t[2]]) -
                                angle_at_vertex(out.vertices[t[0]], out.vertices[t[2]], out.vertices[t[1]]));
    }
    if (map_out) *map_out = std::move(map);
    return out;
}

/// Shared state for repeated F evaluations around one base point: the
/// reference mesh plus warm starts for the three solve families.
struct EvalCache {
    Mesh ref;
    std::optional<EquivariantMap> warm_transport;
    std::optional<EquivariantMap> warm_j0;
    std::optional<EquivariantMap> warm_rho;
};

inline FunctionalEval eval_F_cached(EvalCache& cache, const FNCoords& X, const SurfaceRep& j0,
                                    const SurfaceRep& rho, const SolveOptions& opts,
                                    bool update_warm) {
    const SurfaceRep jX = fn_to_holonomy(X);
    EquivariantMap tmap;
    const Mesh mesh = transport_mesh(cache.ref, jX,
                                     cache.warm_transport ? &*cache.warm_transport : nullptr,
                                     opts, &tmap);
    TargetSolve s0 = solve_toward(mesh, j0, cache.warm_j0 ? &*cache.warm_j0 : nullptr, opts);
    TargetSolve sr = solve_toward(mesh, rho, cache.warm_rho ? &*cache.warm_rho : nullptr, opts);
    if (update_warm) {
        cache.warm_transport = tmap;
        cache.warm_j0 = s0.map;
        if (!sr.map.class_points.empty()) cache.warm_rho = sr.map;
    }

    FunctionalEval ev;
    ev.X = X;
    ev.E_j0 = s0.energy;
    ev.E_rho = sr.energy;
    ev.F = s0.energy - sr.energy;
    QuadDiff g(mesh.faces.size());
    for (std::size_t f = 0; f < g.phi.size(); ++f)
        g.phi[f] = -s0.phi.phi[f] + sr.phi.phi[f];
    ev.grad = std::move(g);
    return ev;
}

} // namespace detail

inline FunctionalEval eval_F(const FNCoords& X, const SurfaceRep& j0, const SurfaceRep& rho,
                             MeshParams params = {}) {
    if (!is_fuchsian(j0)) throw NotFuchsian("eval_F: j0 must be Fuchsian");
    detail::EvalCache cache{build_mesh(fn_to_holonomy(X), params.target_edge), {}, {}, {}};
    return detail::eval_F_cached(cache, X, j0, rho, params.solve, false);
}

/// Finite-difference gradient of F in FN coordinates around X, all
/// evaluations transported from the same reference mesh.
inline std::vector<double> fd_gradient(detail::EvalCache& cache, const FNCoords& X,
                                       const SurfaceRep& j0, const SurfaceRep& rho,
                                       double h, const SolveOptions& opts) {
    std::vector<double> g(X.dim());
    for (std::size_t k = 0; k < X.dim(); ++k) {
        FNCoords Xp = X, Xm = X;
        Xp.coord(k) += h;
        Xm.coord(k) -= h;
        const double Fp = detail::eval_F_cached(cache, Xp, j0, rho, opts, false).F;
        const double Fm = detail::eval_F_cached(cache, Xm, j0, rho, opts, false).F;
        g[k] = (Fp - Fm) / (2.0 * h);
    }
    return g;
}

struct GradientCheckReport {
    std::vector<double> fd;        // finite differences of F
    std::vector<double> paired;    // calibrated WP pairing per coordinate
    double calibration = 1.0;      // fitted global constant
    double max_relative_mismatch = 0.0;
};

/// Compares finite differences of F against the WP pairing of the
/// Hopf-difference gradient with the coordinate variations of the Hopf
/// identification, up to one global calibration constant fitted on the
/// data (the coordinate convention of the pairing is not pinned down by
/// any closed formula; sign and linearity are what is being verified).
inline GradientCheckReport wp_gradient_check(const FNCoords& X, const SurfaceRep& j0,
                                             const SurfaceRep& rho, double h = 1e-3,
                                             MeshParams params = {}) {
    if (!is_fuchsian(j0)) throw NotFuchsian("wp_gradient_check: j0 must be Fuchsian");
    detail::EvalCache cache{build_mesh(fn_to_holonomy(X), params.target_edge), {}, {}, {}};
    const SolveOptions& opts = params.solve;

    const FunctionalEval base = detail::eval_F_cached(cache, X, j0, rho, opts, true);
    const Mesh& mesh = cache.ref;

    GradientCheckReport rep;
    rep.fd = fd_gradient(cache, X, j0, rho, h, opts);

    // Coordinate variations of the Hopf identification: finite-difference
    // Jacobian of X -> Phi(X, j0) on the fixed reference mesh (the target
    // moves, the domain stays put, so the differentials are comparable
    // face by face).
    std::vector<QuadDiff> var;
    for (std::size_t k = 0; k < X.dim(); ++k) {
        FNCoords Xp = X, Xm = X;
        Xp.coord(k) += h;
        Xm.coord(k) -= h;
        const auto sp = detail::solve_toward(mesh, fn_to_holonomy(Xp),
                                             cache.warm_j0 ? &*cache.warm_j0 : nullptr, opts);
        const auto sm = detail::solve_toward(mesh, fn_to_holonomy(Xm),
                                             cache.warm_j0 ? &*cache.warm_j0 : nullptr, opts);
        QuadDiff d(mesh.faces.size());
        for (std::size_t f = 0; f < d.phi.size(); ++f)
            d.phi[f] = (sp.phi.phi[f] - sm.phi.phi[f]) / (2.0 * h);
        var.push_back(std::move(d));
    }

    rep.paired.resize(X.dim());
    for (std::size_t k = 0; k < X.dim(); ++k)
        rep.paired[k] = 2.0 * wp_pair(base.grad, var[k], mesh).real();

    // One global scalar between the two gradients, fitted by least squares.
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < X.dim(); ++k) {
        num += rep.fd[k] * rep.paired[k];
        den += rep.paired[k] * rep.paired[k];
    }
    rep.calibration = den > 0.0 ? num / den : 1.0;
    double scale = 0.0;
    for (double v : rep.fd) scale = std::max(scale, std::abs(v));
    for (std::size_t k = 0; k < X.dim(); ++k) {
        const double err = std::abs(rep.fd[k] - rep.calibration * rep.paired[k]);
        if (scale > 0.0)
            rep.max_relative_mismatch = std::max(rep.max_relative_mismatch, err / scale);
    }
    return rep;
}

struct MinimizeOptions {
    double fd_step = 1e-3;
    double grad_tol = 2e-4;     // on the FD gradient of F
    int max_iterations = 60;
    double min_length = 0.05;   // keep FN lengths clear of degeneration
    MeshParams mesh;
    bool keep_path = false;
};

/// Minimizes F over FN coordinates by finite-difference gradient descent
/// with Armijo backtracking; the result is the inverse map applied to j0.
/// The properness bound F >= (1 - upper Lip) E(X, j0) - slack is monitored
/// when an upper Lipschitz estimate is supplied.
inline PsiResult minimize_F(const SurfaceRep& j0, const SurfaceRep& rho, FNCoords init,
                            MinimizeOptions opts = {},
                            std::optional<double> upper_lip = std::nullopt) {
    if (!is_fuchsian(j0)) throw NotFuchsian("minimize_F: j0 must be Fuchsian");

    PsiResult out;
    FNCoords X = std::move(init);
    detail::EvalCache cache{build_mesh(fn_to_holonomy(X), opts.mesh.target_edge), {}, {}, {}};
    const SolveOptions& sopts = opts.mesh.solve;

    FunctionalEval cur = detail::eval_F_cached(cache, X, j0, rho, sopts, true);
    double step = 0.5;
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        if (upper_lip && cur.F < (1.0 - *upper_lip) * cur.E_j0 - 2e-2 * cur.E_j0)
            out.properness_warning = true;
        if (opts.keep_path) out.path.push_back(cur);

        const std::vector<double> g = fd_gradient(cache, X, j0, rho, opts.fd_step, sopts);
        double gnorm = 0.0;
        for (double v : g) gnorm += v * v;
        gnorm = std::sqrt(gnorm);
        out.grad_norm_at_exit = gnorm;
        if (gnorm <= opts.grad_tol) break;

        bool accepted = false;
        double a = step;
        for (int bt = 0; bt < 25; ++bt, a *= 0.5) {
            FNCoords trial = X;
            bool feasible = true;
            for (std::size_t k = 0; k < X.dim(); ++k) {
                trial.coord(k) -= a * g[k];
                if (k < trial.lengths.size() && trial.coord(k) < opts.min_length) feasible = false;
            }
            if (!feasible) continue;
            FunctionalEval ev;
            try { ev = detail::eval_F_cached(cache, trial, j0, rho, sopts, false); }
            catch (const Error&) { continue; }
            if (ev.F <= cur.F - 1e-4 * a * gnorm * gnorm) {
                X = trial;
                cur = std::move(ev);
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        step = std::min(2.0 * a, 2.0);

        // Re-center the transport on the accepted point so linearization
        // error does not accumulate along the path.
        cache.ref = build_mesh(fn_to_holonomy(X), opts.mesh.target_edge);
        cache.warm_transport.reset();
        cache.warm_j0.reset();
        cache.warm_rho.reset();
        cur = detail::eval_F_cached(cache, X, j0, rho, sopts, true);
    }
    out.argmin = X;
    out.F_min = cur.F;
    out.iterations = iter;
    if (opts.keep_path) out.path.push_back(cur);
    return out;
}

struct PsiForwardOptions {
    double fd_step = 1e-3;
    double rel_tol = 1e-3;      // on wp_norm(Phi(X,j) - Phi(X,rho))
    double abs_floor = 1e-8;    // times the mesh area
    int max_iterations = 60;
    double min_length = 0.05;
    MeshParams mesh;
};

/// The forward map: finds j with Phi(X, j) = Phi(X, rho) by minimizing the
/// squared WP distance between the two Hopf differentials on the fixed
/// mesh of X. Stalling above tolerance sets the residual_floor flag.
inline PsiResult psi_forward(const FNCoords& X, const SurfaceRep& rho,
                             PsiForwardOptions opts = {}) {
    const SurfaceRep jX = fn_to_holonomy(X);
    const Mesh mesh = build_mesh(jX, opts.mesh.target_edge);
    const SolveOptions& sopts = opts.mesh.solve;

    const detail::TargetSolve target = detail::solve_toward(mesh, rho, nullptr, sopts);
    const double target_norm = wp_norm(target.phi, mesh);
    const double tol = std::max(opts.rel_tol * target_norm, opts.abs_floor * mesh.total_area());

    std::optional<EquivariantMap> warm;
    const auto residual = [&](const FNCoords& Y, bool update_warm) {
        const auto s = detail::solve_toward(mesh, fn_to_holonomy(Y), warm ? &*warm : nullptr, sopts);
        if (update_warm && !s.map.class_points.empty()) warm = s.map;
        return wp_norm(s.phi - target.phi, mesh);
    };

    PsiResult out;
    FNCoords Y = X; // Psi is a perturbation of the identity in FN coords
    double r = residual(Y, true);
    double step = 0.5;
    int iter = 0;
    int stalls = 0; // consecutive iterations below 3% improvement
    for (; iter < opts.max_iterations && r > tol; ++iter) {
        const double r_enter = r;
        std::vector<double> g(Y.dim());
        double gnorm = 0.0;
        for (std::size_t k = 0; k < Y.dim(); ++k) {
            FNCoords Yp = Y, Ym = Y;
            Yp.coord(k) += opts.fd_step;
            Ym.coord(k) -= opts.fd_step;
            g[k] = (residual(Yp, false) * residual(Yp, false) -
                    residual(Ym, false) * residual(Ym, false)) /
                   (2.0 * opts.fd_step);
            gnorm += g[k] * g[k];
        }
        gnorm = std::sqrt(gnorm);
        if (gnorm < 1e-14) break;

        bool accepted = false;
        double a = step;
        for (int bt = 0; bt < 25; ++bt, a *= 0.5) {
            FNCoords trial = Y;
            bool feasible = true;
            for (std::size_t k = 0; k < Y.dim(); ++k) {
                trial.coord(k) -= a * g[k];
                if (k < trial.lengths.size() && trial.coord(k) < opts.min_length) feasible = false;
            }
            if (!feasible) continue;
            double rt;
            try { rt = residual(trial, false); }
            catch (const Error&) { continue; }
            if (rt * rt <= r * r - 1e-4 * a * gnorm * gnorm) {
                Y = trial;
                r = rt;
                residual(Y, true);
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        if (r > 0.97 * r_enter) {
            if (++stalls >= 2) { ++iter; break; }
        } else {
            stalls = 0;
        }
        step = std::min(2.0 * a, 2.0);
    }
    out.argmin = Y;
    out.F_min = r;
    out.grad_norm_at_exit = r;
    out.iterations = iter;
    out.residual_floor = r > tol;
    return out;
}

struct PropernessReport {
    std::vector<double> F;
    std::vector<double> bound; // (1 - upper) E(X, j0) - slack
    bool ok = true;
};

inline PropernessReport verify_properness_bound(const SurfaceRep& j0, const SurfaceRep& rho,
                                                const std::vector<FNCoords>& sample,
                                                double upper_lip, MeshParams params = {}) {
    PropernessReport rep;
    for (const FNCoords& X : sample) {
        const FunctionalEval ev = eval_F(X, j0, rho, params);
        const double slack = 2e-2 * ev.E_j0;
        rep.F.push_back(ev.F);
        rep.bound.push_back((1.0 - upper_lip) * ev.E_j0 - slack);
        if (ev.F < rep.bound.back()) rep.ok = false;
    }
    return rep;
}

struct EnergyIdentityReport {
    double lhs = 0.0;            // F(X2) on the transported mesh
    double rhs = 0.0;            // weighted density difference on the X1 mesh
    double relative_mismatch = 0.0;
    double F_X1 = 0.0;
    double F_X2 = 0.0;
    bool monotone = true;        // F(X2) >= F(X1)
};

/// Energy-comparison identity between a critical point X1 of F and any X2:
/// the difference of energies measured through X2 equals the X1 integral
/// of the density difference weighted by (1 - 4 ||Psi||^2 / e^2)^{-1/2},
/// where Psi and e belong to the harmonic map X1 -> X2.
inline EnergyIdentityReport verify_energy_identity(const FNCoords& X1, const FNCoords& X2,
                                                   const SurfaceRep& j0, const SurfaceRep& rho,
                                                   MeshParams params = {},
                                                   double critical_tol = 5e-2) {
    const SurfaceRep g1 = fn_to_holonomy(X1);
    const SurfaceRep g2 = fn_to_holonomy(X2);
    const Mesh mesh1 = build_mesh(g1, params.target_edge);
    const SolveOptions& opts = params.solve;

    const detail::TargetSolve s0 = detail::solve_toward(mesh1, j0, nullptr, opts);
    const detail::TargetSolve sr = detail::solve_toward(mesh1, rho, nullptr, opts);

    // Criticality of X1: the two Hopf differentials must agree. The scale
    // is the norm of a unit-density differential (sqrt of the area), the
    // natural magnitude of Phi at a generic non-critical point.
    const double mismatch = wp_norm(s0.phi - sr.phi, mesh1);
    if (mismatch > critical_tol * std::sqrt(mesh1.total_area()))
        throw NotCritical("verify_energy_identity: X1 is not a critical point of F");

    // Harmonic map w: X1 -> X2 supplies Psi and its energy density.
    EquivariantMap wmap;
    const Mesh mesh2 = detail::transport_mesh(mesh1, g2, nullptr, opts, &wmap);
    const QuadDiff psi = hopf_differential(wmap, mesh1);
    const EnergyReport wrep = total_energy(wmap, mesh1);

    // Per-face densities of the two maps out of X1 (relative to the
    // hyperbolic chart metric alpha |dz|^2).
    const EnergyReport rep0 = total_energy(s0.map, mesh1);
    const EnergyReport repr = total_energy(sr.map, mesh1);

    EnergyIdentityReport out;
    for (std::size_t f = 0; f < mesh1.faces.size(); ++f) {
        const double af = mesh1.conformal[f];
        const double e_w = wrep.density[f];
        const double psi2 = std::norm(psi.phi[f]) / (af * af);
        const double arg = 1.0 - 4.0 * psi2 / (e_w * e_w);
        if (!(arg > 1e-12))
            throw Error("verify_energy_identity: degenerate weight in the comparison integral");
        out.rhs += (rep0.density[f] - repr.density[f]) / std::sqrt(arg) * mesh1.face_area[f];
    }

    // Left side: F(X2) computed through the transported mesh.
    const detail::TargetSolve t0 = detail::solve_toward(mesh2, j0, nullptr, opts);
    const detail::TargetSolve tr = detail::solve_toward(mesh2, rho, nullptr, opts);
    out.lhs = t0.energy - tr.energy;
    out.F_X1 = s0.energy - sr.energy;
    out.F_X2 = out.lhs;
    out.monotone = out.F_X2 >= out.F_X1 - 1e-9 * (1.0 + std::abs(out.F_X1));
    const double denom = std::max({std::abs(out.lhs), std::abs(out.rhs), 1e-12});
    out.relative_mismatch = std::abs(out.lhs - out.rhs) / denom;
    return out;
}

struct ContinuityStep {
    FNCoords argmin;
    double displacement = 0.0; // FN sup-distance from the previous argmin
};

/// Warm-started minimizations along a path of (j0, rho) pairs; reports the
/// step-to-step displacement of the minimizer.
inline std::vector<ContinuityStep> minimizer_continuity_experiment(
    const std::vector<std::pair<SurfaceRep, SurfaceRep>>& path, FNCoords init,
    MinimizeOptions opts = {}) {
    std::vector<ContinuityStep> out;
    FNCoords cur = std::move(init);
    for (const auto& [j0, rho] : path) {
        const PsiResult res = minimize_F(j0, rho, cur, opts);
        ContinuityStep step;
        step.argmin = res.argmin;
        if (!out.empty()) {
            double d = 0.0;
            for (std::size_t k = 0; k < step.argmin.dim(); ++k)
                d = std::max(d, std::abs(step.argmin.coord(k) - out.back().argmin.coord(k)));
            step.displacement = d;
        }
        cur = res.argmin;
        out.push_back(std::move(step));
    }
    return out;
}

} // namespace domlip
