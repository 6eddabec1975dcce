// Acceptance battery: one pass/fail line per criterion, exit 0 iff all pass.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "domlip/lipschitz.hpp"
#include "domlip/psi.hpp"

using namespace domlip;

namespace {

constexpr double kPi = 3.14159265358979323846;

int failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int criterion, bool pass, const std::string& detail, double seconds) {
    std::printf("criterion %2d: %s  %s  [%.1fs]\n", criterion, pass ? "PASS" : "FAIL",
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

void run(int criterion, const std::string& label,
         const std::function<std::pair<bool, std::string>()>& body) {
    Timer timer;
    try {
        auto [pass, detail] = body();
        report(criterion, pass, label + ": " + detail, timer.seconds());
    } catch (const std::exception& e) {
        report(criterion, false, label + ": exception: " + e.what(), timer.seconds());
    }
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

FNCoords c0() { return FNCoords({2.0, 2.2, 2.4}, {0.3, -0.2, 0.5}); }

SurfaceRep elliptic_rep() {
    SurfaceRep r(SurfaceGroup(2));
    r.images = {Moebius::rotation(0.7), Moebius::rotation(-0.4), Moebius::rotation(1.1),
                Moebius::rotation(0.2)};
    return r;
}

SurfaceRep axis_rep(double s = 1.0) {
    SurfaceRep r(SurfaceGroup(2));
    r.images = {Moebius::axial(0.2 * s), Moebius::axial(-0.1 * s), Moebius::axial(0.15 * s),
                Moebius::axial(0.05 * s)};
    return r;
}

Point random_point(std::mt19937& rng, double span = 3.0) {
    std::uniform_real_distribution<double> ux(-span, span);
    std::uniform_real_distribution<double> uy(0.05, span);
    return Point(ux(rng), uy(rng));
}

} // namespace

int main() {
    run(1, "closed-form isometry suite", []() -> std::pair<bool, std::string> {
        std::mt19937 rng(1);
        double worst_len = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double lambda = 0.25 * k;
            const Moebius g{std::exp(lambda / 2), 0, 0, std::exp(-lambda / 2)};
            worst_len = std::max(worst_len, std::abs(translation_length(g) - lambda));
        }
        if (worst_len >= 1e-8) return {false, fmt("length error %.2e", worst_len)};

        const BoundaryPoint inf = BoundaryPoint::infinity();
        double worst_bus = 0.0;
        for (int k = 0; k < 100; ++k) {
            const Point x = random_point(rng);
            worst_bus = std::max(worst_bus,
                                 std::abs(busemann(inf, Point(0, 1), x) + std::log(x.y)));
        }
        if (worst_bus >= 1e-9) return {false, fmt("busemann error %.2e", worst_bus)};

        std::uniform_real_distribution<double> ut(0.0, 4.0), up(-2.0, 2.0);
        for (int k = 0; k < 1000; ++k) {
            const BoundaryPoint p =
                (k % 3 == 0) ? inf : BoundaryPoint::finite(up(rng));
            const Point a = random_point(rng), b = random_point(rng);
            const double t = ut(rng);
            const double d = dist(horoflow(p, t, a), horoflow(p, t, b));
            const double bus = std::abs(busemann(p, a, b));
            if (d < bus - 1e-9 || d > bus + std::exp(-t) * dist(a, b) + 1e-9)
                return {false, "horoflow contraction violated"};
        }
        return {true, fmt("len %.1e bus %.1e, 1000 contraction triples", worst_len, worst_bus)};
    });

    run(2, "comparison angles", []() -> std::pair<bool, std::string> {
        std::mt19937 rng(2);
        for (int k = 0; k < 1000; ++k) {
            const Point x = random_point(rng), y = random_point(rng), z = random_point(rng),
                        t = random_point(rng);
            if (dist(x, y) < 1e-3 || dist(x, z) < 1e-3 || dist(x, t) < 1e-3) continue;
            if (angle_at_vertex(y, x, t) >
                angle_at_vertex(y, x, z) + angle_at_vertex(z, x, t) + 1e-9)
                return {false, "angle triangle inequality violated"};
        }
        double s1 = 1.0, s2 = 1.2, s3 = 1.5;
        auto smallest_two = [](double a, double b, double c) {
            std::array<double, 3> v{a, b, c};
            std::sort(v.begin(), v.end());
            return std::pair{v[0], v[1]};
        };
        auto prev = smallest_two(comparison_angle(s1, s2, s3), comparison_angle(s2, s1, s3),
                                 comparison_angle(s3, s1, s2));
        for (int d = 0; d < 5; ++d) {
            s1 *= 2; s2 *= 2; s3 *= 2;
            const auto cur = smallest_two(comparison_angle(s1, s2, s3),
                                          comparison_angle(s2, s1, s3),
                                          comparison_angle(s3, s1, s2));
            if (cur.first >= prev.first || cur.second >= prev.second)
                return {false, "angle collapse not monotone"};
            prev = cur;
        }
        return {true, fmt("1000 quadruples, collapse to %.1e", prev.second)};
    });

    run(3, "area and identity energy", []() -> std::pair<bool, std::string> {
        const SurfaceRep j = fn_to_holonomy(c0());
        const double target = 4.0 * kPi;
        auto errors = [&](double edge) {
            const Mesh m = build_mesh(j, edge);
            const double ea = std::abs(m.total_area() - target) / target;
            const EquivariantMap id = identity_init(m, j, TargetSpace::plane());
            const double ee = std::abs(total_energy(id, m).total - target) / target;
            return std::pair{ea, ee};
        };
        const auto [a1, e1] = errors(0.1);
        const auto [a2, e2] = errors(0.05);
        const bool pass = a1 < 0.01 && e1 < 0.01 && a2 < a1 && e2 <= e1;
        return {pass, fmt("area err %.1e -> %.1e, energy err %.1e", a1, a2, e1)};
    });

    run(4, "harmonic identity solve", []() -> std::pair<bool, std::string> {
        const SurfaceRep j = fn_to_holonomy(c0());
        const Mesh m = build_mesh(j, 0.1);
        auto [map, rep] = solve_harmonic(m, j, TargetSpace::plane(),
                                         identity_init(m, j, TargetSpace::plane()));
        const QuadDiff phi = hopf_differential(map, m);
        double maxphi = 0.0, recon = 0.0;
        for (std::size_t f = 0; f < m.faces.size(); ++f) {
            maxphi = std::max(maxphi, std::abs(phi.phi[f]) / m.conformal[f]);
            const Mat2 h = pullback_metric(map, m, static_cast<int>(f));
            const double e =
                energy_density(h, mat2(m.conformal[f], 0, 0, m.conformal[f]));
            const Complex p = phi.phi[f];
            recon = std::max({recon,
                              std::abs(h[0][0] - e * m.conformal[f] - 2 * p.real()),
                              std::abs(h[1][1] - e * m.conformal[f] + 2 * p.real()),
                              std::abs(h[0][1] + 2 * p.imag())});
        }
        const bool pass = rep.gradient_norm < 1e-8 && maxphi < 1e-5 && recon < 1e-10;
        return {pass, fmt("gnorm %.1e maxphi %.1e recon %.1e", rep.gradient_norm, maxphi, recon)};
    });

    run(5, "euler class ledger", []() -> std::pair<bool, std::string> {
        if (euler_class(SurfaceRep::trivial(2)) != 0) return {false, "trivial not 0"};
        const SurfaceRep j = fn_to_holonomy(c0());
        if (euler_class(j) != 2) return {false, "holonomy not 2"};
        if (euler_class(apply_sigma(j)) != -2) return {false, "twisted not -2"};
        for (std::size_t k = 0; k < c0().dim(); ++k) {
            FNCoords cp = c0();
            cp.coord(k) += 1e-3;
            if (euler_class(fn_to_holonomy(cp)) != 2) return {false, "unstable under 1e-3"};
            if (euler_class(apply_sigma(fn_to_holonomy(cp))) != -2)
                return {false, "twisted unstable under 1e-3"};
        }
        return {true, "0 / 2 / -2, stable under 1e-3 coordinate shifts"};
    });

    run(6, "reducible detection", []() -> std::pair<bool, std::string> {
        const SurfaceRep ax = axis_rep(3.0);
        const auto pd = detect_parabolic(ax, 3);
        if (!pd || !pd->boundary) return {false, "common axis not detected"};
        double worst = 0.0;
        visit_ball(ax.group, 3, [&](const Word& w) {
            worst = std::max(worst, std::abs(std::abs(pd->m_of(w)) -
                                             translation_length(ax.evaluate(w))));
        });
        if (worst >= 1e-6) return {false, fmt("spectrum residual %.2e", worst)};
        if (detect_parabolic(fn_to_holonomy(c0())))
            return {false, "Fuchsian rep falsely detected"};
        return {true, fmt("morphism spectrum residual %.1e on radius-3 ball", worst)};
    });

    run(7, "domination verdicts", []() -> std::pair<bool, std::string> {
        const SurfaceRep j = fn_to_holonomy(c0());
        const Mesh m = build_mesh(j, 0.3);

        const DominationVerdict vt = check_domination(j, SurfaceRep::trivial(2), m, 4);
        if (vt.kind != DominationVerdict::Kind::StrictlyDominated)
            return {false, "trivial target not strictly dominated"};
        const DominationVerdict ve = check_domination(j, elliptic_rep(), m, 4);
        if (ve.kind != DominationVerdict::Kind::StrictlyDominated)
            return {false, "elliptic target not strictly dominated"};
        if (ve.lower > ve.upper + 1e-9) return {false, "bracket inverted"};

        const DominationVerdict vj = check_domination(j, j, m, 3);
        if (vj.kind != DominationVerdict::Kind::NotDominated || vj.witness_word.empty())
            return {false, "self-domination verdict wrong"};

        const SurfaceRep j2 = fn_to_holonomy(FNCoords({1.8, 2.4, 2.2}, {0.1, 0.0, 0.3}));
        double prev = 0.0;
        for (int radius = 2; radius <= 6; ++radius) {
            auto [lo, w] = lip_lower(j, j2, radius);
            if (lo < prev - 1e-15) return {false, "lower bound not monotone in radius"};
            prev = lo;
        }
        return {true, fmt("margins %.3f / %.3f, monotone lower to %.3f", vt.margin, ve.margin, prev)};
    });

    run(8, "gradient formula", []() -> std::pair<bool, std::string> {
        const SurfaceRep j0 = fn_to_holonomy(c0());
        MeshParams params;
        params.target_edge = 0.4;
        std::mt19937 rng(8);
        std::uniform_real_distribution<double> dl(1.9, 2.5), dt(-0.4, 0.4);
        double worst = 0.0;
        for (int k = 0; k < 3; ++k) {
            const FNCoords X({dl(rng), dl(rng), dl(rng)}, {dt(rng), dt(rng), dt(rng)});
            const GradientCheckReport rep =
                wp_gradient_check(X, j0, SurfaceRep::trivial(2), 1e-3, params);
            worst = std::max(worst, rep.max_relative_mismatch);
        }
        return {worst < 0.05, fmt("max mismatch %.4f over 3 points (tol 0.05)", worst)};
    });

    run(9, "inverse map identity case", []() -> std::pair<bool, std::string> {
        const SurfaceRep j0 = fn_to_holonomy(c0());
        MinimizeOptions opts;
        opts.mesh.target_edge = 0.4;
        const std::vector<FNCoords> inits = {
            FNCoords({1.8, 2.4, 2.2}, {0.1, 0.0, 0.3}),
            FNCoords({2.2, 2.0, 2.6}, {0.5, -0.4, 0.7}),
            FNCoords({2.1, 2.1, 2.3}, {0.3, -0.2, 0.5}),
        };
        std::vector<FNCoords> mins;
        double worst = 0.0;
        for (const FNCoords& init : inits) {
            const PsiResult res = minimize_F(j0, SurfaceRep::trivial(2), init, opts);
            for (std::size_t k = 0; k < c0().dim(); ++k)
                worst = std::max(worst, std::abs(res.argmin.coord(k) - c0().coord(k)));
            mins.push_back(res.argmin);
        }
        double spread = 0.0;
        for (std::size_t a = 0; a < mins.size(); ++a)
            for (std::size_t b = a + 1; b < mins.size(); ++b)
                for (std::size_t k = 0; k < c0().dim(); ++k)
                    spread = std::max(spread,
                                      std::abs(mins[a].coord(k) - mins[b].coord(k)));
        const bool pass = worst < 1e-3 && spread < 1e-2;
        return {pass, fmt("max error %.2e (tol 1e-3), spread %.2e (tol 1e-2)", worst, spread)};
    });

    run(10, "energy comparison identity", []() -> std::pair<bool, std::string> {
        const SurfaceRep j0 = fn_to_holonomy(c0());
        MeshParams params;
        params.target_edge = 0.4;
        std::mt19937 rng(42);
        std::uniform_real_distribution<double> du(-0.15, 0.15);
        double worst = 0.0;
        for (int k = 0; k < 3; ++k) {
            FNCoords X2 = c0();
            for (std::size_t i = 0; i < X2.dim(); ++i) X2.coord(i) += du(rng);
            const EnergyIdentityReport rep =
                verify_energy_identity(c0(), X2, j0, SurfaceRep::trivial(2), params);
            if (!rep.monotone) return {false, "F(X2) < F(X1)"};
            worst = std::max(worst, rep.relative_mismatch);
        }
        return {worst < 0.03, fmt("max mismatch %.4f over 3 targets (tol 0.03)", worst)};
    });

    run(11, "image of the forward map is dominated", []() -> std::pair<bool, std::string> {
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> dl(1.9, 2.5), dt(-0.4, 0.4);
        PsiForwardOptions opts;
        opts.mesh.target_edge = 0.4;
        const std::vector<SurfaceRep> rhos = {elliptic_rep(), axis_rep()};
        for (int k = 0; k < 3; ++k) {
            const FNCoords X({dl(rng), dl(rng), dl(rng)}, {dt(rng), dt(rng), dt(rng)});
            for (const SurfaceRep& rho : rhos) {
                const PsiResult res = psi_forward(X, rho, opts);
                const SurfaceRep jpsi = fn_to_holonomy(res.argmin);
                const Mesh m = build_mesh(jpsi, 0.3);
                const DominationVerdict v = check_domination(jpsi, rho, m, 4);
                if (v.kind != DominationVerdict::Kind::StrictlyDominated)
                    return {false, fmt("not dominated: upper %.4f", v.upper)};
            }
        }
        return {true, "strictly dominated for 3 points x 2 target families"};
    });

    run(12, "metric scaling law", []() -> std::pair<bool, std::string> {
        const SurfaceRep j = fn_to_holonomy(c0());
        LipEstimate est;
        est.lower = 0.8;
        est.upper = 1.2;
        const LipEstimate half = scaled_lip(est, 2.0);
        if (std::abs(half.lower - 0.4) > 1e-12 || std::abs(half.upper - 0.6) > 1e-12)
            return {false, "bounds not halved exactly"};
        if (verdict_from(est).kind != DominationVerdict::Kind::NotDominated)
            return {false, "unscaled verdict wrong"};
        if (verdict_from(half).kind != DominationVerdict::Kind::StrictlyDominated)
            return {false, "scaled verdict did not flip"};
        return {true, "(0.8, 1.2) -> (0.4, 0.6), verdict flips"};
    });

    std::printf("%s\n", failures == 0 ? "all criteria passed" : "FAILURES PRESENT");
    return failures == 0 ? 0 : 1;
}
