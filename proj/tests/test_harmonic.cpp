#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "domlip/fenchel_nielsen.hpp"
#include "domlip/harmonic.hpp"

using namespace domlip;

namespace {

constexpr double kPi = 3.14159265358979323846;

const SurfaceRep& holonomy() {
    static SurfaceRep j = fn_to_holonomy(FNCoords({2.0, 2.2, 2.4}, {0.3, -0.2, 0.5}));
    return j;
}

const Mesh& mesh02() {
    static Mesh m = build_mesh(holonomy(), 0.2);
    return m;
}

const Mesh& mesh03() {
    static Mesh m = build_mesh(holonomy(), 0.3);
    return m;
}

struct IdentitySolve {
    EquivariantMap map;
    EnergyReport report;
};

const IdentitySolve& identity_solve() {
    static IdentitySolve s = [] {
        SolveOptions opts;
        opts.keep_log = true;
        auto [m, r] = solve_harmonic(mesh02(), holonomy(), TargetSpace::plane(),
                                     identity_init(mesh02(), holonomy(), TargetSpace::plane()),
                                     opts);
        return IdentitySolve{std::move(m), std::move(r)};
    }();
    return s;
}

} // namespace

TEST_CASE("energy density closed forms") {
    const Mat2 g = mat2(2.0, 0.3, 0.3, 1.5);
    CHECK(energy_density(g, g) == Catch::Approx(1.0).margin(1e-14));
    CHECK(energy_density(mat2(0, 0, 0, 0), g) == 0.0);
    Mat2 h = g;
    for (auto& row : h)
        for (auto& x : row) x *= 3.7;
    CHECK(energy_density(h, g) == Catch::Approx(3.7).margin(1e-12));
    CHECK_THROWS_AS(energy_density(g, mat2(1, 1, 1, 1)), SingularMetric);
}

TEST_CASE("pullback of the identity map is conformal") {
    const Mesh& m = mesh03();
    const EquivariantMap id = identity_init(m, m.holonomy, TargetSpace::plane());
    for (std::size_t f = 0; f < m.faces.size(); f += 17) {
        const Mat2 h = pullback_metric(id, m, static_cast<int>(f));
        const double a = m.conformal[f];
        CHECK(h[0][0] == Catch::Approx(a).epsilon(1e-6));
        CHECK(h[1][1] == Catch::Approx(a).epsilon(1e-6));
        CHECK(std::abs(h[0][1]) < 1e-6 * a);
    }
}

TEST_CASE("pullback of a constant map vanishes") {
    const Mesh& m = mesh03();
    const EquivariantMap c =
        constant_init(m, SurfaceRep::trivial(2), TargetSpace::plane(), Point(0.3, 1.2));
    for (std::size_t f = 0; f < m.faces.size(); f += 29) {
        const Mat2 h = pullback_metric(c, m, static_cast<int>(f));
        CHECK(std::abs(h[0][0]) < 1e-12);
        CHECK(std::abs(h[1][1]) < 1e-12);
        CHECK(std::abs(h[0][1]) < 1e-12);
    }
    CHECK(total_energy(c, m).total == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("pullback and energy are invariant under target isometries") {
    const Mesh& m = mesh03();
    const EquivariantMap id = identity_init(m, m.holonomy, TargetSpace::plane());
    const Moebius g = Moebius::horizontal(0.7) * Moebius::axial(0.4) * Moebius::rotation(0.9);

    EquivariantMap moved = id;
    moved.rho = id.rho.conjugated_by(g);
    for (Point& p : moved.class_points) p = g.apply(p);

    const double e0 = total_energy(id, m).total;
    const double e1 = total_energy(moved, m).total;
    CHECK(e1 == Catch::Approx(e0).epsilon(1e-8));
    for (std::size_t f = 0; f < m.faces.size(); f += 41) {
        const Mat2 h0 = pullback_metric(id, m, static_cast<int>(f));
        const Mat2 h1 = pullback_metric(moved, m, static_cast<int>(f));
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                CHECK(h1[r][c] == Catch::Approx(h0[r][c]).margin(1e-8 * m.conformal[f]));
    }
}

TEST_CASE("identity energy recovers the area") {
    const Mesh& m = mesh03();
    const EquivariantMap id = identity_init(m, m.holonomy, TargetSpace::plane());
    CHECK(total_energy(id, m).total == Catch::Approx(4.0 * kPi).epsilon(0.01));
}

TEST_CASE("identity solve converges to the identity map") {
    const auto& [map, rep] = identity_solve();
    CHECK(rep.converged);
    CHECK(rep.gradient_norm < 1e-8);
    CHECK(rep.total == Catch::Approx(4.0 * kPi).epsilon(0.01));

    const QuadDiff phi = hopf_differential(map, mesh02());
    double worst = 0.0;
    for (std::size_t f = 0; f < mesh02().faces.size(); ++f)
        worst = std::max(worst, std::abs(phi.phi[f]) / mesh02().conformal[f]);
    CHECK(worst < 1e-5);

    // Energy sequence is non-increasing up to rounding.
    for (std::size_t k = 1; k < rep.log.size(); ++k)
        CHECK(rep.log[k].energy <= rep.log[k - 1].energy + 1e-12 * (1.0 + rep.log[k].energy));
}

TEST_CASE("hopf differential reconstructs the pullback metric") {
    const auto& [map, rep] = identity_solve();
    const Mesh& m = mesh02();
    const QuadDiff phi = hopf_differential(map, m);
    const EnergyReport er = total_energy(map, m);
    for (std::size_t f = 0; f < m.faces.size(); f += 13) {
        const Mat2 h = pullback_metric(map, m, static_cast<int>(f));
        const double e = energy_density(h, mat2(m.conformal[f], 0, 0, m.conformal[f]));
        const Complex p = phi.phi[f];
        // h = e*alpha*I + [[2 Re p, -2 Im p], [-2 Im p, -2 Re p]]
        CHECK(h[0][0] == Catch::Approx(e * m.conformal[f] + 2.0 * p.real()).margin(1e-10));
        CHECK(h[1][1] == Catch::Approx(e * m.conformal[f] - 2.0 * p.real()).margin(1e-10));
        CHECK(h[0][1] == Catch::Approx(-2.0 * p.imag()).margin(1e-10));
        CHECK(er.pullback[f][0][0] == Catch::Approx(h[0][0]).margin(1e-12));
    }
}

TEST_CASE("first order optimality at the solution") {
    const auto& [map, rep] = identity_solve();
    const Mesh& m = mesh02();
    std::mt19937 gen(7);
    std::uniform_int_distribution<int> pick(0, m.num_classes - 1);
    std::uniform_real_distribution<double> dir(-1.0, 1.0);
    const double base = total_energy(map, m).total;
    const double eps = 1e-6;
    for (int k = 0; k < 20; ++k) {
        EquivariantMap up = map, dn = map;
        const int c = pick(gen);
        const double dx = dir(gen), dy = dir(gen);
        const double y = map.class_points[c].y;
        up.class_points[c].x += eps * dx * y;
        up.class_points[c].y += eps * dy * y;
        dn.class_points[c].x -= eps * dx * y;
        dn.class_points[c].y -= eps * dy * y;
        const double d = (total_energy(up, m).total - total_energy(dn, m).total) / (2 * eps);
        CHECK(std::abs(d) < 1e-4 * (1.0 + base));
    }
}

TEST_CASE("equivariance of the solved map") {
    const auto& [map, rep] = identity_solve();
    const Mesh& m = mesh02();
    for (const EdgePairing& p : m.pairings) {
        const Moebius g = map.rho.evaluate(p.word);
        for (int k = 0; k < 2; ++k) {
            const Point src = map.value(m, p.src[k]);
            const Point dst = map.value(m, p.dst[k]);
            CHECK(dist(g.apply(src), dst) < 1e-9);
        }
    }
}

TEST_CASE("maps toward a trivial or elliptic target collapse") {
    const Mesh& m = mesh03();
    auto [mt, rt] = solve_harmonic(m, SurfaceRep::trivial(2), TargetSpace::plane(),
                                   constant_init(m, SurfaceRep::trivial(2), TargetSpace::plane()));
    CHECK(rt.total < 1e-10);

    SurfaceRep rot(SurfaceGroup(2));
    rot.images = {Moebius::rotation(0.3), Moebius::rotation(0.7), Moebius::rotation(1.1),
                  Moebius::rotation(0.2)};
    auto [me, re] = solve_harmonic(m, rot, TargetSpace::plane(),
                                   constant_init(m, rot, TargetSpace::plane()));
    CHECK(re.total < 1e-10);
    for (const Point& p : me.class_points) CHECK(dist(p, Point(0, 1)) < 1e-4);
}

TEST_CASE("rescaled targets rescale the energy") {
    const Mesh& m = mesh03();
    const TargetSpace t1 = TargetSpace::plane();
    const TargetSpace t2 = TargetSpace::plane(2.0);
    auto [m1, r1] = solve_harmonic(m, m.holonomy, t1, identity_init(m, m.holonomy, t1));
    auto [m2, r2] = solve_harmonic(m, m.holonomy, t2, identity_init(m, m.holonomy, t2));
    CHECK(r2.total == Catch::Approx(r1.total / 4.0).epsilon(1e-8));
    for (std::size_t f = 0; f < m.faces.size(); f += 53) {
        const Mat2 h1 = pullback_metric(m1, m, static_cast<int>(f));
        const Mat2 h2 = pullback_metric(m2, m, static_cast<int>(f));
        CHECK(h2[0][0] == Catch::Approx(h1[0][0] / 4.0).margin(1e-8 * m.conformal[f]));
    }
}

TEST_CASE("line valued solves") {
    const Mesh& m = mesh03();
    auto [z, rz] = solve_harmonic_line(m, {0, 0, 0, 0});
    CHECK(rz.total < 1e-12);

    auto [u1, r1] = solve_harmonic_line(m, {1, 0, 0, 0});
    auto [u3, r3] = solve_harmonic_line(m, {3, 0, 0, 0});
    CHECK(r3.total == Catch::Approx(9.0 * r1.total).epsilon(1e-8));
    for (std::size_t c = 0; c < u1.class_values.size(); c += 11)
        CHECK(u3.class_values[c] == Catch::Approx(3.0 * u1.class_values[c]).margin(1e-7));

    // Jump constraints across pairings.
    for (const EdgePairing& p : m.pairings) {
        double jump = 0.0;
        for (int l : p.word.letters) jump += l > 0 ? u1.morphism[l - 1] : -u1.morphism[-l - 1];
        for (int k = 0; k < 2; ++k)
            CHECK(u1.line_value(m, p.dst[k]) ==
                  Catch::Approx(u1.line_value(m, p.src[k]) + jump).margin(1e-9));
    }

    // Refinement self-consistency of the line energy.
    auto [uf, rf] = solve_harmonic_line(build_mesh(holonomy(), 0.15), {1, 0, 0, 0});
    CHECK(rf.total == Catch::Approx(r1.total).epsilon(0.02));

    CHECK_THROWS(solve_harmonic_line(m, {1, 0}));
}

TEST_CASE("holomorphicity residual separates fields") {
    const Mesh& m = mesh02();
    const QuadDiff phi = hopf_differential(identity_solve().map, m);
    CHECK(holomorphicity_residual(phi, m) < 1e-5);

    // A z-bar proportional field has order-one residual.
    QuadDiff zbar;
    zbar.phi.resize(m.faces.size());
    for (std::size_t f = 0; f < m.faces.size(); ++f)
        zbar.phi[f] = std::conj(m.barycenter(static_cast<int>(f))) * m.conformal[f];
    CHECK(holomorphicity_residual(zbar, m) > 0.2);

    // A holomorphic polynomial field stays near the noise floor.
    QuadDiff holo;
    holo.phi.resize(m.faces.size());
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const Complex z = m.barycenter(static_cast<int>(f));
        holo.phi[f] = (z * z + Complex(0.5, -0.3)) * m.conformal[f];
    }
    CHECK(holomorphicity_residual(holo, m) < 0.05);
}

TEST_CASE("map transfer between meshes preserves positions") {
    const Mesh& c = mesh03();
    const Mesh& f = mesh02();
    const EquivariantMap id = identity_init(c, c.holonomy, TargetSpace::plane());
    const EquivariantMap moved = interpolate_map(f, c, id);
    double worst = 0.0;
    for (std::size_t v = 0; v < f.vertices.size(); ++v)
        if (f.class_rep[v] == static_cast<int>(v))
            worst = std::max(worst, dist(moved.class_points[f.class_id[v]], f.vertices[v]));
    CHECK(worst < 0.05);
}

TEST_CASE("cross solve toward a different surface") {
    const Mesh m = build_mesh(holonomy(), 0.4);
    const SurfaceRep j2 = fn_to_holonomy(FNCoords({1.8, 2.4, 2.2}, {0.1, 0.0, 0.3}));
    auto [map, rep] = solve_harmonic_cascade(m, j2, TargetSpace::plane());
    CHECK(rep.converged);
    CHECK(rep.gradient_norm < 1e-8);
    // The energy of a harmonic diffeomorphism dominates the target area.
    CHECK(rep.total > 4.0 * kPi * 0.99);
    double maxstretch = 0.0;
    for (double s : rep.stretch) maxstretch = std::max(maxstretch, s);
    CHECK(maxstretch > 1.0);
    CHECK(maxstretch < 2.0);
    CHECK(holomorphicity_residual(hopf_differential(map, m), m) < 0.1);
}
