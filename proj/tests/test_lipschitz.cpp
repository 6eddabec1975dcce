#include <catch2/catch_amalgamated.hpp>

#include "domlip/fenchel_nielsen.hpp"
#include "domlip/lipschitz.hpp"

using namespace domlip;

namespace {

const SurfaceRep& j() {
    static SurfaceRep r = fn_to_holonomy(FNCoords({2.0, 2.2, 2.4}, {0.3, -0.2, 0.5}));
    return r;
}

const Mesh& mesh() {
    static Mesh m = build_mesh(j(), 0.3);
    return m;
}

SurfaceRep elliptic() {
    SurfaceRep r(SurfaceGroup(2));
    r.images = {Moebius::rotation(0.7), Moebius::rotation(-0.4), Moebius::rotation(1.1),
                Moebius::rotation(0.2)};
    return r;
}

SurfaceRep axial_family(double scale) {
    SurfaceRep r(SurfaceGroup(2));
    r.images = {Moebius::axial(0.2 * scale), Moebius::axial(-0.1 * scale),
                Moebius::axial(0.15 * scale), Moebius::axial(0.05 * scale)};
    return r;
}

} // namespace

TEST_CASE("spectrum ratio lower bound") {
    auto [self, w] = lip_lower(j(), j(), 3);
    CHECK(self == Catch::Approx(1.0).margin(1e-12));
    CHECK_FALSE(w.empty());

    auto [zero, w0] = lip_lower(j(), elliptic(), 3);
    CHECK(zero == 0.0);

    CHECK_THROWS_AS(lip_lower(SurfaceRep::trivial(2), j(), 2), NotFuchsian);
}

TEST_CASE("lower bound is monotone in the ball radius") {
    const SurfaceRep j2 = fn_to_holonomy(FNCoords({1.8, 2.4, 2.2}, {0.1, 0.0, 0.3}));
    double prev = 0.0;
    for (int radius = 2; radius <= 6; ++radius) {
        auto [lo, w] = lip_lower(j(), j2, radius);
        CHECK(lo >= prev - 1e-15);
        prev = lo;
    }
    CHECK(prev > 0.5);
}

TEST_CASE("conjugation invariance of the lower bound") {
    const Moebius h1 = Moebius::horizontal(0.6) * Moebius::axial(0.3);
    const Moebius h2 = Moebius::rotation(0.8) * Moebius::horizontal(-0.4);
    const SurfaceRep j2 = fn_to_holonomy(FNCoords({1.8, 2.4, 2.2}, {0.1, 0.0, 0.3}));
    auto [lo, w] = lip_lower(j(), j2, 3);
    auto [lo2, w2] = lip_lower(j().conjugated_by(h1), j2.conjugated_by(h2), 3);
    CHECK(lo2 == Catch::Approx(lo).margin(1e-8));
}

TEST_CASE("trivial and elliptic targets are strictly dominated") {
    const DominationVerdict vt = check_domination(j(), SurfaceRep::trivial(2), mesh(), 4);
    CHECK(vt.kind == DominationVerdict::Kind::StrictlyDominated);
    CHECK(vt.margin == Catch::Approx(1.0).margin(1e-6));

    const DominationVerdict ve = check_domination(j(), elliptic(), mesh(), 4);
    CHECK(ve.kind == DominationVerdict::Kind::StrictlyDominated);
    CHECK(ve.lower == 0.0);
    CHECK(ve.upper < 1e-3);
}

TEST_CASE("a representation never strictly dominates itself") {
    const DominationVerdict v = check_domination(j(), j(), mesh(), 3);
    CHECK(v.kind == DominationVerdict::Kind::NotDominated);
    CHECK_FALSE(v.witness_word.empty());
    CHECK(translation_length(j().evaluate(v.witness_word)) > 0.0);
}

TEST_CASE("boundary reducible targets reroute through the line solve") {
    const SurfaceRep rho = axial_family(1.0);
    const auto pd = detect_parabolic(rho);
    REQUIRE(pd.has_value());
    REQUIRE(pd->boundary);

    const LipEstimate est = lip_parabolic(j(), *pd, mesh(), 4);
    CHECK(est.lower > 0.0);
    CHECK(est.lower <= est.upper + 1e-9);
    CHECK(est.upper < 1.0);

    // Both bounds are homogeneous in the morphism scale.
    const auto pd2 = detect_parabolic(axial_family(2.0));
    REQUIRE(pd2.has_value());
    const LipEstimate est2 = lip_parabolic(j(), *pd2, mesh(), 4);
    CHECK(est2.lower == Catch::Approx(2.0 * est.lower).epsilon(1e-6));
    CHECK(est2.upper == Catch::Approx(2.0 * est.upper).epsilon(1e-6));

    const DominationVerdict v = check_domination(j(), rho, mesh(), 4);
    CHECK(v.kind == DominationVerdict::Kind::StrictlyDominated);
}

TEST_CASE("bracket consistency on full estimates") {
    const LipEstimate est = lip_estimate(j(), elliptic(), mesh(), 4);
    CHECK(est.lower <= est.upper + 1e-9);
    CHECK(est.ball_radius == 4);
    CHECK(est.scale == 1.0);
}

TEST_CASE("metric rescaling divides both bounds exactly") {
    LipEstimate est;
    est.lower = 0.8;
    est.upper = 1.2;
    est.scale = 1.0;

    const LipEstimate same = scaled_lip(est, 1.0);
    CHECK(same.lower == est.lower);
    CHECK(same.upper == est.upper);

    const LipEstimate half = scaled_lip(est, 2.0);
    CHECK(std::abs(half.lower - 0.4) < 1e-12);
    CHECK(std::abs(half.upper - 0.6) < 1e-12);
    CHECK(half.scale == 2.0);
    CHECK(verdict_from(half).kind == DominationVerdict::Kind::StrictlyDominated);
    CHECK(verdict_from(est).kind == DominationVerdict::Kind::Inconclusive);

    // Composition of rescalings.
    const LipEstimate ab = scaled_lip(scaled_lip(est, 2.0), 3.0);
    const LipEstimate once = scaled_lip(est, 6.0);
    CHECK(ab.lower == Catch::Approx(once.lower).margin(1e-15));
    CHECK(ab.upper == Catch::Approx(once.upper).margin(1e-15));

    CHECK_THROWS(scaled_lip(est, 0.5));
}

TEST_CASE("thurston distance of a surface to itself") {
    const auto [lo, up] = thurston_distance(j(), j(), mesh(), 3);
    CHECK(lo == Catch::Approx(0.0).margin(1e-12));
    CHECK(up >= lo);
    CHECK(up < 1e-4);
    CHECK_THROWS_AS(thurston_distance(j(), SurfaceRep::trivial(2), mesh(), 3), NotFuchsian);
}

TEST_CASE("bounds along a constant path do not jump") {
    const std::vector<SurfaceRep> path = {elliptic(), elliptic(), elliptic()};
    const ContinuityTable t = lip_continuity_probe(j(), path, mesh(), 3);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.max_lower_jump < 1e-9);
    CHECK(t.max_upper_jump < 1e-9);
}
