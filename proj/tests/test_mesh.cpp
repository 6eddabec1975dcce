#include <catch2/catch_amalgamated.hpp>

#include "domlip/fenchel_nielsen.hpp"
#include "domlip/mesh.hpp"
#include "domlip/quad_diff.hpp"

using namespace domlip;

namespace {

const SurfaceRep& holonomy() {
    static SurfaceRep j = fn_to_holonomy(FNCoords({2.0, 2.2, 2.4}, {0.3, -0.2, 0.5}));
    return j;
}

const Mesh& coarse() {
    static Mesh m = build_mesh(holonomy(), 0.3);
    return m;
}

const Mesh& fine() {
    static Mesh m = build_mesh(holonomy(), 0.15);
    return m;
}

constexpr double kPi = 3.14159265358979323846;

} // namespace

TEST_CASE("total area matches the topology") {
    const double target = 4.0 * kPi;
    const double err_coarse = std::abs(coarse().total_area() - target) / target;
    const double err_fine = std::abs(fine().total_area() - target) / target;
    CHECK(err_coarse < 0.01);
    CHECK(err_fine <= err_coarse + 1e-10);
}

TEST_CASE("side pairings are isometric") {
    const Mesh& m = coarse();
    for (const EdgePairing& p : m.pairings) {
        const double ls = dist(m.vertices[p.src[0]], m.vertices[p.src[1]]);
        const double ld = dist(m.vertices[p.dst[0]], m.vertices[p.dst[1]]);
        CHECK(std::abs(ls - ld) < 1e-6);
        const Moebius g = m.holonomy.evaluate(p.word);
        for (int k = 0; k < 2; ++k)
            CHECK(dist(g.apply(m.vertices[p.src[k]]), m.vertices[p.dst[k]]) < 1e-6);
    }
}

TEST_CASE("halving the edge target roughly quadruples the face count") {
    const double ratio = static_cast<double>(fine().faces.size()) / coarse().faces.size();
    CHECK(ratio > 2.5);
    CHECK(ratio < 6.0);
}

TEST_CASE("edge lengths respect the target") {
    const Mesh& m = coarse();
    double worst = 0.0;
    for (const auto& f : m.faces)
        for (int k = 0; k < 3; ++k)
            worst = std::max(worst, dist(m.vertices[f[k]], m.vertices[f[(k + 1) % 3]]));
    CHECK(worst <= 0.3 + 1e-9);
    CHECK(m.resolution == Catch::Approx(0.3));
}

TEST_CASE("vertex classes are consistent with the holonomy") {
    const Mesh& m = coarse();
    for (std::size_t v = 0; v < m.vertices.size(); ++v) {
        const Point moved =
            m.holonomy.evaluate(m.class_word[v]).apply(m.vertices[m.class_rep[v]]);
        CHECK(dist(moved, m.vertices[v]) < 1e-6);
        CHECK(m.class_id[v] == m.class_id[m.class_rep[v]]);
    }
}

TEST_CASE("mesh file round trip") {
    const std::string path = "mesh_roundtrip.mesh";
    save_mesh(path, coarse());
    const Mesh back = load_mesh(path);
    REQUIRE(back.vertices.size() == coarse().vertices.size());
    REQUIRE(back.faces.size() == coarse().faces.size());
    REQUIRE(back.pairings.size() == coarse().pairings.size());
    CHECK(back.resolution == Catch::Approx(coarse().resolution));
    CHECK(back.total_area() == Catch::Approx(coarse().total_area()).margin(1e-9));
    for (std::size_t v = 0; v < back.vertices.size(); ++v)
        CHECK(dist(back.vertices[v], coarse().vertices[v]) < 1e-12);
    std::remove(path.c_str());
}

TEST_CASE("corrupted mesh file is rejected") {
    const std::string path = "mesh_corrupt.mesh";
    {
        std::ofstream os(path);
        os << "mesh-format 1\ngenus 2\n[vertices]\nnot a number\n";
    }
    CHECK_THROWS(load_mesh(path));
    std::remove(path.c_str());
}

TEST_CASE("weil petersson pairing") {
    const Mesh& m = coarse();
    const std::size_t n = m.faces.size();
    QuadDiff zero;
    zero.phi.assign(n, Complex(0.0, 0.0));
    CHECK(std::abs(wp_pair(zero, zero, m)) == 0.0);

    QuadDiff phi;
    phi.phi.resize(n);
    for (std::size_t f = 0; f < n; ++f)
        phi.phi[f] = Complex(0.3 + 0.001 * f, -0.2);

    const Complex self = wp_pair(phi, phi, m);
    CHECK(self.imag() == Catch::Approx(0.0).margin(1e-12));
    CHECK(self.real() > 0.0);
    CHECK(wp_norm(phi, m) == Catch::Approx(std::sqrt(self.real())).margin(1e-12));

    const Complex quad = wp_pair(2.0 * phi, 2.0 * phi, m);
    CHECK(quad.real() == Catch::Approx(4.0 * self.real()).margin(1e-9));

    // Sesquilinearity: pairing with i*psi rotates the result by -i.
    QuadDiff psi = phi;
    for (auto& c : psi.phi) c *= Complex(0.0, 1.0);
    const Complex rot = wp_pair(phi, psi, m);
    CHECK(rot.real() == Catch::Approx(0.0).margin(1e-9));
    CHECK(rot.imag() == Catch::Approx(-self.real()).margin(1e-9));

    QuadDiff wrong;
    wrong.phi.assign(n + 1, Complex(1.0, 0.0));
    CHECK_THROWS_AS(wp_pair(phi, wrong, m), IndexMismatch);
}

TEST_CASE("constant field norm agrees with an independent quadrature") {
    // wp_norm of phi = 1 is the integral of 1/alpha^2 against the area
    // element; a doubly refined mesh provides the independent estimate.
    auto integral = [](const Mesh& m) {
        double s = 0.0;
        for (std::size_t f = 0; f < m.faces.size(); ++f)
            s += m.face_area[f] / (m.conformal[f] * m.conformal[f]);
        return s;
    };
    QuadDiff one;
    one.phi.assign(coarse().faces.size(), Complex(1.0, 0.0));
    const double norm2 = wp_norm(one, coarse());
    CHECK(norm2 * norm2 == Catch::Approx(integral(coarse())).margin(1e-12));
    CHECK(integral(coarse()) == Catch::Approx(integral(fine())).epsilon(0.02));
}

TEST_CASE("linear operations on differentials") {
    QuadDiff a, b;
    a.phi = {Complex(1, 2), Complex(-3, 0.5)};
    b.phi = {Complex(0, 1), Complex(2, -1)};
    const QuadDiff s = a + b;
    const QuadDiff d = a - b;
    const QuadDiff c = 2.0 * a;
    CHECK(s.phi[0] == Complex(1, 3));
    CHECK(d.phi[1] == Complex(-5, 1.5));
    CHECK(c.phi[1] == Complex(-6, 1));
}
