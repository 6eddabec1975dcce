#pragma once

// Discrete equivariant harmonic maps. The map is affine per face in
// Beltrami-Klein coordinates of the target; the energy integrand is
// evaluated by a degree-5 interior quadrature rule, which is what makes
// the identity map agree with the discrete minimizer to high order.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <limits>
#include <functional>
#include <vector>

#include "domlip/mesh.hpp"
#include "domlip/parabolic.hpp"
#include "domlip/quad_diff.hpp"

namespace domlip {

struct TargetSpace {
    enum class Kind { HyperbolicPlane, RealLine };
    Kind kind = Kind::HyperbolicPlane;
    double alpha = 1.0; // target metric is (1/alpha^2) times hyperbolic

    static TargetSpace plane(double alpha = 1.0) {
        if (alpha < 1.0) throw Error("TargetSpace: alpha must be at least 1");
        return {Kind::HyperbolicPlane, alpha};
    }
    static TargetSpace line() { return {Kind::RealLine, 1.0}; }
};

struct EquivariantMap {
    TargetSpace target;
    SurfaceRep rho;                    // plane targets
    std::vector<Point> class_points;   // one per mesh vertex class (plane)
    std::vector<double> morphism;      // per generator (line targets)
    std::vector<double> class_values;  // one per class (line)

    Point value(const Mesh& mesh, int v) const {
        return rho.evaluate(mesh.class_word[v]).apply(class_points[mesh.class_id[v]]);
    }
    double line_value(const Mesh& mesh, int v) const {
        double s = 0.0;
        for (int l : mesh.class_word[v].letters)
            s += l > 0 ? morphism[l - 1] : -morphism[-l - 1];
        return class_values[mesh.class_id[v]] + s;
    }
};

struct EnergyReport {
    double total = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = true;
    std::vector<double> density;   // per-face energy density (quadrature average)
    std::vector<double> area;      // per-face quadrature area; total = sum density*area
    std::vector<Mat2> pullback;    // per-face pullback metric, half-plane chart, barycenter
    std::vector<double> stretch;   // per-face max singular stretch
    struct LogRow { int iter; double energy, grad_norm, step; };
    std::vector<LogRow> log;
};

inline double energy_density(const Mat2& h, const Mat2& g) {
    const double d = det(g);
    if (!(d > 1e-300) || !(g[0][0] > 0.0))
        throw SingularMetric("energy_density: chart metric is not positive definite");
    const Mat2 gi = inverse(g);
    return 0.5 * (gi[0][0] * h[0][0] + gi[0][1] * h[1][0] + gi[1][0] * h[0][1] + gi[1][1] * h[1][1]);
}

namespace detail {

// Degree-5 interior rule on the triangle, 7 points, weights summing to 1.
struct QuadRule {
    static constexpr int n = 7;
    double lambda[n][3];
    double weight[n];
    QuadRule() {
        const double a1 = 0.059715871789770, b1 = 0.470142064105115;
        const double a2 = 0.797426985353087, b2 = 0.101286507323456;
        const double w0 = 0.225, w1 = 0.132394152788506, w2 = 0.125939180544827;
        const double L[n][3] = {{1.0 / 3, 1.0 / 3, 1.0 / 3},
                                {a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1},
                                {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2}};
        const double W[n] = {w0, w1, w1, w1, w2, w2, w2};
        for (int q = 0; q < n; ++q) {
            weight[q] = W[q];
            for (int i = 0; i < 3; ++i) lambda[q][i] = L[q][i];
        }
    }
};

inline const QuadRule& quad_rule() {
    static const QuadRule r;
    return r;
}

/// Directional derivative of the Klein metric: d G(u) / d u_m.
inline Mat2 klein_metric_deriv(const Vec2& u, int m) {
    const double s = 1.0 - u[0] * u[0] - u[1] * u[1];
    const double s2 = s * s, s3 = s2 * s;
    Mat2 d = mat2(2.0 * u[m] / s2, 0.0, 0.0, 2.0 * u[m] / s2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double t = 0.0;
            if (i == m) t += u[j];
            if (j == m) t += u[i];
            d[i][j] += t / s2 + 4.0 * u[m] * u[i] * u[j] / s3;
        }
    return d;
}

struct FaceContext {
    Mat2 Xinv;              // inverse of [x2-x1, x3-x1], Klein chart
    double quad_area = 0.0; // sum of point weights below
    struct QPoint {
        double lambda[3];
        Mat2 Ainv;   // inverse domain metric at the point
        double w;    // quadrature weight * sqrt(det G) * Euclidean area
    };
    QPoint qp[QuadRule::n];
};

/// Scalar element stiffness of a face: integral of grad phi_i . grad phi_j
/// against the domain metric, for the three chart hat functions.
inline void element_stiffness(const FaceContext& fc, double S[3][3]) {
    Mat2 Q = mat2(0, 0, 0, 0);
    for (const auto& qp : fc.qp)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) Q[i][j] += qp.w * qp.Ainv[i][j];
    const double B[2][3] = {{-1, 1, 0}, {-1, 0, 1}};
    const Mat2 XiQXit = mul(fc.Xinv, mul(Q, transpose(fc.Xinv)));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q) s += B[p][i] * XiQXit[p][q] * B[q][j];
            S[i][j] = s;
        }
}

struct SolveContext {
    const Mesh* mesh = nullptr;
    std::vector<FaceContext> face;
    std::vector<Moebius> vmap;     // per-vertex word image under the target rep
    std::vector<int> class_vertex; // representative vertex per class id

    SolveContext(const Mesh& m, const SurfaceRep& rho) : mesh(&m) {
        const QuadRule& rule = quad_rule();
        face.resize(m.faces.size());
        for (std::size_t f = 0; f < m.faces.size(); ++f) {
            const auto& t = m.faces[f];
            const Vec2& x1 = m.klein[t[0]];
            const Vec2& x2 = m.klein[t[1]];
            const Vec2& x3 = m.klein[t[2]];
            const Mat2 X = mat2(x2[0] - x1[0], x3[0] - x1[0], x2[1] - x1[1], x3[1] - x1[1]);
            const double ea = 0.5 * std::abs(det(X));
            if (ea < 1e-16) throw DegenerateFace("harmonic: chart triangle is numerically flat");
            FaceContext& fc = face[f];
            fc.Xinv = inverse(X);
            for (int q = 0; q < QuadRule::n; ++q) {
                FaceContext::QPoint& qp = fc.qp[q];
                for (int i = 0; i < 3; ++i) qp.lambda[i] = rule.lambda[q][i];
                const Vec2 xq = {rule.lambda[q][0] * x1[0] + rule.lambda[q][1] * x2[0] + rule.lambda[q][2] * x3[0],
                                 rule.lambda[q][0] * x1[1] + rule.lambda[q][1] * x2[1] + rule.lambda[q][2] * x3[1]};
                const Mat2 G = klein_metric(xq);
                qp.Ainv = inverse(G);
                qp.w = rule.weight[q] * std::sqrt(det(G)) * ea;
                fc.quad_area += qp.w;
            }
        }
        vmap.reserve(m.vertices.size());
        for (std::size_t v = 0; v < m.vertices.size(); ++v)
            vmap.push_back(rho.evaluate(m.class_word[v]));
        class_vertex.assign(m.num_classes, -1);
        for (std::size_t v = 0; v < m.vertices.size(); ++v)
            if (mesh->class_rep[v] == static_cast<int>(v))
                class_vertex[m.class_id[v]] = static_cast<int>(v);
    }
};

/// Energy (and optionally its gradient in per-class chart parameters
/// (x, log y)) of the plane-valued map given by class points.
inline double plane_energy(const SolveContext& ctx, double alpha,
                           const std::vector<Point>& cls, std::vector<double>* grad,
                           std::vector<double>* face_energy = nullptr) {
    const Mesh& m = *ctx.mesh;
    const int nv = static_cast<int>(m.vertices.size());
    const double inv_a2 = 1.0 / (alpha * alpha);

    std::vector<Vec2> k(nv);
    for (int v = 0; v < nv; ++v) {
        const Point t = ctx.vmap[v].apply(cls[m.class_id[v]]);
        if (!t.valid()) throw Error("harmonic: map value left the upper half-plane");
        k[v] = halfplane_to_klein(t);
    }

    std::vector<Vec2> dEdk;
    if (grad) dEdk.assign(nv, {0.0, 0.0});
    if (face_energy) face_energy->assign(m.faces.size(), 0.0);

    double E = 0.0;
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const auto& t = m.faces[f];
        const FaceContext& fc = ctx.face[f];
        const Vec2& k1 = k[t[0]];
        const Mat2 K = mat2(k[t[1]][0] - k1[0], k[t[2]][0] - k1[0],
                            k[t[1]][1] - k1[1], k[t[2]][1] - k1[1]);
        const Mat2 J = mul(K, fc.Xinv);
        const Mat2 Jt = transpose(J);
        double Ef = 0.0;
        Vec2 dk[3] = {{0, 0}, {0, 0}, {0, 0}};
        for (int q = 0; q < QuadRule::n; ++q) {
            const auto& qp = fc.qp[q];
            const Vec2 L = {qp.lambda[0] * k[t[0]][0] + qp.lambda[1] * k[t[1]][0] + qp.lambda[2] * k[t[2]][0],
                            qp.lambda[0] * k[t[0]][1] + qp.lambda[1] * k[t[1]][1] + qp.lambda[2] * k[t[2]][1]};
            Mat2 Gt = klein_metric(L);
            for (auto& row : Gt) for (double& x : row) x *= inv_a2;
            const Mat2 JtGtJ = mul(Jt, mul(Gt, J));
            const double tr = JtGtJ[0][0] * qp.Ainv[0][0] + JtGtJ[0][1] * qp.Ainv[1][0] +
                              JtGtJ[1][0] * qp.Ainv[0][1] + JtGtJ[1][1] * qp.Ainv[1][1];
            Ef += 0.5 * tr * qp.w;
            if (!grad) continue;
            // d/dK of Tr(Ainv J^T Gt J) is 2 Gt J Ainv Xinv^T.
            const Mat2 M = mul(Gt, mul(J, qp.Ainv));
            const Mat2 dK = mul(M, transpose(fc.Xinv));
            for (int m2 = 0; m2 < 2; ++m2) {
                dk[1][m2] += qp.w * dK[m2][0];
                dk[2][m2] += qp.w * dK[m2][1];
                dk[0][m2] -= qp.w * (dK[m2][0] + dK[m2][1]);
            }
            // Metric variation at the image point.
            for (int m2 = 0; m2 < 2; ++m2) {
                Mat2 dG = klein_metric_deriv(L, m2);
                for (auto& row : dG) for (double& x : row) x *= inv_a2;
                const Mat2 JdGJ = mul(Jt, mul(dG, J));
                const double trd = JdGJ[0][0] * qp.Ainv[0][0] + JdGJ[0][1] * qp.Ainv[1][0] +
                                   JdGJ[1][0] * qp.Ainv[0][1] + JdGJ[1][1] * qp.Ainv[1][1];
                const double val = 0.5 * trd * qp.w;
                for (int i = 0; i < 3; ++i) dk[i][m2] += qp.lambda[i] * val;
            }
        }
        E += Ef;
        if (face_energy) (*face_energy)[f] = Ef;
        if (grad)
            for (int i = 0; i < 3; ++i) {
                dEdk[t[i]][0] += dk[i][0];
                dEdk[t[i]][1] += dk[i][1];
            }
    }

    if (grad) {
        grad->assign(2 * m.num_classes, 0.0);
        for (int v = 0; v < nv; ++v) {
            const int c = m.class_id[v];
            const Point& p = cls[c];
            const Complex z = p.z();
            const Point tv = ctx.vmap[v].apply(p);
            const Mat2 D = mul(halfplane_to_klein_jacobian(tv.z()),
                               mul(conformal(ctx.vmap[v].derivative(z)), mat2(1.0, 0.0, 0.0, p.y)));
            const Vec2 g = mul(transpose(D), dEdk[v]);
            (*grad)[2 * c] += g[0];
            (*grad)[2 * c + 1] += g[1];
        }
    }
    return E;
}

} // namespace detail

/// Pullback of the target metric under the face's affine map, written in
/// the half-plane chart at the face barycenter. For the identity map this
/// is exactly alpha_face * I at target scale 1.
inline Mat2 pullback_metric(const EquivariantMap& map, const Mesh& mesh, int f) {
    const auto& t = mesh.faces[f];
    const Complex zc = mesh.barycenter(f);
    const Mat2 Acd = halfplane_to_klein_jacobian(zc);

    if (map.target.kind == TargetSpace::Kind::RealLine) {
        // Gradient of the per-face affine function, pushed to the chart.
        const Vec2& x1 = mesh.klein[t[0]];
        const Vec2& x2 = mesh.klein[t[1]];
        const Vec2& x3 = mesh.klein[t[2]];
        const Mat2 X = mat2(x2[0] - x1[0], x3[0] - x1[0], x2[1] - x1[1], x3[1] - x1[1]);
        const double f1 = map.line_value(mesh, t[0]);
        const Vec2 df = {map.line_value(mesh, t[1]) - f1, map.line_value(mesh, t[2]) - f1};
        const Vec2 gK = mul(transpose(inverse(X)), df);
        const Vec2 g = mul(transpose(Acd), gK);
        return mat2(g[0] * g[0], g[0] * g[1], g[0] * g[1], g[1] * g[1]);
    }

    Vec2 k[3];
    for (int i = 0; i < 3; ++i) {
        const Point img = map.value(mesh, t[i]);
        if (!img.valid()) throw DegenerateFace("pullback_metric: image left the half-plane");
        k[i] = halfplane_to_klein(img);
    }
    const Vec2& x1 = mesh.klein[t[0]];
    const Vec2& x2 = mesh.klein[t[1]];
    const Vec2& x3 = mesh.klein[t[2]];
    const Mat2 X = mat2(x2[0] - x1[0], x3[0] - x1[0], x2[1] - x1[1], x3[1] - x1[1]);
    if (std::abs(det(X)) < 1e-16)
        throw DegenerateFace("pullback_metric: chart triangle is numerically flat");
    const Mat2 J = mul(mat2(k[1][0] - k[0][0], k[2][0] - k[0][0],
                            k[1][1] - k[0][1], k[2][1] - k[0][1]),
                       inverse(X));
    // Image of the barycenter chart point under the affine face map.
    const Vec2 uc = halfplane_to_klein(Point(zc));
    const Vec2 Lc = {k[0][0] + J[0][0] * (uc[0] - x1[0]) + J[0][1] * (uc[1] - x1[1]),
                     k[0][1] + J[1][0] * (uc[0] - x1[0]) + J[1][1] * (uc[1] - x1[1])};
    Mat2 Gt = klein_metric(Lc);
    const double inv_a2 = 1.0 / (map.target.alpha * map.target.alpha);
    for (auto& row : Gt) for (double& x : row) x *= inv_a2;
    const Mat2 JA = mul(J, Acd);
    return mul(transpose(JA), mul(Gt, JA));
}

/// Hopf differential: the (2,0)-coefficient of the pullback in the
/// half-plane chart, phi = (h11 - h22 - 2 i h12) / 4.
inline QuadDiff hopf_differential(const EquivariantMap& map, const Mesh& mesh) {
    QuadDiff out(mesh.faces.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Mat2 h = pullback_metric(map, mesh, static_cast<int>(f));
        out.phi[f] = 0.25 * Complex(h[0][0] - h[1][1], -2.0 * h[0][1]);
    }
    return out;
}

/// Per-face max stretch factor sqrt(lambda_max(g^{-1} h)).
inline double face_stretch(const EquivariantMap& map, const Mesh& mesh, int f) {
    const Mat2 h = pullback_metric(map, mesh, f);
    const double a = mesh.conformal[f]; // chart metric is a * I at the barycenter
    const double m00 = h[0][0] / a, m01 = h[0][1] / a, m11 = h[1][1] / a;
    const double tr = m00 + m11, dt = m00 * m11 - m01 * m01;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - dt));
    return std::sqrt(std::max(0.0, tr / 2.0 + disc));
}

inline double constraint_violation(const EquivariantMap& map, const Mesh& mesh) {
    double worst = 0.0;
    for (const EdgePairing& p : mesh.pairings) {
        for (int e = 0; e < 2; ++e) {
            if (map.target.kind == TargetSpace::Kind::RealLine) {
                double shift = 0.0;
                for (int l : p.word.letters)
                    shift += l > 0 ? map.morphism[l - 1] : -map.morphism[-l - 1];
                worst = std::max(worst, std::abs(map.line_value(mesh, p.dst[e]) -
                                                 map.line_value(mesh, p.src[e]) - shift));
            } else {
                const Moebius g = map.rho.evaluate(p.word);
                worst = std::max(worst, dist(g.apply(map.value(mesh, p.src[e])),
                                             map.value(mesh, p.dst[e])));
            }
        }
    }
    return worst;
}

inline EnergyReport total_energy(const EquivariantMap& map, const Mesh& mesh) {
    EnergyReport rep;
    detail::SolveContext ctx(mesh, map.target.kind == TargetSpace::Kind::RealLine
                                       ? SurfaceRep::trivial(mesh.holonomy.group.genus)
                                       : map.rho);
    rep.area.resize(mesh.faces.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) rep.area[f] = ctx.face[f].quad_area;

    std::vector<double> face_energy(mesh.faces.size(), 0.0);
    if (map.target.kind == TargetSpace::Kind::RealLine) {
        double E = 0.0;
        for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
            const auto& t = mesh.faces[f];
            const double f1 = map.line_value(mesh, t[0]);
            const Vec2 df = {map.line_value(mesh, t[1]) - f1, map.line_value(mesh, t[2]) - f1};
            const Vec2 g = mul(transpose(ctx.face[f].Xinv), df);
            double Ef = 0.0;
            for (const auto& qp : ctx.face[f].qp) {
                const Vec2 Ag = mul(qp.Ainv, g);
                Ef += 0.5 * (g[0] * Ag[0] + g[1] * Ag[1]) * qp.w;
            }
            face_energy[f] = Ef;
            E += Ef;
        }
        rep.total = E;
    } else {
        std::vector<Point> cls = map.class_points;
        rep.total = detail::plane_energy(ctx, map.target.alpha, cls, nullptr, &face_energy);
    }
    rep.density.resize(mesh.faces.size());
    rep.pullback.resize(mesh.faces.size());
    rep.stretch.resize(mesh.faces.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        rep.density[f] = face_energy[f] / rep.area[f];
        rep.pullback[f] = pullback_metric(map, mesh, static_cast<int>(f));
        rep.stretch[f] = face_stretch(map, mesh, static_cast<int>(f));
    }
    return rep;
}

struct SolveOptions {
    double grad_tol = 1e-8;   // absolute target for the gradient norm
    double noise_rel = 1e-5;  // accepted floor (relative to 1+E) when the
                              // line search stalls at rounding noise
    int max_iterations = 20000;
    bool keep_log = false;
};

/// Identity-like initialization: each class keeps its mesh position.
inline EquivariantMap identity_init(const Mesh& mesh, const SurfaceRep& rho, TargetSpace target) {
    EquivariantMap map;
    map.target = target;
    map.rho = rho;
    map.class_points.assign(mesh.num_classes, Point());
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
        if (mesh.class_rep[v] == static_cast<int>(v))
            map.class_points[mesh.class_id[v]] = mesh.vertices[v];
    return map;
}

inline EquivariantMap constant_init(const Mesh& mesh, const SurfaceRep& rho, TargetSpace target,
                                    Point p = Point(0.0, 1.0)) {
    EquivariantMap map;
    map.target = target;
    map.rho = rho;
    map.class_points.assign(mesh.num_classes, p);
    return map;
}

/// Transfers a solved plane map onto another mesh of the same holonomy:
/// each class point is the Klein-barycentric interpolation of the source
/// map over the source face containing it (the Klein disk is convex, so
/// the interpolated point stays inside the target plane).
inline EquivariantMap interpolate_map(const Mesh& fine, const Mesh& coarse,
                                      const EquivariantMap& cmap) {
    EquivariantMap out;
    out.target = cmap.target;
    out.rho = cmap.rho;
    out.class_points.assign(fine.num_classes, Point());
    std::vector<Vec2> img(coarse.vertices.size());
    for (std::size_t v = 0; v < coarse.vertices.size(); ++v)
        img[v] = halfplane_to_klein(cmap.value(coarse, static_cast<int>(v)));
    for (std::size_t v = 0; v < fine.vertices.size(); ++v) {
        if (fine.class_rep[v] != static_cast<int>(v)) continue;
        const Vec2 p = fine.klein[v];
        double best = std::numeric_limits<double>::infinity();
        Vec2 bestpt{0.0, 0.0};
        for (std::size_t f = 0; f < coarse.faces.size(); ++f) {
            const auto& t = coarse.faces[f];
            const Vec2& a = coarse.klein[t[0]];
            const Vec2& b = coarse.klein[t[1]];
            const Vec2& c = coarse.klein[t[2]];
            const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            if (std::abs(det) < 1e-16) continue;
            double l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
            double l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
            double l0 = 1.0 - l1 - l2;
            const double viol = -std::min({l0, l1, l2});
            if (viol >= best) continue;
            best = viol;
            l0 = std::max(l0, 0.0);
            l1 = std::max(l1, 0.0);
            l2 = std::max(l2, 0.0);
            const double s = l0 + l1 + l2;
            bestpt = {(l0 * img[t[0]][0] + l1 * img[t[1]][0] + l2 * img[t[2]][0]) / s,
                      (l0 * img[t[0]][1] + l1 * img[t[1]][1] + l2 * img[t[2]][1]) / s};
            if (best <= 0.0) break;
        }
        out.class_points[fine.class_id[v]] = halfplane_from_klein(bestpt);
    }
    return out;
}

inline std::pair<EquivariantMap, EnergyReport> solve_harmonic(const Mesh& mesh,
                                                              const SurfaceRep& rho,
                                                              TargetSpace target,
                                                              const EquivariantMap& init,
                                                              SolveOptions opts = {}) {
    if (target.kind == TargetSpace::Kind::RealLine)
        throw Error("solve_harmonic: use solve_harmonic_line for line targets");
    if (const auto pd = detect_parabolic(rho); pd && pd->boundary)
        throw ParabolicTarget("solve_harmonic: target representation fixes a boundary point");

    detail::SolveContext ctx(mesh, rho);
    const int C = mesh.num_classes;
    // Unknowns are (x, log y) per class.
    std::vector<double> u(2 * C);
    for (int c = 0; c < C; ++c) {
        u[2 * c] = init.class_points[c].x;
        u[2 * c + 1] = std::log(init.class_points[c].y);
    }
    const auto points_of = [&](const std::vector<double>& uu) {
        std::vector<Point> cls(C);
        for (int c = 0; c < C; ++c) cls[c] = Point(uu[2 * c], std::exp(uu[2 * c + 1]));
        return cls;
    };

    // Elliptic preconditioner: scalar class stiffness plus lumped mass,
    // applied channel-wise in an orthonormal frame at each class point.
    // This is what keeps the iteration count mesh-independent.
    Eigen::SparseMatrix<double> P(C, C);
    {
        std::vector<Eigen::Triplet<double>> trip;
        for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
            const auto& t = mesh.faces[f];
            double S[3][3];
            detail::element_stiffness(ctx.face[f], S);
            const double lump = ctx.face[f].quad_area / 3.0;
            for (int i = 0; i < 3; ++i) {
                const int ci = mesh.class_id[t[i]];
                trip.emplace_back(ci, ci, lump);
                for (int j = 0; j < 3; ++j)
                    trip.emplace_back(ci, mesh.class_id[t[j]], S[i][j]);
            }
        }
        P.setFromTriplets(trip.begin(), trip.end());
    }
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(P);
    if (llt.info() != Eigen::Success)
        throw SingularSystem("solve_harmonic: preconditioner factorization failed");

    std::vector<double> grad, grad_prev, pg, pg_prev, dir;
    std::vector<Point> cls = points_of(u);
    double E = detail::plane_energy(ctx, target.alpha, cls, &grad);
    const auto norm2 = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return s;
    };
    const auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    // Frame gradient (y dx, d log y), preconditioned per channel, back to
    // parameter coordinates. Symmetric positive definite overall.
    const auto precondition = [&](const std::vector<double>& g, std::vector<double>& out) {
        Eigen::VectorXd g1(C), g2(C);
        for (int c = 0; c < C; ++c) {
            const double y = std::exp(u[2 * c + 1]);
            g1[c] = y * g[2 * c];
            g2[c] = g[2 * c + 1];
        }
        const Eigen::VectorXd z1 = llt.solve(g1);
        const Eigen::VectorXd z2 = llt.solve(g2);
        out.resize(2 * C);
        for (int c = 0; c < C; ++c) {
            const double y = std::exp(u[2 * c + 1]);
            out[2 * c] = y * z1[c];
            out[2 * c + 1] = z2[c];
        }
    };

    EnergyReport final_rep;
    double step = 1.0;
    dir.assign(2 * C, 0.0);
    int iter = 0;
    bool converged = false;
    std::vector<double> trial(2 * C);

    // Newton-CG machinery shared between the phases below. The Hessian acts
    // by centered finite differences of the analytic gradient, which stays
    // accurate even when energy differences sit at rounding noise.
    std::vector<double> d(2 * C), r(2 * C), z(2 * C), p(2 * C), Hp(2 * C);
    std::vector<double> gp, gm, gtrial;
    double unorm = 0.0;
    const auto hess_vec = [&](const std::vector<double>& v, std::vector<double>& out) {
        const double vn = std::sqrt(norm2(v));
        if (vn == 0.0) { out.assign(2 * C, 0.0); return; }
        const double eps = 1e-7 * (1.0 + unorm) / vn;
        for (int i = 0; i < 2 * C; ++i) trial[i] = u[i] + eps * v[i];
        detail::plane_energy(ctx, target.alpha, points_of(trial), &gp);
        for (int i = 0; i < 2 * C; ++i) trial[i] = u[i] - eps * v[i];
        detail::plane_energy(ctx, target.alpha, points_of(trial), &gm);
        out.resize(2 * C);
        for (int i = 0; i < 2 * C; ++i) out[i] = (gp[i] - gm[i]) / (2.0 * eps);
    };

    // Alternate a nonlinear-CG phase (cheap global progress) with a
    // Newton-CG phase (fast local contraction, and the only way to reach an
    // absolute gradient target once energy differences hit rounding noise).
    for (int phase = 0; phase < 20 && !converged && iter < opts.max_iterations; ++phase) {
        bool ncg_moved = false;
        double gnorm_ref = std::numeric_limits<double>::infinity();
        int ref_iter = iter;
        grad_prev.clear();
        for (; iter < opts.max_iterations; ++iter) {
            const double gnorm = std::sqrt(norm2(grad));
            if (opts.keep_log) final_rep.log.push_back({iter, E, gnorm, step});
            if (gnorm <= opts.grad_tol) { converged = true; break; }
            // Hand a plateaued iteration to the Newton phase.
            if (gnorm < 0.5 * gnorm_ref) { gnorm_ref = gnorm; ref_iter = iter; }
            else if (iter - ref_iter >= 50) break;

            precondition(grad, pg);
            // Preconditioned Polak-Ribiere+ direction with periodic restart.
            if (iter % 50 == 0 || grad_prev.empty()) {
                for (int i = 0; i < 2 * C; ++i) dir[i] = -pg[i];
            } else {
                double num = 0.0;
                for (int i = 0; i < 2 * C; ++i) num += pg[i] * (grad[i] - grad_prev[i]);
                const double beta = std::max(0.0, num / dot(grad_prev, pg_prev));
                for (int i = 0; i < 2 * C; ++i) dir[i] = -pg[i] + beta * dir[i];
            }
            double slope = dot(grad, dir);
            if (slope >= 0.0) {
                for (int i = 0; i < 2 * C; ++i) dir[i] = -pg[i];
                slope = -dot(grad, pg);
            }

            double a = step;
            bool accepted = false;
            for (int bt = 0; bt < 50; ++bt) {
                for (int i = 0; i < 2 * C; ++i) trial[i] = u[i] + a * dir[i];
                double Et;
                try { Et = detail::plane_energy(ctx, target.alpha, points_of(trial), nullptr); }
                catch (const Error&) { a *= 0.5; continue; }
                if (Et <= E + 1e-4 * a * slope) {
                    u = trial;
                    E = Et;
                    accepted = true;
                    break;
                }
                a *= 0.5;
            }
            if (!accepted || a < 1e-11) break; // step collapsed to rounding noise
            ncg_moved = true;
            step = std::min(2.0 * a, 4.0);
            grad_prev = grad;
            pg_prev = pg;
            cls = points_of(u);
            E = detail::plane_energy(ctx, target.alpha, cls, &grad);
        }
        if (converged) break;

        bool newton_moved = false;
        double gnorm = std::sqrt(norm2(grad));
        unorm = std::sqrt(norm2(u));
        for (int ns = 0; ns < 50 && gnorm > opts.grad_tol && iter < opts.max_iterations; ++ns) {
            // PCG on H d = -grad, preconditioned by the stiffness factor.
            std::fill(d.begin(), d.end(), 0.0);
            for (int i = 0; i < 2 * C; ++i) r[i] = -grad[i];
            precondition(r, z);
            p = z;
            double rz = dot(r, z);
            bool cg_ok = false;
            for (int cg = 0; cg < 100; ++cg) {
                try { hess_vec(p, Hp); }
                catch (const Error&) { break; }
                const double pHp = dot(p, Hp);
                if (!(pHp > 0.0)) break; // nonconvex direction: keep d so far
                const double al = rz / pHp;
                for (int i = 0; i < 2 * C; ++i) {
                    d[i] += al * p[i];
                    r[i] -= al * Hp[i];
                }
                cg_ok = true;
                if (std::sqrt(norm2(r)) < 0.05 * gnorm) break;
                precondition(r, z);
                const double rz2 = dot(r, z);
                const double beta = rz2 / rz;
                rz = rz2;
                for (int i = 0; i < 2 * C; ++i) p[i] = z[i] + beta * p[i];
            }
            if (!cg_ok) { precondition(grad, d); for (double& x : d) x = -x; }
            double slope = dot(grad, d);
            if (slope >= 0.0) {
                precondition(grad, d);
                for (double& x : d) x = -x;
                slope = dot(grad, d);
            }

            // Accept on sufficient energy decrease (global progress far from
            // the minimum) or on a plain gradient-norm decrease (the only
            // usable signal at the rounding-noise floor).
            double a = 1.0;
            bool accepted = false;
            for (int bt = 0; bt < 20; ++bt, a *= 0.5) {
                for (int i = 0; i < 2 * C; ++i) trial[i] = u[i] + a * d[i];
                double Et;
                try { Et = detail::plane_energy(ctx, target.alpha, points_of(trial), &gtrial); }
                catch (const Error&) { continue; }
                const double gt = std::sqrt(norm2(gtrial));
                if (Et <= E + 1e-4 * a * slope ||
                    (gt < gnorm && Et <= E + 1e-12 * (1.0 + std::abs(E)))) {
                    u = trial;
                    grad = gtrial;
                    gnorm = gt;
                    E = Et;
                    accepted = true;
                    break;
                }
            }
            ++iter;
            if (opts.keep_log) final_rep.log.push_back({iter, E, gnorm, a});
            if (!accepted) break;
            newton_moved = true;
        }
        converged = gnorm <= opts.grad_tol;
        if (!ncg_moved && !newton_moved) break;
    }

    EquivariantMap out;
    out.target = target;
    out.rho = rho;
    out.class_points = points_of(u);
    EnergyReport rep = total_energy(out, mesh);
    rep.iterations = iter;
    rep.gradient_norm = std::sqrt(norm2(grad));
    rep.converged = converged || rep.gradient_norm <= opts.noise_rel * (1.0 + std::abs(E));
    rep.log = std::move(final_rep.log);
    return {std::move(out), std::move(rep)};
}

/// Coarse-to-fine solve for distant targets: the map is computed first on
/// coarse meshes of the same holonomy and interpolated down, which keeps
/// every solve inside the well-conditioned basin that a cold start misses.
inline std::pair<EquivariantMap, EnergyReport> solve_harmonic_cascade(
    const Mesh& mesh, const SurfaceRep& rho, TargetSpace target = TargetSpace::plane(),
    SolveOptions opts = {}) {
    const double res = mesh.resolution > 0.0 ? mesh.resolution : 0.1;
    SolveOptions copts = opts;
    copts.grad_tol = std::max(opts.grad_tol, 1e-6);
    EquivariantMap carry;
    Mesh prev;
    bool have = false;
    for (double e = 0.5; e > 1.1 * res; e *= 0.5) {
        Mesh cm = build_mesh(mesh.holonomy, e);
        EquivariantMap ci = have ? interpolate_map(cm, prev, carry)
                                 : identity_init(cm, rho, target);
        auto [m, r] = solve_harmonic(cm, rho, target, ci, copts);
        carry = std::move(m);
        prev = std::move(cm);
        have = true;
    }
    EquivariantMap init = have ? interpolate_map(mesh, prev, carry)
                               : identity_init(mesh, rho, target);
    return solve_harmonic(mesh, rho, target, init, opts);
}

/// Linear solve for a line-valued equivariant map: piecewise affine in the
/// Klein chart, with additive jumps m(w) across side pairings; normalized
/// to value 0 at vertex 0.
inline std::pair<EquivariantMap, EnergyReport> solve_harmonic_line(const Mesh& mesh,
                                                                   const std::vector<double>& m) {
    if (static_cast<int>(m.size()) != mesh.holonomy.group.num_generators())
        throw Error("solve_harmonic_line: one morphism value per generator required");

    EquivariantMap map;
    map.target = TargetSpace::line();
    map.rho = SurfaceRep::trivial(mesh.holonomy.group.genus);
    map.morphism = m;
    map.class_values.assign(mesh.num_classes, 0.0);

    detail::SolveContext ctx(mesh, map.rho);
    using detail::FaceContext;
    const int nv = static_cast<int>(mesh.vertices.size());
    const int C = mesh.num_classes;

    // Per-vertex shift: value_v = t_class + shift_v.
    std::vector<double> shift(nv, 0.0);
    for (int v = 0; v < nv; ++v) {
        double s = 0.0;
        for (int l : mesh.class_word[v].letters) s += l > 0 ? m[l - 1] : -m[-l - 1];
        shift[v] = s;
    }

    const int pinned = mesh.class_id[0];
    const auto reduced = [&](int c) { return c < pinned ? c : c - 1; };

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(C - 1);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        const FaceContext& fc = ctx.face[f];
        double S[3][3];
        detail::element_stiffness(fc, S);
        for (int i = 0; i < 3; ++i) {
            const int ci = mesh.class_id[t[i]];
            for (int j = 0; j < 3; ++j) {
                const int cj = mesh.class_id[t[j]];
                if (ci != pinned) rhs[reduced(ci)] -= S[i][j] * shift[t[j]];
                if (ci != pinned && cj != pinned)
                    trip.emplace_back(reduced(ci), reduced(cj), S[i][j]);
            }
        }
    }

    Eigen::SparseMatrix<double> A(C - 1, C - 1);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A);
    if (llt.info() != Eigen::Success)
        throw SingularSystem("solve_harmonic_line: stiffness factorization failed");
    const Eigen::VectorXd sol = llt.solve(rhs);
    if (llt.info() != Eigen::Success)
        throw SingularSystem("solve_harmonic_line: linear solve failed");

    for (int c = 0; c < C; ++c)
        map.class_values[c] = c == pinned ? 0.0 : sol[reduced(c)];
    // Normalize to value 0 at vertex 0 including its shift.
    const double v0 = map.line_value(mesh, 0);
    for (double& t : map.class_values) t -= v0;

    EnergyReport rep = total_energy(map, mesh);
    rep.converged = true;
    return {std::move(map), std::move(rep)};
}

/// Weighted least-squares misfit of the Hopf field against local degree-1
/// holomorphic models on overlapping two-ring face patches, with the field
/// transported across side pairings by the square of the chart derivative.
inline double holomorphicity_residual(const QuadDiff& phi, const Mesh& mesh,
                                      double patch_radius = 0.0) {
    if (phi.phi.size() != mesh.faces.size())
        throw IndexMismatch("holomorphicity_residual: differential not indexed by this mesh");
    if (patch_radius <= 0.0) {
        // Patch radius between the face scale and O(1): per-face sampling
        // noise averages out while the cubic-fit leakage into the
        // anti-holomorphic term still shrinks under refinement.
        patch_radius = mesh.resolution > 0.0 ? 0.8 * std::sqrt(mesh.resolution) : 0.5;
    }

    struct Link { int face; Moebius to_me; bool transported; };
    // Adjacency over shared interior edges and over side pairings.
    std::map<std::pair<int, int>, std::vector<int>> by_edge;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        for (int e = 0; e < 3; ++e) {
            auto k = std::minmax(t[e], t[(e + 1) % 3]);
            by_edge[{k.first, k.second}].push_back(static_cast<int>(f));
        }
    }
    const SurfaceRep& j = mesh.holonomy;
    std::vector<std::vector<Link>> nbr(mesh.faces.size());
    for (const auto& [e, fs] : by_edge)
        if (fs.size() == 2) {
            nbr[fs[0]].push_back({fs[1], Moebius::identity(), false});
            nbr[fs[1]].push_back({fs[0], Moebius::identity(), false});
        }
    for (const EdgePairing& p : mesh.pairings) {
        const auto ks = std::minmax(p.src[0], p.src[1]);
        const auto kd = std::minmax(p.dst[0], p.dst[1]);
        const auto is = by_edge.find({ks.first, ks.second});
        const auto id = by_edge.find({kd.first, kd.second});
        if (is == by_edge.end() || id == by_edge.end()) continue;
        if (is->second.size() != 1 || id->second.size() != 1) continue;
        const int fs = is->second[0], fd = id->second[0];
        const Moebius g = j.evaluate(p.word); // src chart -> dst chart
        nbr[fd].push_back({fs, g, true});            // neighbor src seen from dst
        nbr[fs].push_back({fd, g.inverse(), true});  // neighbor dst seen from src
    }

    std::vector<Complex> zb(mesh.faces.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        zb[f] = mesh.barycenter(static_cast<int>(f));

    double num = 0.0, den = 0.0;
    std::vector<int> stamp(mesh.faces.size(), -1);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        // Patch of fixed hyperbolic radius around the face, with chart
        // transitions composed along the hops.
        std::vector<std::pair<int, Moebius>> patch = {{static_cast<int>(f), Moebius::identity()}};
        stamp[f] = static_cast<int>(f);
        const Point p0(zb[f]);
        for (std::size_t i = 0; i < patch.size(); ++i) {
            for (const Link& l : nbr[patch[i].first]) {
                if (stamp[l.face] == static_cast<int>(f)) continue;
                stamp[l.face] = static_cast<int>(f);
                // l.to_me maps l.face's chart into patch[i]'s chart.
                const Moebius T = patch[i].second * l.to_me;
                if (i > 0 && dist(Point(T.apply(zb[l.face])), p0) > patch_radius) continue;
                patch.emplace_back(l.face, T);
            }
        }
        if (patch.size() < 8) continue;

        const Complex z0 = zb[f];
        // Patch diameter sets the local length scale.
        double diam = 0.0;
        std::vector<Complex> zs, vals;
        std::vector<double> wts;
        for (const auto& [pf, T] : patch) {
            // T: chart(pf) -> chart(f); phi transforms by 1/T'(z)^2.
            const Complex zp = zb[pf];
            const Complex z_here = T.apply(zp);
            const Complex d = T.derivative(zp);
            zs.push_back(z_here);
            vals.push_back(phi.phi[pf] / (d * d));
            wts.push_back(mesh.face_area[pf]);
            diam = std::max(diam, std::abs(z_here - z0));
        }
        if (diam < 1e-14) continue;
        // Weighted LSQ fit of a + b zeta + c zeta^2 + e zeta^3 + d conj(zeta)
        // with zeta = (z - z0)/diam; |d|/diam estimates |d-bar phi| on the
        // patch and vanishes on fields that are holomorphic to cubic order.
        using Mat5 = Eigen::Matrix<Complex, 5, 5>;
        using Vec5 = Eigen::Matrix<Complex, 5, 1>;
        Mat5 N = Mat5::Zero();
        Vec5 r = Vec5::Zero();
        for (std::size_t i = 0; i < zs.size(); ++i) {
            const Complex zeta = (zs[i] - z0) / diam;
            const std::array<Complex, 5> basis = {Complex(1, 0), zeta, zeta * zeta,
                                                  zeta * zeta * zeta, std::conj(zeta)};
            const double w = wts[i];
            for (int p = 0; p < 5; ++p) {
                for (int q = 0; q < 5; ++q)
                    N(p, q) += w * std::conj(basis[p]) * basis[q];
                r(p) += w * std::conj(basis[p]) * vals[i];
            }
        }
        const Vec5 coef = N.fullPivLu().solve(r);
        // d-bar energy density |d-bar phi|^2 / alpha^2, measured like the
        // Hermitian pairing so near-boundary faces with large chart factors
        // do not dominate.
        const double af = mesh.conformal[f];
        num += mesh.face_area[f] * std::norm(coef(4) / diam) / (af * af);
        den += mesh.face_area[f];
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

} // namespace domlip
