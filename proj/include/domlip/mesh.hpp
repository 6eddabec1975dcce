#pragma once

// Triangulated Dirichlet fundamental domain of a Fuchsian representation.
// All polygon work happens in the Klein model centered at the base point i,
// where bisectors against the center are Euclidean chords and the domain is
// a convex Euclidean polygon. Refinement uses hyperbolic midpoints, which
// commute with the side-pairing isometries, so pairings stay exact.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "domlip/euler_class.hpp"
#include "domlip/models.hpp"
#include "domlip/representation.hpp"

namespace domlip {

struct EdgePairing {
    std::array<int, 2> src; // vertex indices of one boundary edge
    std::array<int, 2> dst; // images: pos(dst[k]) = j(word) pos(src[k])
    Word word;
};

struct Mesh {
    SurfaceRep holonomy;
    std::vector<Vec2> klein;                  // vertex coordinates, Klein chart
    std::vector<Point> vertices;              // same points, half-plane chart
    std::vector<std::array<int, 3>> faces;
    std::vector<EdgePairing> pairings;
    std::vector<double> conformal;            // per-face alpha: metric = alpha |dz|^2 at barycenter
    std::vector<double> face_area;            // exact hyperbolic area per face

    // Vertex identification classes: pos(v) = j(class_word[v]) pos(class_rep[v]).
    std::vector<int> class_rep;
    std::vector<Word> class_word;
    std::vector<int> class_id;                // dense id per vertex, shared within a class
    int num_classes = 0;
    double resolution = 0.0;                  // edge-length target used to build, 0 if unknown

    double total_area() const {
        double a = 0.0;
        for (double f : face_area) a += f;
        return a;
    }

    Complex barycenter(int f) const {
        const auto& t = faces[f];
        return (vertices[t[0]].z() + vertices[t[1]].z() + vertices[t[2]].z()) / 3.0;
    }
};

namespace detail {

struct ClipPoly {
    std::vector<Vec2> v;
    std::vector<int> owner; // per edge v[k] -> v[k+1]; -1 means initial frame
};

inline ClipPoly initial_frame() {
    ClipPoly p;
    p.v = {{-1.2, -1.2}, {1.2, -1.2}, {1.2, 1.2}, {-1.2, 1.2}};
    p.owner = {-1, -1, -1, -1};
    return p;
}

/// Clip against the half-plane x . n <= c; the new edge is owned by `cutter`.
inline void clip_halfplane(ClipPoly& p, const Vec2& n, double c, int cutter) {
    constexpr double eps = 1e-12;
    const std::size_t m = p.v.size();
    if (m == 0) return;
    ClipPoly out;
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2& P = p.v[i];
        const Vec2& Q = p.v[(i + 1) % m];
        const double dP = P[0] * n[0] + P[1] * n[1] - c;
        const double dQ = Q[0] * n[0] + Q[1] * n[1] - c;
        const bool inP = dP <= eps, inQ = dQ <= eps;
        const auto cross = [&]() -> Vec2 {
            const double t = dP / (dP - dQ);
            return {P[0] + t * (Q[0] - P[0]), P[1] + t * (Q[1] - P[1])};
        };
        if (inP && inQ) {
            out.v.push_back(P);
            out.owner.push_back(p.owner[i]);
        } else if (inP && !inQ) {
            out.v.push_back(P);
            out.owner.push_back(p.owner[i]);
            out.v.push_back(cross());
            out.owner.push_back(cutter);
        } else if (!inP && inQ) {
            out.v.push_back(cross());
            out.owner.push_back(p.owner[i]);
        }
    }
    p = std::move(out);
}

inline void drop_short_edges(ClipPoly& p, double tol = 1e-9) {
    ClipPoly out;
    const std::size_t m = p.v.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2& P = p.v[i];
        const Vec2& Q = p.v[(i + 1) % m];
        if (std::hypot(Q[0] - P[0], Q[1] - P[1]) > tol) {
            out.v.push_back(P);
            out.owner.push_back(p.owner[i]);
        }
    }
    p = std::move(out);
}

inline double polygon_area(const ClipPoly& p, const std::vector<Point>& hp) {
    // Gauss-Bonnet for a hyperbolic polygon: (n-2) pi - angle sum.
    const std::size_t m = hp.size();
    double angles = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        angles += angle_at_vertex(hp[(i + m - 1) % m], hp[i], hp[(i + 1) % m]);
    (void)p;
    return (static_cast<double>(m) - 2.0) * std::numbers::pi - angles;
}

struct Cutter {
    Moebius g;
    Word word;
    Vec2 nhat;
    double c; // bisector chord: x . nhat <= c
};

inline std::int64_t round_key(double x) { return llround(x * 1e6); }

/// Dirichlet polygon about the base point i, with edge owners.
inline std::pair<ClipPoly, std::vector<Cutter>> dirichlet_polygon(const SurfaceRep& j,
                                                                  int max_radius = 8) {
    const Point base(0.0, 1.0);
    std::vector<Cutter> cutters;
    std::unordered_map<std::uint64_t, int> seen;
    const auto key = [](const Moebius& g) {
        std::uint64_t h = 1469598103934665603ull;
        for (double x : {g.a, g.b, g.c, g.d}) {
            const std::int64_t k = round_key(x);
            h = (h ^ static_cast<std::uint64_t>(k)) * 1099511628211ull;
        }
        return h;
    };

    ClipPoly poly = initial_frame();
    const int n = j.group.num_generators();
    std::vector<int> alphabet;
    for (int k = 1; k <= n; ++k) { alphabet.push_back(k); alphabet.push_back(-k); }

    const double target = 2.0 * std::numbers::pi * (2.0 * j.group.genus - 2.0);
    std::vector<int> letters;
    std::vector<Moebius> stack = {Moebius::identity()};

    const auto consider = [&](const Moebius& g, const std::vector<int>& w) {
        if (g.dist_to_identity() < 1e-6) return;
        const auto it = seen.emplace(key(g), 1);
        if (!it.second) return;
        const double D = dist(base, g.apply(base));
        if (D < 1e-6) return;
        const Vec2 q = halfplane_to_klein(g.apply(base));
        const double qn = std::hypot(q[0], q[1]);
        Cutter cut{g, Word(w), {q[0] / qn, q[1] / qn}, std::tanh(D / 2.0)};
        // Only clip when the bisector actually cuts the current polygon.
        bool cuts = false;
        for (const Vec2& v : poly.v)
            if (v[0] * cut.nhat[0] + v[1] * cut.nhat[1] > cut.c + 1e-12) { cuts = true; break; }
        cutters.push_back(cut);
        if (cuts) clip_halfplane(poly, cut.nhat, cut.c, static_cast<int>(cutters.size()) - 1);
    };

    for (int radius = 1; radius <= max_radius; ++radius) {
        // Words of exact length `radius`, matrices kept incrementally.
        std::function<void()> rec = [&]() {
            if (static_cast<int>(letters.size()) == radius) {
                consider(stack.back(), letters);
                return;
            }
            for (int l : alphabet) {
                if (!letters.empty() && letters.back() == -l) continue;
                const int idx = std::abs(l) - 1;
                letters.push_back(l);
                stack.push_back(stack.back() *
                                (l > 0 ? j.images[idx] : j.images[idx].inverse()));
                rec();
                letters.pop_back();
                stack.pop_back();
            }
        };
        rec();
        drop_short_edges(poly);
        if (poly.v.size() < 3) throw DomainConstructionFailed("dirichlet_polygon: polygon vanished");
        bool owned = true;
        for (int o : poly.owner)
            if (o < 0) { owned = false; break; }
        for (const Vec2& v : poly.v)
            if (std::hypot(v[0], v[1]) > 1.0 - 1e-9) { owned = false; break; }
        if (!owned) continue;
        std::vector<Point> hp;
        for (const Vec2& v : poly.v) hp.push_back(halfplane_from_klein(v));
        const double area = polygon_area(poly, hp);
        if (std::abs(area - target) < 1e-6) return {poly, cutters};
    }
    throw DomainConstructionFailed("dirichlet_polygon: domain did not close within the word-ball cap");
}

} // namespace detail

inline Mesh build_mesh(const SurfaceRep& j, double target_edge) {
    if (target_edge < 0.02 || target_edge > 0.5)
        throw Error("build_mesh: target_edge must lie in [0.02, 0.5]");
    if (!is_fuchsian(j)) throw NotFuchsian("build_mesh: holonomy is not Fuchsian");

    auto [poly, cutters] = detail::dirichlet_polygon(j);
    const int np = static_cast<int>(poly.v.size());

    Mesh mesh;
    mesh.holonomy = j;
    mesh.klein.push_back({0.0, 0.0}); // base point i
    for (const Vec2& v : poly.v) mesh.klein.push_back(v);

    for (int k = 0; k < np; ++k)
        mesh.faces.push_back({0, 1 + k, 1 + (k + 1) % np});

    // Pair boundary edges: the edge cut by g maps to the edge cut by g^{-1}
    // under g^{-1}.
    std::vector<bool> used(np, false);
    for (int k = 0; k < np; ++k) {
        if (used[k]) continue;
        const detail::Cutter& cut = cutters[poly.owner[k]];
        const Moebius ginv = cut.g.inverse();
        int partner = -1;
        for (int m = 0; m < np; ++m) {
            if (cutters[poly.owner[m]].g.dist_to(ginv) < 1e-7) { partner = m; break; }
        }
        if (partner < 0)
            throw DomainConstructionFailed("build_mesh: side owned by " + to_string(cut.word) +
                                           " has no paired side");
        used[k] = used[partner] = true;
        const Word w = cut.word.inverse(); // j(w) maps the g-side onto the g^{-1}-side
        const std::array<int, 2> src = {1 + k, 1 + (k + 1) % np};
        const std::array<int, 2> cand = {1 + partner, 1 + (partner + 1) % np};
        const Moebius map = j.evaluate(w);
        std::array<int, 2> dst{};
        for (int e = 0; e < 2; ++e) {
            const Point img = map.apply(halfplane_from_klein(mesh.klein[src[e]]));
            double best = 1e9;
            for (int c : cand) {
                const double d = dist(img, halfplane_from_klein(mesh.klein[c]));
                if (d < best) { best = d; dst[e] = c; }
            }
            if (best > 1e-6)
                throw DomainConstructionFailed("build_mesh: paired side endpoints do not match");
        }
        mesh.pairings.push_back({src, dst, w});
    }

    // Uniform refinement by hyperbolic midpoints until every edge is short.
    const auto max_edge = [&]() {
        double m = 0.0;
        for (const auto& f : mesh.faces)
            for (int e = 0; e < 3; ++e)
                m = std::max(m, dist_klein(mesh.klein[f[e]], mesh.klein[f[(e + 1) % 3]]));
        return m;
    };
    while (max_edge() > target_edge) {
        std::map<std::pair<int, int>, int> midpoint;
        const auto mid = [&](int a, int b) {
            const auto k = std::minmax(a, b);
            const auto it = midpoint.find({k.first, k.second});
            if (it != midpoint.end()) return it->second;
            mesh.klein.push_back(klein_midpoint(mesh.klein[a], mesh.klein[b]));
            const int idx = static_cast<int>(mesh.klein.size()) - 1;
            midpoint.emplace(std::make_pair(k.first, k.second), idx);
            return idx;
        };
        std::vector<std::array<int, 3>> faces;
        faces.reserve(4 * mesh.faces.size());
        for (const auto& f : mesh.faces) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            faces.push_back({f[0], ab, ca});
            faces.push_back({f[1], bc, ab});
            faces.push_back({f[2], ca, bc});
            faces.push_back({ab, bc, ca});
        }
        mesh.faces = std::move(faces);
        std::vector<EdgePairing> pairings;
        pairings.reserve(2 * mesh.pairings.size());
        for (const EdgePairing& p : mesh.pairings) {
            const int ms = mid(p.src[0], p.src[1]);
            const int md = mid(p.dst[0], p.dst[1]);
            pairings.push_back({{p.src[0], ms}, {p.dst[0], md}, p.word});
            pairings.push_back({{ms, p.src[1]}, {md, p.dst[1]}, p.word});
        }
        mesh.pairings = std::move(pairings);
    }

    mesh.vertices.clear();
    for (const Vec2& u : mesh.klein) mesh.vertices.push_back(halfplane_from_klein(u));

    // Vertex identification classes via union-find carrying words:
    // pos(v) = j(word[v]) pos(parent[v]).
    const int nv = static_cast<int>(mesh.klein.size());
    std::vector<int> parent(nv);
    std::vector<Word> rel(nv);
    for (int v = 0; v < nv; ++v) parent[v] = v;
    std::function<std::pair<int, Word>(int)> find = [&](int v) -> std::pair<int, Word> {
        if (parent[v] == v) return {v, Word()};
        auto [root, w] = find(parent[v]);
        parent[v] = root;
        rel[v] = rel[v] * w;
        return {root, rel[v]};
    };
    const auto unite = [&](int dst, int src, const Word& w) {
        // pos(dst) = j(w) pos(src)
        auto [rd, wd] = find(dst);
        auto [rs, ws] = find(src);
        const Word link = wd.inverse() * w * ws; // pos(rd) = j(link) pos(rs)
        if (rd == rs) {
            if (j.evaluate(link).dist_to_identity() > 1e-6)
                throw DomainConstructionFailed("build_mesh: inconsistent vertex identification cycle");
            return;
        }
        parent[rd] = rs;
        rel[rd] = link;
    };
    for (const EdgePairing& p : mesh.pairings)
        for (int e = 0; e < 2; ++e) unite(p.dst[e], p.src[e], p.word);

    mesh.class_rep.resize(nv);
    mesh.class_word.resize(nv);
    mesh.class_id.assign(nv, -1);
    mesh.num_classes = 0;
    for (int v = 0; v < nv; ++v) {
        auto [root, w] = find(v);
        mesh.class_rep[v] = root;
        mesh.class_word[v] = w;
    }
    for (int v = 0; v < nv; ++v)
        if (mesh.class_rep[v] == v) mesh.class_id[v] = mesh.num_classes++;
    for (int v = 0; v < nv; ++v) mesh.class_id[v] = mesh.class_id[mesh.class_rep[v]];

    // Per-face conformal factor and exact hyperbolic area.
    mesh.conformal.reserve(mesh.faces.size());
    mesh.face_area.reserve(mesh.faces.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        const Complex zc = mesh.barycenter(static_cast<int>(f));
        mesh.conformal.push_back(1.0 / (zc.imag() * zc.imag()));
        const double a = std::numbers::pi -
                         angle_at_vertex(mesh.vertices[t[1]], mesh.vertices[t[0]], mesh.vertices[t[2]]) -
                         angle_at_vertex(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]) -
                         angle_at_vertex(mesh.vertices[t[0]], mesh.vertices[t[2]], mesh.vertices[t[1]]);
        mesh.face_area.push_back(a);
    }
    mesh.resolution = target_edge;
    return mesh;
}

inline constexpr const char* kMeshFormatHeader = "mesh-format 1";

inline void save_mesh(const std::string& path, const Mesh& mesh) {
    std::ofstream os(path);
    if (!os) throw Error("save_mesh: cannot open " + path);
    os << kMeshFormatHeader << "\n";
    os << "genus " << mesh.holonomy.group.genus << "\n";
    os << std::setprecision(17);
    os << "resolution " << mesh.resolution << "\n";
    os << "[holonomy]\n";
    for (const Moebius& g : mesh.holonomy.images)
        os << g.a << " " << g.b << " " << g.c << " " << g.d << "\n";
    os << "[vertices]\n" << mesh.vertices.size() << "\n";
    for (const Point& p : mesh.vertices) os << p.x << " " << p.y << "\n";
    os << "[faces]\n" << mesh.faces.size() << "\n";
    for (const auto& f : mesh.faces) os << f[0] << " " << f[1] << " " << f[2] << "\n";
    os << "[pairings]\n" << mesh.pairings.size() << "\n";
    for (const EdgePairing& p : mesh.pairings)
        os << p.src[0] << " " << p.src[1] << " " << p.dst[0] << " " << p.dst[1] << " "
           << to_string(p.word) << "\n";
    os << "[conformal]\n" << mesh.conformal.size() << "\n";
    for (double a : mesh.conformal) os << a << "\n";
}

inline Mesh load_mesh(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("load_mesh: cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line != kMeshFormatHeader)
        throw ParseError("mesh file: missing or unknown header");
    int genus = 0;
    is >> line >> genus;
    if (line != "genus" || genus < 2) throw ParseError("mesh file: bad genus line");
    Mesh mesh;
    mesh.holonomy = SurfaceRep{SurfaceGroup(genus)};
    is >> line;
    if (line == "resolution") {
        if (!(is >> mesh.resolution)) throw ParseError("mesh file: bad resolution line");
        is >> line;
    }
    if (line != "[holonomy]") throw ParseError("mesh file: expected [holonomy]");
    for (Moebius& g : mesh.holonomy.images) {
        double a, b, c, d;
        if (!(is >> a >> b >> c >> d)) throw ParseError("mesh file: bad holonomy row");
        g = Moebius(a, b, c, d);
    }
    std::size_t n = 0;
    is >> line >> n;
    if (line != "[vertices]") throw ParseError("mesh file: expected [vertices]");
    mesh.vertices.resize(n);
    for (Point& p : mesh.vertices)
        if (!(is >> p.x >> p.y)) throw ParseError("mesh file: bad vertex row");
    is >> line >> n;
    if (line != "[faces]") throw ParseError("mesh file: expected [faces]");
    mesh.faces.resize(n);
    for (auto& f : mesh.faces)
        if (!(is >> f[0] >> f[1] >> f[2])) throw ParseError("mesh file: bad face row");
    is >> line >> n;
    if (line != "[pairings]") throw ParseError("mesh file: expected [pairings]");
    mesh.pairings.resize(n);
    is.ignore();
    for (EdgePairing& p : mesh.pairings) {
        if (!std::getline(is, line)) throw ParseError("mesh file: bad pairing row");
        std::istringstream ls(line);
        std::string words;
        if (!(ls >> p.src[0] >> p.src[1] >> p.dst[0] >> p.dst[1]))
            throw ParseError("mesh file: bad pairing row: " + line);
        std::getline(ls, words);
        p.word = parse_word(words, genus);
    }
    is >> line >> n;
    if (line != "[conformal]") throw ParseError("mesh file: expected [conformal]");
    mesh.conformal.resize(n);
    for (double& a : mesh.conformal)
        if (!(is >> a)) throw ParseError("mesh file: bad conformal row");

    // Derived data is recomputed rather than trusted from disk.
    for (const Point& p : mesh.vertices) mesh.klein.push_back(halfplane_to_klein(p));
    const SurfaceRep& j = mesh.holonomy;
    const int nv = static_cast<int>(mesh.vertices.size());
    std::vector<int> parent(nv);
    std::vector<Word> rel(nv);
    for (int v = 0; v < nv; ++v) parent[v] = v;
    std::function<std::pair<int, Word>(int)> find = [&](int v) -> std::pair<int, Word> {
        if (parent[v] == v) return {v, Word()};
        auto [root, w] = find(parent[v]);
        parent[v] = root;
        rel[v] = rel[v] * w;
        return {root, rel[v]};
    };
    for (const EdgePairing& p : mesh.pairings)
        for (int e = 0; e < 2; ++e) {
            auto [rd, wd] = find(p.dst[e]);
            auto [rs, ws] = find(p.src[e]);
            const Word link = wd.inverse() * p.word * ws;
            if (rd == rs) {
                if (j.evaluate(link).dist_to_identity() > 1e-6)
                    throw ParseError("mesh file: inconsistent vertex identifications");
                continue;
            }
            parent[rd] = rs;
            rel[rd] = link;
        }
    mesh.class_rep.resize(nv);
    mesh.class_word.resize(nv);
    mesh.class_id.assign(nv, -1);
    mesh.num_classes = 0;
    for (int v = 0; v < nv; ++v) {
        auto [root, w] = find(v);
        mesh.class_rep[v] = root;
        mesh.class_word[v] = w;
    }
    for (int v = 0; v < nv; ++v)
        if (mesh.class_rep[v] == v) mesh.class_id[v] = mesh.num_classes++;
    for (int v = 0; v < nv; ++v) mesh.class_id[v] = mesh.class_id[mesh.class_rep[v]];

    mesh.face_area.clear();
    for (const auto& t : mesh.faces) {
        const double a = std::numbers::pi -
                         angle_at_vertex(mesh.vertices[t[1]], mesh.vertices[t[0]], mesh.vertices[t[2]]) -
                         angle_at_vertex(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]) -
                         angle_at_vertex(mesh.vertices[t[0]], mesh.vertices[t[2]], mesh.vertices[t[1]]);
        mesh.face_area.push_back(a);
    }
    return mesh;
}

} // namespace domlip
