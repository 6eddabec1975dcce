#pragma once

// Representations of a surface group into the Moebius group, given by the
// images of the standard generators. Includes length spectra, the
// orientation-reversing twist, and the text file format.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

#include "domlip/moebius.hpp"
#include "domlip/surface_group.hpp"

namespace domlip {

struct SurfaceRep {
    SurfaceGroup group;
    std::vector<Moebius> images; // one per generator a1,b1,...,ag,bg

    SurfaceRep() : group(2), images(4) {}
    explicit SurfaceRep(SurfaceGroup g) : group(g), images(g.num_generators()) {}
    SurfaceRep(SurfaceGroup g, std::vector<Moebius> imgs) : group(g), images(std::move(imgs)) {
        if (static_cast<int>(images.size()) != group.num_generators())
            throw Error("SurfaceRep: wrong number of generator images");
    }

    static SurfaceRep trivial(int genus = 2) { return SurfaceRep(SurfaceGroup(genus)); }

    Moebius evaluate(const Word& w) const {
        Moebius g;
        for (int l : w.letters) {
            const int idx = std::abs(l) - 1;
            if (idx < 0 || idx >= static_cast<int>(images.size()))
                throw Error("evaluate: letter indexes a missing generator");
            g = g * (l > 0 ? images[idx] : images[idx].inverse());
        }
        g.fix_sign();
        return g;
    }

    SurfaceRep conjugated_by(const Moebius& h) const {
        SurfaceRep out(group);
        for (std::size_t i = 0; i < images.size(); ++i) out.images[i] = images[i].conjugated_by(h);
        return out;
    }
};

inline double relator_residual(const SurfaceRep& rep) {
    return rep.evaluate(rep.group.relator()).dist_to_identity();
}

/// Conjugate every generator image by diag(1,-1): (a,b,c,d) -> (a,-b,-c,d).
inline SurfaceRep apply_sigma(const SurfaceRep& rep) {
    SurfaceRep out(rep.group);
    for (std::size_t i = 0; i < rep.images.size(); ++i) {
        const Moebius& g = rep.images[i];
        out.images[i] = Moebius(g.a, -g.b, -g.c, g.d);
    }
    return out;
}

inline std::vector<std::pair<Word, double>> length_spectrum(const SurfaceRep& rep, int radius,
                                                            std::size_t cap = 2'000'000) {
    if (ball_count(rep.group, radius) > cap)
        throw BallTooLarge("length_spectrum: word count exceeds the configured cap");
    std::vector<std::pair<Word, double>> out;
    out.reserve(ball_count(rep.group, radius));
    visit_ball(rep.group, radius, [&](const Word& w) {
        out.emplace_back(w, translation_length(rep.evaluate(w)));
    });
    return out;
}

inline constexpr const char* kRepFormatHeader = "rep-format 1";

inline void write_rep(std::ostream& os, const SurfaceRep& rep) {
    os << kRepFormatHeader << "\n";
    os << "genus " << rep.group.genus << "\n";
    os << std::setprecision(17);
    for (const Moebius& g : rep.images)
        os << g.a << " " << g.b << " " << g.c << " " << g.d << "\n";
}

inline void save_rep(const std::string& path, const SurfaceRep& rep) {
    std::ofstream os(path);
    if (!os) throw Error("save_rep: cannot open " + path);
    write_rep(os, rep);
}

inline SurfaceRep read_rep(std::istream& is, bool allow_residual = false) {
    std::string line;
    if (!std::getline(is, line) || line != kRepFormatHeader)
        throw ParseError("rep file: missing or unknown header (expected '" +
                         std::string(kRepFormatHeader) + "')");
    if (!std::getline(is, line)) throw ParseError("rep file: missing genus line");
    int genus = 0;
    {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key >> genus) || key != "genus" || genus < 2)
            throw ParseError("rep file: bad genus line: " + line);
    }
    SurfaceRep rep{SurfaceGroup(genus)};
    for (int i = 0; i < rep.group.num_generators(); ++i) {
        if (!std::getline(is, line))
            throw ParseError("rep file: missing matrix row " + std::to_string(i + 1));
        std::istringstream ls(line);
        double a, b, c, d;
        if (!(ls >> a >> b >> c >> d))
            throw ParseError("rep file: malformed matrix row " + std::to_string(i + 1) + ": " + line);
        const double det = a * d - b * c;
        if (!(det > 0.0) || std::abs(det - 1.0) > 1e-6)
            throw ParseError("rep file: row " + std::to_string(i + 1) +
                             " determinant " + std::to_string(det) + " is not 1");
        rep.images[i] = Moebius(a, b, c, d);
    }
    const double res = relator_residual(rep);
    if (res > 1e-6 && !allow_residual)
        throw RelatorViolation("rep file: relator residual " + std::to_string(res) +
                               " exceeds 1e-6 (pass allow_residual to accept)");
    return rep;
}

inline SurfaceRep load_rep(const std::string& path, bool allow_residual = false) {
    std::ifstream is(path);
    if (!is) throw Error("load_rep: cannot open " + path);
    return read_rep(is, allow_residual);
}

} // namespace domlip
