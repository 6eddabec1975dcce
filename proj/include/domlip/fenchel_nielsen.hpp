#pragma once

// Fenchel-Nielsen length/twist coordinates and the synthesis of Fuchsian
// holonomy. Genus 2 uses two one-holed tori glued along the separating
// curve; genus 3 uses a central pair of pants capped with three one-holed
// tori. The relator holds exactly by construction (the second side of each
// gluing is conjugated onto the inverse of the first).

#include <cmath>
#include <vector>

#include "domlip/euler_class.hpp"
#include "domlip/representation.hpp"

namespace domlip {

struct FNCoords {
    std::vector<double> lengths; // 3g-3 positive pants-curve lengths
    std::vector<double> twists;  // 3g-3 twists, in length units

    FNCoords() = default;
    FNCoords(std::vector<double> l, std::vector<double> t)
        : lengths(std::move(l)), twists(std::move(t)) {
        if (lengths.size() != twists.size() || lengths.size() % 3 != 0 || lengths.empty())
            throw Error("FNCoords: lengths and twists must both have size 3g-3");
    }

    int genus() const { return static_cast<int>(lengths.size() / 3) + 1; }
    std::size_t dim() const { return 2 * lengths.size(); }

    double& coord(std::size_t k) {
        return k < lengths.size() ? lengths[k] : twists[k - lengths.size()];
    }
    double coord(std::size_t k) const {
        return k < lengths.size() ? lengths[k] : twists[k - lengths.size()];
    }
};

namespace detail {

/// One-holed torus with core length l, twist tau along the core, boundary
/// length L. Returns generators (A, B) with boundary [A,B] of trace
/// -2 cosh(L/2); the core A runs along the imaginary axis.
inline std::pair<Moebius, Moebius> torus_block(double l, double tau, double L,
                                               bool reflect = false) {
    const double x = 2.0 * std::cosh(l / 2.0);
    // tr[A, B0(t)] = x^2 + y^2 - x^2 y^2 / 4 - 2 with y = 2 cosh(t/2);
    // setting it to -2 cosh(L/2) solves in closed form.
    const double y2 = (2.0 * std::cosh(L / 2.0) + x * x - 2.0) / (x * x / 4.0 - 1.0);
    const double ch = std::sqrt(y2) / 2.0;
    double sh = std::sqrt(std::max(0.0, ch * ch - 1.0));
    // The reflected block lies on the other side of its boundary axis; the
    // genus-3 assembly needs that side to come out Fuchsian.
    if (reflect) sh = -sh;
    const Moebius A = Moebius::axial(l);
    const Moebius B0(ch, -sh, -sh, ch); // axis is the unit semicircle
    return {A, Moebius::axial(tau) * B0};
}

/// Conjugator sending the axis of a hyperbolic element to the standard
/// position: repelling fixed point to 0, attracting to infinity, so that
/// P h P^{-1} is diagonal with the expanding entry first.
inline Moebius standardize(const Moebius& h) {
    const auto [rep, att] = axis(h);
    Moebius P;
    if (att.at_infinity) P = Moebius::horizontal(-rep.coord);
    else if (rep.at_infinity) P = Moebius(0.0, -1.0, 1.0, -att.coord);
    else if (rep.coord > att.coord) P = Moebius(1.0, -rep.coord, 1.0, -att.coord);
    else P = Moebius(-1.0, rep.coord, 1.0, -att.coord);
    const Moebius D = P * h * P.inverse();
    if (std::abs(D.b) + std::abs(D.c) > 1e-9 * D.frobenius() || std::abs(D.a) < std::abs(D.d))
        throw Error("standardize: conjugation did not diagonalize as expected");
    return P;
}

/// Conjugator G with G h G^{-1} = target, both hyperbolic of equal length,
/// twisted by tau along the common standardized axis.
inline Moebius glue(const Moebius& target, const Moebius& h, double tau) {
    return standardize(target).inverse() * Moebius::axial(tau) * standardize(h);
}

} // namespace detail

/// Words whose holonomy lengths are the FN length coordinates, in order.
inline std::vector<Word> fn_curve_words(int genus) {
    std::vector<Word> out;
    for (int i = 0; i < genus - 1; ++i) out.push_back(Word({2 * i + 1}));
    if (genus == 2) {
        out.push_back(Word({3}));            // a2
        out.push_back(Word({1, 2, -1, -2})); // separating curve [a1,b1]
    } else if (genus == 3) {
        out.push_back(Word({5})); // a3
        for (int i = 0; i < 3; ++i) {
            const int a = 2 * i + 1, b = 2 * i + 2;
            out.push_back(Word({a, b, -a, -b}));
        }
    } else {
        throw Error("fn_curve_words: only genus 2 and 3 are supported");
    }
    return out;
}

inline SurfaceRep fn_to_holonomy(const FNCoords& coords) {
    const int genus = coords.genus();
    for (double l : coords.lengths)
        if (l < 1e-4) throw DegenerateLength("fn_to_holonomy: pants-curve length below 1e-4");

    SurfaceRep rep{SurfaceGroup(genus)};
    const auto& L = coords.lengths;
    const auto& T = coords.twists;

    if (genus == 2) {
        // lengths = (core a1, core a2, separating curve).
        const auto [A1, B1] = detail::torus_block(L[0], T[0], L[2]);
        const auto [A2, B2] = detail::torus_block(L[1], T[1], L[2]);
        const Moebius C1 = A1 * B1 * A1.inverse() * B1.inverse();
        const Moebius C2 = A2 * B2 * A2.inverse() * B2.inverse();
        const Moebius G = detail::glue(C1.inverse(), C2, T[2]);
        rep.images = {A1, B1, G * A2 * G.inverse(), G * B2 * G.inverse()};
    } else if (genus == 3) {
        // lengths = (cores a1,a2,a3, pants curves L1,L2,L3).
        // Central pants: U, V, W = (UV)^{-1} with l(U)=L1, l(V)=L2, l(W)=L3.
        const Moebius U = Moebius::axial(L[3]);
        const double X = std::cosh((L[3] - L[4]) / 2.0), Y = std::cosh((L[3] + L[4]) / 2.0);
        const double h2 = (std::cosh(L[5] / 2.0) + X) / (Y - X);
        const double s = 2.0 * std::asinh(std::sqrt(h2));
        const Moebius M = Moebius::cross_axial(s);
        const Moebius V = M * Moebius::axial(-L[4]) * M.inverse();
        const Moebius W = (U * V).inverse();
        const Moebius pants[3] = {U, V, W};
        for (int i = 0; i < 3; ++i) {
            const auto [A, B] = detail::torus_block(L[i], T[i], L[3 + i], true);
            const Moebius C = A * B * A.inverse() * B.inverse();
            const Moebius G = detail::glue(pants[i], C, T[3 + i]);
            rep.images[2 * i] = G * A * G.inverse();
            rep.images[2 * i + 1] = G * B * G.inverse();
        }
    } else {
        throw Error("fn_to_holonomy: only genus 2 and 3 are supported");
    }

    if (relator_residual(rep) > 1e-8)
        throw RelatorViolation("fn_to_holonomy: relator residual exceeds 1e-8");
    const int e = euler_class(rep);
    if (e == -(2 * genus - 2)) rep = apply_sigma(rep);
    else if (e != 2 * genus - 2)
        throw NotFuchsian("fn_to_holonomy: assembled representation is not Fuchsian");
    return rep;
}

/// Length coordinates measured back from a holonomy representation.
inline std::vector<double> fn_measure_lengths(const SurfaceRep& rep) {
    std::vector<double> out;
    for (const Word& w : fn_curve_words(rep.group.genus))
        out.push_back(translation_length(rep.evaluate(w)));
    return out;
}

} // namespace domlip
