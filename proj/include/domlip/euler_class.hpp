#pragma once

// Euler class of a surface-group representation, computed by lifting the
// boundary-circle action of each generator image to the real line and
// reading off the translation number of the lifted relator.

#include <cmath>
#include <numbers>
#include <vector>

#include "domlip/representation.hpp"

namespace domlip {

/// Disk-model form of a Moebius map: w -> (alpha w + beta)/(conj(beta) w + conj(alpha))
/// with |alpha|^2 - |beta|^2 = 1. The boundary action e^{i theta} picks up the
/// phase 2 arg(alpha + beta e^{-i theta}), which lifts continuously because
/// 1 + (beta/alpha) e^{-i theta} stays in the right half-plane.
struct CircleLift {
    Complex alpha, beta;

    explicit CircleLift(const Moebius& g)
        : alpha(0.5 * (g.a + g.d), 0.5 * (g.b - g.c)),
          beta(0.5 * (g.a - g.d), -0.5 * (g.b + g.c)) {}

    double operator()(double theta) const {
        const double base = std::arg(alpha);
        const Complex rel = 1.0 + (beta / alpha) * std::polar(1.0, -theta);
        return theta + 2.0 * (base + std::arg(rel));
    }
};

inline int euler_class(const SurfaceRep& rep, double relator_tol = 1e-6) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (relator_residual(rep) > relator_tol)
        throw RelatorViolation("euler_class: relator residual exceeds tolerance");

    std::vector<CircleLift> lifts;
    lifts.reserve(rep.images.size());
    std::vector<CircleLift> inv_lifts;
    std::vector<double> inv_offsets; // makes each inverse lift the functional inverse
    for (const Moebius& g : rep.images) {
        lifts.emplace_back(g);
        inv_lifts.emplace_back(g.inverse());
        const double delta = inv_lifts.back()(lifts.back()(0.0));
        const double k = std::round(delta / two_pi);
        if (std::abs(delta - two_pi * k) > 0.1)
            throw LiftAmbiguity("euler_class: inverse lift offset is not a multiple of 2 pi");
        inv_offsets.push_back(-two_pi * k);
    }

    double theta = 0.0;
    const Word rel = rep.group.relator();
    // The relator acts rightmost letter first.
    for (auto it = rel.letters.rbegin(); it != rel.letters.rend(); ++it) {
        const int idx = std::abs(*it) - 1;
        theta = *it > 0 ? lifts[idx](theta) : inv_lifts[idx](theta) + inv_offsets[idx];
    }
    const double e = theta / two_pi;
    const double rounded = std::round(e);
    if (std::abs(e - rounded) > 0.1)
        throw LiftAmbiguity("euler_class: translation number " + std::to_string(e) +
                            " is not close to an integer");
    const int result = static_cast<int>(rounded);
    const int bound = 2 * rep.group.genus - 2;
    if (std::abs(result) > bound)
        throw Error("euler_class: value violates the Milnor-Wood bound");
    return result;
}

inline bool is_fuchsian(const SurfaceRep& rep) {
    return std::abs(euler_class(rep)) == 2 * rep.group.genus - 2;
}

} // namespace domlip
