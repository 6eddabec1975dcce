#pragma once

// Face-sampled quadratic differentials and the Hermitian pairing
// integral |phi|^2 / alpha^2 against the hyperbolic area element.

#include <complex>
#include <vector>

#include "domlip/mesh.hpp"

namespace domlip {

struct QuadDiff {
    std::vector<Complex> phi; // one chart coefficient per face

    QuadDiff() = default;
    explicit QuadDiff(std::size_t faces) : phi(faces, Complex(0.0, 0.0)) {}
};

inline Complex wp_pair(const QuadDiff& a, const QuadDiff& b, const Mesh& mesh) {
    if (a.phi.size() != mesh.faces.size() || b.phi.size() != mesh.faces.size())
        throw IndexMismatch("wp_pair: differential is not indexed by this mesh");
    Complex s(0.0, 0.0);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const double alpha = mesh.conformal[f];
        s += a.phi[f] * std::conj(b.phi[f]) / (alpha * alpha) * mesh.face_area[f];
    }
    return s;
}

inline double wp_norm(const QuadDiff& a, const Mesh& mesh) {
    return std::sqrt(std::max(0.0, wp_pair(a, a, mesh).real()));
}

inline QuadDiff operator-(const QuadDiff& a, const QuadDiff& b) {
    if (a.phi.size() != b.phi.size()) throw IndexMismatch("QuadDiff: size mismatch");
    QuadDiff out(a.phi.size());
    for (std::size_t f = 0; f < a.phi.size(); ++f) out.phi[f] = a.phi[f] - b.phi[f];
    return out;
}

inline QuadDiff operator+(const QuadDiff& a, const QuadDiff& b) {
    if (a.phi.size() != b.phi.size()) throw IndexMismatch("QuadDiff: size mismatch");
    QuadDiff out(a.phi.size());
    for (std::size_t f = 0; f < a.phi.size(); ++f) out.phi[f] = a.phi[f] + b.phi[f];
    return out;
}

inline QuadDiff operator*(double c, const QuadDiff& a) {
    QuadDiff out(a.phi.size());
    for (std::size_t f = 0; f < a.phi.size(); ++f) out.phi[f] = c * a.phi[f];
    return out;
}

} // namespace domlip
