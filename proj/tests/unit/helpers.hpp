#pragma once

#include "nsmk/field.hpp"
#include "nsmk/spectral_ops.hpp"

#include <cmath>
#include <cstdint>

namespace nsmk::test {

inline SpectralField single_mode(int n_modes, const WaveVector& k, const CVec3& value) {
    SpectralField x(n_modes);
    const ModeRef ref = x.lattice().locate(k);
    CVec3 v = value;
    if (ref.conjugate) {
        for (auto& c : v) c = std::conj(c);
    }
    x[ref.index] = v;
    return x;
}

/// Random divergence-free field with a flat spectrum (every mode O(1)).
inline SpectralField random_flat(int n_modes, std::uint64_t seed, double energy = 1.0) {
    return random_field(n_modes, energy, 0xC0FFEEull + seed, seed, 0.0);
}

inline double max_abs_diff(const SpectralField& a, const SpectralField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (int c = 0; c < 3; ++c) m = std::max(m, std::abs(a[i][c] - b[i][c]));
    }
    return m;
}

inline double max_abs(const SpectralField& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (int c = 0; c < 3; ++c) m = std::max(m, std::abs(a[i][c]));
    }
    return m;
}

}  // namespace nsmk::test
