#pragma once

#include "nsmk/field.hpp"

#include <cstdint>

namespace nsmk {

/// Regularity exponent of W_alpha: (alpha+1)/2 below 1/2, alpha + 1/4 above.
double theta_map(double alpha);

/// Orthonormal real basis (e1, e2) of the plane orthogonal to k != 0.
std::array<RVec3, 2> solenoidal_basis(const WaveVector& k);

/// Per-mode Leray projection w - k (k.w)/|k|^2. Throws for k = 0.
CVec3 leray_project(const WaveVector& k, const CVec3& w);

/// Multiplies the coefficient at k by |k|^{2 theta}.
SpectralField apply_power(const SpectralField& x, double theta);

/// Full-lattice sum of |k|^{4 theta} |x_k|^2 (conjugate pairs counted twice).
double norm2(const SpectralField& x, double theta);
double norm2(const SpectralField& x, const SpaceTag& tag);
double norm(const SpectralField& x, const SpaceTag& tag);

/// Real inner product <x, y>_H over the full lattice.
double inner(const SpectralField& x, const SpectralField& y);

/// L_a x: coefficient at k multiplied by exp(-a |k|). Requires a >= 0.
SpectralField heat_regularize(const SpectralField& x, double a);

/// m_a x (y) = x(y + a): coefficient at k multiplied by exp(i k.a).
SpectralField translate(const SpectralField& x, const RVec3& shift);

enum class ModeSide { low, high };

/// Keeps modes with |k|_inf <= K (low) or |k|_inf > K (high).
SpectralField project_modes(const SpectralField& x, int cutoff, ModeSide side);

/// Result of checking the SpectralField invariants.
struct FieldCheck {
    bool ok = true;
    double max_divergence = 0.0;  ///< max |k.x_k| / (|k| |x_k|)
    bool finite = true;
};

/// Validates incompressibility (relative tolerance) and finiteness.
FieldCheck validate(const SpectralField& x, double tol = 1e-12);

/// Random divergence-free field with independent Gaussian coefficients whose
/// variance decays like |k|^{-2 decay}; scaled so |x|_H^2 == energy.
/// Deterministic in (key, stream).
SpectralField random_field(int n_modes, double energy, std::uint64_t key,
                           std::uint64_t stream = 0, double decay = 2.0);

}  // namespace nsmk
