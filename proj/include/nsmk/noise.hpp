#pragma once

#include "nsmk/field.hpp"

#include <cstdint>
#include <string>

namespace nsmk {

/// Diagonal covariance Q = sigma0^2 A^{-q} truncated to |k|_inf <= N.
///
/// Each wave vector carries a two-dimensional divergence-free complex
/// subspace, so the full-lattice trace is sum_k 2 sigma0^2 |k|^{-2q}.
struct CovarianceSpec {
    double sigma0 = 1.0;
    double q = 2.0;
    double alpha0 = 0.25;
    int n_modes = 1;

    /// q_k = sigma0^2 |k|^{-2q}. Throws for k = 0.
    double mode_variance(const WaveVector& k) const;
    double mode_variance_k2(double k2) const;

    /// Tr[Q_N] (also called sigma^2).
    double trace() const;
    /// Tr[Q_N] restricted to |k|_inf <= K.
    double trace_low(int cutoff) const;
    /// sigma_a^2 = Tr[Q L_{2a}] = sum 2 q_k exp(-2 a |k|).
    double trace_regularized(double a) const;

    /// Copy with sigma0 rescaled so that trace() == target.
    CovarianceSpec normalized_to_trace(double target) const;

    void validate() const;
};

/// Checks of the noise regularity conditions, ordered so that
/// a4 => a3 => a2 => a1.
struct AssumptionReport {
    bool a1 = false;  ///< trace class on the infinite lattice: 2q > 3
    bool a2 = false;  ///< A^{3/4+alpha0} Q^{1/2} bounded for some alpha0 > 0
    bool a3 = false;  ///< as a2 with alpha0 > 1/6
    bool a4 = false;  ///< as a3 with bounded inverse: q == 3/2 + 2 alpha0
    double alpha0 = 0.0;
    double implied_alpha0 = 0.0;      ///< largest alpha0 with a2 holding: (q - 3/2)/2
    double sup_operator_proxy = 0.0;  ///< sup_k |k|^{2(3/4+alpha0)} sigma0 |k|^{-q}
    double inf_operator_proxy = 0.0;  ///< inf over the same set
    /// Q = A^{-3/2-alpha0} (read literally) fails the bounded-inverse condition.
    bool literal_exponent_flag = false;

    std::string table() const;
};

AssumptionReport check_assumptions(const CovarianceSpec& spec);

/// Noise increment Q^{1/2}(W_{t+dt} - W_t): independent complex Gaussians in
/// the divergence-free plane of each stored k, with E|x_k|^2 = 2 q_k dt.
/// Deterministic in (key, step).
SpectralField sample_increment(const CovarianceSpec& spec, double dt, std::uint64_t key,
                               std::uint64_t step);

}  // namespace nsmk
