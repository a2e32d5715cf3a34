#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nsmk {

/// Welford running mean/variance; mergeable (Chan et al. pairwise update).
struct Welford {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x);
    void merge(const Welford& other);
    double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
};

/// Mean with standard error; n_eff accounts for serial correlation.
struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;
    double n_eff = 0.0;
    std::size_t n = 0;
};

/// Integrated autocorrelation time 1 + 2 sum rho_t with Sokal's automatic
/// window (smallest W with W >= c tau(W)).
double integrated_autocorrelation_time(std::span<const double> series, double window_c = 5.0);

/// Time-series mean with an autocorrelation-corrected standard error.
MeanEstimate estimate_series_mean(std::span<const double> series);

/// Mean of independent samples.
MeanEstimate estimate_iid_mean(std::span<const double> samples);

/// Average of independent estimates (equal weights).
MeanEstimate combine_independent(std::span<const MeanEstimate> parts);

/// Difference a - b of independent estimates.
MeanEstimate difference_independent(const MeanEstimate& a, const MeanEstimate& b);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Trapezoid rule on a (possibly non-uniform) grid.
double trapezoid(std::span<const double> t, std::span<const double> y);

/// Running trapezoid integral, out[0] = 0.
std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> y);

}  // namespace nsmk
