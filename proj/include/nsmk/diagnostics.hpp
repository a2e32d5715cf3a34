#pragma once

#include "nsmk/dynamics.hpp"
#include "nsmk/field.hpp"
#include "nsmk/stats.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nsmk {

// ---------------------------------------------------------------------------
// energy processes

/// E1_t = |x_t|_H^2 + 2 nu int_0^t |x_s|_V^2 ds - t sigma2.
std::vector<double> energy_E1(const Trajectory& traj, double sigma2);

/// En_t = |x_t|^{2n} + 2n nu int |x|^{2n-2}|x|_V^2 - n(2n-1) sigma2 int |x|^{2n-2}, n >= 2.
std::vector<double> energy_En(const Trajectory& traj, int n, double sigma2);

/// <v, B(v + z, z)>, the trilinear integrand of the G process.
double g_integrand(const SpectralField& v, const SpectralField& z);

/// G_t = |v_t|^2/2 + nu int |v|_V^2 + int <v, B(v+z, z)>, from kept states.
std::vector<double> g_process(const Trajectory& v, const Trajectory& z, const Trajectory& full);

/// G_t from sampled series of |v|_H^2, |v|_V^2 and the trilinear integrand.
std::vector<double> g_process(std::span<const double> times, std::span<const double> v_h2,
                              std::span<const double> v_v2, std::span<const double> trilinear,
                              double nu);

/// Full system and its Stokes part advanced in lockstep with shared noise;
/// everything the energy processes need, sampled every cfg.sample_every steps.
struct EnergyLedger {
    Trajectory xi;                  ///< ledger of the full system (no states)
    std::vector<double> v_h2;       ///< |v|_H^2, v = xi - z
    std::vector<double> v_v2;       ///< |v|_V^2
    std::vector<double> trilinear;  ///< <v, B(v + z, z)>
    std::vector<double> inertial_a;
    std::vector<std::vector<double>> inertial;  ///< inertial[j][n] = D_{a_j}(xi_n)

    std::vector<double> E1(double sigma2) const { return energy_E1(xi, sigma2); }
    std::vector<double> En(int n, double sigma2) const { return energy_En(xi, n, sigma2); }
    std::vector<double> G() const { return g_process(xi.times, v_h2, v_v2, trilinear, xi.nu); }
};

/// cfg.system is ignored (the full system is run). Throws IntegrationDiverged.
EnergyLedger energy_ledger(const RunConfig& cfg, const SpectralField& x0, std::uint64_t trajectory_index,
                           std::span<const double> inertial_a = {});

/// Smooth bump supported on [start, start + width], built from the cut-off glue.
struct Bump {
    double start = 0.0;
    double width = 1.0;

    double operator()(double t) const;
};

struct SupermartingaleResult {
    MeanEstimate estimate;
    bool pass = false;
};

/// Ensemble estimate of E[int phi'(r) theta_r dr]; PASS when >= -3 SE.
/// The integral is evaluated by summation by parts on the sample grid, so a
/// constant series gives exactly 0.
SupermartingaleResult supermartingale_smooth_test(std::span<const double> times,
                                                  std::span<const std::vector<double>> ensemble,
                                                  const Bump& phi);

// ---------------------------------------------------------------------------
// spectral observables

/// Pi_K = <P_K^l x, B(x, P_K^h x)>.
double flux(const SpectralField& x, int cutoff);
/// Pi_K through <P_K^l x, B(x, x)>.
double flux_via_full(const SpectralField& x, int cutoff);
/// Pi_K for every cutoff in the grid from a given B(x, x).
std::vector<double> flux_profile(const SpectralField& x, const SpectralField& bxx, std::span<const int> cutoffs);

/// D_a = <L_a x, L_a B(x, x)>.
double inertial_regularized(const SpectralField& x, double a);
std::vector<double> inertial_profile(const SpectralField& x, const SpectralField& bxx, std::span<const double> as);

/// E(kappa) = sum over kappa <= |k| < kappa+1 of |x_k|^2 (full lattice); index = kappa.
std::vector<double> shell_spectrum(const SpectralField& x);

/// Declares which scalar observables are evaluated at each sample.
///
/// Names: h2, v2, theta:<t>, E(<kappa>), flux:<K>, lowv2:<K> (= |grad P_K^l x|^2),
/// D:<a>, and any custom names.
struct ObservableSpec {
    std::vector<double> thetas;
    int shells = 0;  ///< E(1) .. E(shells)
    std::vector<int> flux_cutoffs;
    std::vector<double> inertial_a;
    std::vector<std::pair<std::string, std::function<double(const SpectralField&)>>> custom;
};

class ObservableSet {
public:
    explicit ObservableSet(ObservableSpec spec);

    const std::vector<std::string>& names() const { return names_; }
    std::size_t size() const { return names_.size(); }
    bool needs_nonlinearity() const { return !spec_.flux_cutoffs.empty() || !spec_.inertial_a.empty(); }

    void evaluate(const SpectralField& x, std::span<double> out) const;
    std::vector<double> evaluate(const SpectralField& x) const;

private:
    ObservableSpec spec_;
    std::vector<std::string> names_;
};

std::string observable_name_flux(int cutoff);
std::string observable_name_lowv2(int cutoff);
std::string observable_name_inertial(double a);
std::string observable_name_theta(double theta);
std::string observable_name_shell(int kappa);

/// Collects observable series during a run (usable as a simulate observer).
class ObservableRecorder {
public:
    explicit ObservableRecorder(const ObservableSet& set) : set_(&set), columns_(set.size()) {}

    void operator()(double t, const SpectralField& x);

    const std::vector<double>& times() const { return times_; }
    const std::vector<std::vector<double>>& columns() const { return columns_; }

private:
    const ObservableSet* set_;
    std::vector<double> times_;
    std::vector<std::vector<double>> columns_;
};

// ---------------------------------------------------------------------------
// Krylov-Bogoliubov averaging

/// Post-burn-in observable series of one or more trajectories with running
/// Welford accumulators. Trajectories are independent; within a trajectory,
/// standard errors use the integrated autocorrelation time.
class EmpiricalMeasure {
public:
    EmpiricalMeasure(double burn_in, std::vector<std::string> names);

    /// Adds one trajectory; columns[j] is the series of names()[j] on times.
    void add(std::span<const double> times, const std::vector<std::vector<double>>& columns);
    void add(const ObservableRecorder& rec) { add(rec.times(), rec.columns()); }
    void merge(const EmpiricalMeasure& other);

    double burn_in() const { return burn_in_; }
    const std::vector<std::string>& names() const { return names_; }
    bool has(const std::string& name) const;
    std::size_t trajectory_count() const { return series_.size(); }
    std::size_t sample_count() const;

    const Welford& accumulator(const std::string& name) const;
    std::span<const double> series(std::size_t traj, const std::string& name) const;
    std::span<const double> times(std::size_t traj) const { return times_.at(traj); }

    MeanEstimate mean(const std::string& name) const;
    /// Mean of constant + sum_j w_j f_j, with the SE of the combined series.
    MeanEstimate mean_of(const std::vector<std::pair<std::string, double>>& terms, double constant = 0.0) const;

private:
    std::size_t index(const std::string& name) const;

    double burn_in_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> times_;
    std::vector<std::vector<std::vector<double>>> series_;  ///< [traj][obs][n]
    std::vector<Welford> acc_;
};

/// Evaluates the observable set on the kept states with t >= burn_in.
/// Throws if no sample survives the burn-in.
EmpiricalMeasure kb_average(const Trajectory& traj, double burn_in, const ObservableSet& obs);
EmpiricalMeasure kb_average(std::span<const Trajectory> ensemble, double burn_in, const ObservableSet& obs);

struct BalanceRow {
    int cutoff = 0;
    MeanEstimate flux;
    /// Pi_K - (Tr Q_{<=K} - 2 nu |grad P_K^l x|^2) / 2, averaged.
    MeanEstimate residual;
};

struct KBSummary {
    MeanEstimate epsilon;           ///< mean |x|_V^2
    MeanEstimate balance;           ///< 2 nu eps - sigma2
    double iota_residual = 0.0;     ///< sigma2/2 - nu eps
    double iota_flux = 0.0;         ///< mean Pi_K at the largest cutoff in the grid
    std::vector<BalanceRow> rows;
};

/// Requires v2 and, per cutoff, flux:K and lowv2:K in the measure.
KBSummary kb_summary(const EmpiricalMeasure& m, double nu, const CovarianceSpec& noise,
                     std::span<const int> cutoffs);

// ---------------------------------------------------------------------------
// ensemble statistics

struct HMomentRow {
    double t = 0.0;
    MeanEstimate mean;
    double bound = 0.0;
    bool pass = false;
};

/// Checks mean |x_t|_H^2 <= |x0|^2 e^{-2 nu t} + sigma2/(2 nu)(1 - e^{-2 nu t}) + 3 SE.
std::vector<HMomentRow> h_moment_bound_check(std::span<const double> times,
                                             std::span<const std::vector<double>> h2_ensemble, double x0_h2,
                                             double nu, double sigma2, std::span<const double> check_times);

struct MixingReport {
    std::string observable;
    std::vector<double> times;
    std::vector<double> distance;
    std::vector<double> se;
    MeanEstimate stationary;
    bool fit_available = false;
    double C = 0.0;
    double a = 0.0;
    double r2 = 0.0;
    std::size_t n_fit = 0;
};

/// d(t) = |mean over the x0 ensemble at t - stationary mean|, fitted by
/// log d = log C - a t over the leading run of points with d > 3 SE.
/// The stationary mean pools every sample of the stationary ensemble.
MixingReport mixing_fit(const std::string& observable, std::span<const double> times,
                        std::span<const std::vector<double>> from_x0,
                        std::span<const std::vector<double>> stationary);

struct ProbabilityEstimate {
    double p = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

/// Fraction of values <= level, binomial SE.
ProbabilityEstimate entrance_probability(std::span<const double> values_at_T, double level);

/// Value of a ledger series at the sample closest to t.
double value_at(const Trajectory& traj, const std::vector<double>& series, double t);

struct StoppingEnsemble {
    double R = 0.0;
    std::vector<double> initial_veps2;
    std::vector<std::optional<double>> tau;
};

struct StoppingRow {
    double R = 0.0;
    double delta = 0.0;
    double p_hat = 0.0;
    double se = 0.0;
    std::size_t n = 0;
    std::size_t excluded = 0;
};

/// P[tau <= delta] per (R, delta); runs with |x0|^2_{V_eps} > R/2 are excluded and counted.
std::vector<StoppingRow> stopping_statistics(std::span<const StoppingEnsemble> runs,
                                             std::span<const double> deltas);

struct JEstimate {
    MeanEstimate estimate;
    double tail_bound = 0.0;
};

/// J = E int_{t0}^inf e^{-lambda (t - t0)} f(x_t) dt over the sampled window,
/// using exponentially fitted quadrature of the piecewise-linear f (exact for
/// constant f). tail_bound = e^{-lambda (t_end - t0)} sup|f| / lambda.
JEstimate j_functional(std::span<const double> times, std::span<const std::vector<double>> ensemble,
                       double lambda, double t0 = 0.0);

struct ShiftedPair {
    std::string base;
    std::string shifted;
    /// Pathwise identity expected (norm observables).
    bool exact = false;
};

struct TranslationRow {
    ShiftedPair pair;
    MeanEstimate difference;
    double max_pathwise_deviation = 0.0;
    bool pass = false;
};

struct TranslationReport {
    std::vector<TranslationRow> rows;
    bool pass = true;
};

/// Compares kb means of f and f o m_a through the paired difference series.
/// Exact pairs must agree at every sample to 1e-12 relative.
TranslationReport translation_invariance_check(const EmpiricalMeasure& m, std::span<const ShiftedPair> pairs);

}  // namespace nsmk
