#pragma once

#include "nsmk/field.hpp"
#include "nsmk/noise.hpp"
#include "nsmk/nonlinearity.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nsmk {

enum class SystemKind { full, stokes, cutoff };

SystemKind parse_system(const std::string& name);
std::string to_string(SystemKind kind);

/// Smooth cut-off chi_R: 1 on [0, 3R/2], 0 on [2R, inf), exp-glue in between.
struct CutoffShape {
    double R = 1.0;

    /// g(t) = h(t) / (h(t) + h(1-t)), h(t) = exp(-1/t) for t > 0.
    static double glue(double t);
    static double glue_derivative(double t);

    double value(double s) const;
    double derivative(double s) const;

    /// c with |chi_R'| <= c / R, measured on a fine grid of the transition.
    static double derivative_constant();
};

double chi(const CutoffShape& shape, double s);

struct RunConfig {
    double nu = 0.1;
    int n_modes = 8;
    double dt = 1e-3;
    double t_final = 10.0;
    double burn_in = 0.0;
    CovarianceSpec noise;
    double eps0 = 0.25;
    double R = 1e3;
    SystemKind system = SystemKind::cutoff;
    std::uint64_t seed = 1;
    int sample_every = 1;
    int snapshot_every = 0;
    /// Extra ledger columns |A^theta x|_H^2.
    std::vector<double> thetas;

    void validate() const;
    std::int64_t n_steps() const;
    double sample_interval() const { return dt * sample_every; }
};

/// Sampled time series of one run. States are kept only on request.
struct Trajectory {
    double nu = 0.0;
    int n_modes = 0;
    double eps0 = 0.25;
    std::uint64_t key = 0;
    std::vector<double> thetas;

    std::vector<double> times;
    std::vector<double> h2;
    std::vector<double> v2;
    std::vector<double> veps2;
    std::vector<std::vector<double>> extra;  ///< extra[j][n] = |A^{thetas[j]} x_n|^2
    std::vector<SpectralField> states;

    /// Time of the first step at which chi_R < 1 was applied (cutoff system).
    std::optional<double> first_cutoff_time;

    std::size_t size() const { return times.size(); }
    void record(double t, const SpectralField& x, bool keep_state);
};

/// One-step exponential-Euler integrator.
///
/// x_k <- e^{-nu|k|^2 dt} x_k - s phi_1(-nu|k|^2 dt) dt B(x,x)_k + eta_k, with s = 1 (full),
/// s = 0 (stokes) or s = chi_R(|x|^2_{V_eps}) (cutoff); eta is the exact OU increment.
/// Noise draws are keyed by (key, step index, mode), so the full, stokes and cutoff
/// systems built from the same key see the same forcing.
class Integrator {
public:
    Integrator(const RunConfig& cfg, std::uint64_t key);

    SpectralField step(const SpectralField& x, std::uint64_t step_index);
    void step_in_place(SpectralField& x, std::uint64_t step_index);

    /// Scale applied to B in the most recent step.
    double last_scale() const { return last_scale_; }
    double veps2(const SpectralField& x) const;
    const RunConfig& config() const { return cfg_; }

private:
    RunConfig cfg_;
    std::uint64_t key_;
    CutoffShape shape_;
    std::vector<double> decay_;
    std::vector<double> phi_dt_;
    std::vector<double> noise_sd_;
    std::vector<double> veps_weight_;
    std::vector<std::array<RVec3, 2>> basis_;
    Nonlinearity nonlinearity_;
    SpectralField bterm_;
    double last_scale_ = 0.0;
};

SpectralField step_full(const SpectralField& x, const RunConfig& cfg, std::uint64_t step_index,
                        std::uint64_t key);
SpectralField step_cutoff(const SpectralField& x, const RunConfig& cfg, std::uint64_t step_index,
                          std::uint64_t key);

struct SimulateOptions {
    bool keep_states = false;
    std::uint64_t trajectory_index = 0;
    /// Start the stokes system from x0 instead of 0 (linear relaxation runs).
    bool stokes_from_x0 = false;
    /// Called at every sample time with the current state.
    std::function<void(double, const SpectralField&)> observer;
    /// Called with (step index, time, state) every snapshot_every steps.
    std::function<void(std::int64_t, double, const SpectralField&)> snapshot;
};

/// Integrates cfg.system from x0. Stokes runs start from 0 unless opts.stokes_from_x0.
/// Throws IntegrationDiverged on a non-finite state.
Trajectory simulate(const RunConfig& cfg, const SpectralField& x0, const SimulateOptions& opts = {});

/// First sample time with |x|^2_{V_eps0} >= 3R/2.
std::optional<double> stopping_time(const Trajectory& traj, double eps0, double R);

/// v = xi - z sample by sample; both trajectories need kept states.
Trajectory residual_v(const Trajectory& full, const Trajectory& stokes);

}  // namespace nsmk
