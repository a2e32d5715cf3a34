#pragma once

#include "nsmk/dynamics.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace nsmk {

/// zero | random:<energy> (|x0|_H^2 = energy) | path to a snapshot.
struct InitialCondition {
    enum class Kind { zero, random, snapshot };
    Kind kind = Kind::zero;
    double energy = 0.0;
    std::string path;

    static InitialCondition parse(const std::string& text);
    std::string text() const;
};

struct ObservablesConfig {
    /// Extra ledger columns |A^theta x|^2.
    std::vector<double> thetas;
    /// Spectrum shells E(1)..E(shells) in measure.csv.
    int shells = 2;
    /// Flux cutoffs; empty means 1..N.
    std::vector<int> flux_cutoffs;
    std::vector<double> inertial_a{0.2, 0.1, 0.05, 0.025};
    /// Cut-off levels for the stopping verb; empty means {R}.
    std::vector<double> R_grid;
    std::vector<double> delta_grid{0.5, 1.0, 2.0};
    /// H-moment check times; empty means {t_final/4, t_final/2, t_final}.
    std::vector<double> check_times;
    std::string mixing_observable = "h2";
    /// Supermartingale bump; width <= 0 means [t_final/4, 3 t_final/4].
    double bump_start = 0.0;
    double bump_width = 0.0;
    /// energy-check: extrapolate the supermartingale statistics from dt and dt/2.
    bool richardson = true;
};

struct EnsembleSpec {
    RunConfig run;
    int n_traj = 1;
    /// Trajectory i starts from x0[i % x0.size()].
    std::vector<InitialCondition> x0{InitialCondition{}};
    ObservablesConfig observables;
    /// Directory that relative snapshot paths resolve against.
    std::filesystem::path base_dir;

    void validate() const;
    SpectralField initial_state(std::size_t traj) const;
    std::vector<int> flux_cutoffs() const;

    /// Deterministic re-serialization; parse_config(canonical()) gives the same spec.
    std::string canonical() const;
    std::string hash() const;
};

/// Parses INI text with sections [physics], [discretization], [noise],
/// [ensemble], [observables]. Keys may also appear before any section.
/// Throws ConfigError on syntax errors (with line), unknown keys or invalid values.
EnsembleSpec parse_config(const std::string& text, const std::string& origin = "<config>");
EnsembleSpec load_config(const std::filesystem::path& path);

}  // namespace nsmk
