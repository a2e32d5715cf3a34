#pragma once

#include "nsmk/config.hpp"

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsmk {

enum class Verb { simulate, invariant, flux, mixing, stopping, energy_check };

Verb parse_verb(const std::string& name);
std::string to_string(Verb verb);

/// Every trajectory of the ensemble diverged; the CLI maps it to exit code 3.
class AllTrajectoriesDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Worker count: `requested` (or the OpenMP default when 0), capped by NSMK_THREADS.
int worker_count(int requested = 0);

/// Runs fn(i) for i in [0, n) on up to `workers` OpenMP threads. Each index
/// runs exactly once, so results are independent of scheduling. The first
/// exception (by index) is rethrown after all indices finish.
template <class F>
void parallel_for(std::size_t n, int workers, F&& fn) {
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers > 0 ? workers : 1)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct TrajectoryRecord {
    std::uint64_t index = 0;
    std::uint64_t key = 0;
    std::string label;  ///< e.g. "dt/2" or "R=2" for verbs running several ensembles
    bool diverged = false;
    double last_valid_time = 0.0;
    std::string message;
};

struct FileEntry {
    std::string name;  ///< relative to the output directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct Verdict {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct RunManifest {
    std::string verb;
    std::string config_hash;
    std::string code_version;
    double wall_clock_seconds = 0.0;
    int workers = 1;
    std::vector<TrajectoryRecord> trajectories;
    std::vector<FileEntry> files;
    std::vector<Verdict> verdicts;

    bool checks_passed() const;
    std::size_t diverged_count() const;
    std::string to_json() const;
};

struct RunOptions {
    std::filesystem::path out_dir;
    int workers = 0;
    /// Verdict lines (energy-check) go here when set.
    std::ostream* verdict_stream = nullptr;
};

/// Runs the verb over the ensemble, writes CSVs (and snapshots for simulate),
/// config.ini and manifest.json into out_dir. Diverged trajectories are
/// recorded and skipped; throws AllTrajectoriesDiverged when none survive.
RunManifest run_ensemble(const EnsembleSpec& spec, Verb verb, const RunOptions& opts);

std::string code_version();

}  // namespace nsmk
