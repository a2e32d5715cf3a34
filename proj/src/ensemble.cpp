#include "nsmk/ensemble.hpp"

#include "nsmk/diagnostics.hpp"
#include "nsmk/errors.hpp"
#include "nsmk/io.hpp"
#include "nsmk/philox.hpp"

#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#ifndef NSMK_VERSION
#define NSMK_VERSION "dev"
#endif

namespace nsmk {

namespace fs = std::filesystem;

Verb parse_verb(const std::string& name) {
    if (name == "simulate") return Verb::simulate;
    if (name == "invariant") return Verb::invariant;
    if (name == "flux") return Verb::flux;
    if (name == "mixing") return Verb::mixing;
    if (name == "stopping") return Verb::stopping;
    if (name == "energy-check") return Verb::energy_check;
    throw ConfigError("unknown verb '" + name + "'");
}

std::string to_string(Verb verb) {
    switch (verb) {
    case Verb::simulate: return "simulate";
    case Verb::invariant: return "invariant";
    case Verb::flux: return "flux";
    case Verb::mixing: return "mixing";
    case Verb::stopping: return "stopping";
    case Verb::energy_check: return "energy-check";
    }
    return "?";
}

std::string code_version() { return std::string("nsmk ") + NSMK_VERSION; }

int worker_count(int requested) {
    int n = requested > 0 ? requested : omp_get_max_threads();
    if (const char* env = std::getenv("NSMK_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap > 0) n = std::min<long>(n, cap);
    }
    return std::max(1, n);
}

bool RunManifest::checks_passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

std::size_t RunManifest::diverged_count() const {
    return static_cast<std::size_t>(
        std::count_if(trajectories.begin(), trajectories.end(), [](const TrajectoryRecord& t) { return t.diverged; }));
}

std::string RunManifest::to_json() const {
    using nlohmann::ordered_json;
    ordered_json j;
    j["verb"] = verb;
    j["config_hash"] = config_hash;
    j["code_version"] = code_version;
    j["wall_clock_seconds"] = wall_clock_seconds;
    j["workers"] = workers;
    ordered_json trajs = ordered_json::array();
    for (const auto& t : trajectories) {
        std::ostringstream key;
        key << std::hex << std::setw(16) << std::setfill('0') << t.key;
        ordered_json e{{"index", t.index}, {"key", key.str()}};
        if (!t.label.empty()) e["label"] = t.label;
        e["status"] = t.diverged ? "diverged" : "ok";
        if (t.diverged) {
            e["last_valid_time"] = t.last_valid_time;
            e["message"] = t.message;
        }
        trajs.push_back(std::move(e));
    }
    j["trajectories"] = std::move(trajs);
    ordered_json files_j = ordered_json::array();
    for (const auto& f : files) files_j.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    j["files"] = std::move(files_j);
    ordered_json verdicts_j = ordered_json::array();
    for (const auto& v : verdicts) {
        verdicts_j.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
    }
    j["verdicts"] = std::move(verdicts_j);
    return j.dump(2) + "\n";
}

namespace {

/// Per-trajectory outcome slot filled by the workers.
template <class T>
struct Slot {
    std::optional<T> value;
    TrajectoryRecord record;
};

template <class T, class F>
std::vector<Slot<T>> run_slots(std::size_t n, int workers, const std::string& label, std::uint64_t seed,
                               std::uint64_t index_offset, F&& fn) {
    std::vector<Slot<T>> slots(n);
    parallel_for(n, workers, [&](std::size_t i) {
        auto& s = slots[i];
        s.record.index = index_offset + i;
        s.record.key = trajectory_key(seed, index_offset + i);
        s.record.label = label;
        try {
            s.value = fn(i);
        } catch (const IntegrationDiverged& e) {
            s.record.diverged = true;
            s.record.last_valid_time = e.last_valid_time();
            s.record.message = e.what();
        }
    });
    return slots;
}

template <class T>
void collect_records(const std::vector<Slot<T>>& slots, RunManifest& m) {
    std::size_t ok = 0;
    for (const auto& s : slots) {
        m.trajectories.push_back(s.record);
        if (s.value) ++ok;
    }
    if (ok == 0 && !slots.empty()) {
        throw AllTrajectoriesDiverged("all " + std::to_string(slots.size()) + " trajectories diverged" +
                                      (slots[0].record.label.empty() ? "" : " (" + slots[0].record.label + ")"));
    }
}

std::string pad(std::size_t i) {
    std::ostringstream os;
    os << std::setw(4) << std::setfill('0') << i;
    return os.str();
}

std::string num(double v) { return format_double(v); }

ObservableSpec measure_observables(const EnsembleSpec& spec) {
    ObservableSpec o;
    o.thetas = spec.observables.thetas;
    o.shells = spec.observables.shells;
    o.flux_cutoffs = spec.flux_cutoffs();
    o.inertial_a = spec.observables.inertial_a;
    return o;
}

/// Observable set containing `name` (h2, v2, theta:<t>, E(k), flux:K, lowv2:K, D:<a>).
ObservableSpec spec_for(const std::string& name) {
    ObservableSpec o;
    auto number_after = [&](std::size_t pos, char stop) {
        const std::string s = name.substr(pos, stop ? name.find(stop, pos) - pos : std::string::npos);
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || *end != '\0') throw ConfigError("invalid mixing_observable '" + name + "'");
        return v;
    };
    if (name == "h2" || name == "v2") return o;
    if (name.rfind("theta:", 0) == 0) {
        o.thetas = {number_after(6, 0)};
    } else if (name.rfind("E(", 0) == 0 && name.back() == ')') {
        o.shells = static_cast<int>(number_after(2, ')'));
    } else if (name.rfind("flux:", 0) == 0) {
        o.flux_cutoffs = {static_cast<int>(number_after(5, 0))};
    } else if (name.rfind("lowv2:", 0) == 0) {
        o.flux_cutoffs = {static_cast<int>(number_after(6, 0))};
    } else if (name.rfind("D:", 0) == 0) {
        o.inertial_a = {number_after(2, 0)};
    } else {
        throw ConfigError("invalid mixing_observable '" + name + "'");
    }
    return o;
}

std::size_t column_of(const ObservableSet& set, const std::string& name) {
    const auto& n = set.names();
    const auto it = std::find(n.begin(), n.end(), name);
    if (it == n.end()) throw ConfigError("observable '" + name + "' is not available");
    return static_cast<std::size_t>(it - n.begin());
}

/// Recorder keeping only samples at t >= from.
struct WindowRecorder {
    const ObservableSet* set;
    double from;
    std::vector<double> times;
    std::vector<std::vector<double>> columns;

    WindowRecorder(const ObservableSet& s, double t0) : set(&s), from(t0 - 1e-9 * std::max(1.0, t0)), columns(s.size()) {}
    void operator()(double t, const SpectralField& x) {
        if (t < from) return;
        times.push_back(t);
        const auto v = set->evaluate(x);
        for (std::size_t j = 0; j < v.size(); ++j) columns[j].push_back(v[j]);
    }
};

// ---------------------------------------------------------------------------
// verbs

void verb_simulate(const EnsembleSpec& spec, const fs::path& out, int workers, RunManifest& m) {
    const RunConfig& cfg = spec.run;
    std::vector<std::string> cols{"time", "h2", "v2", "veps2"};
    for (double th : cfg.thetas) cols.push_back(observable_name_theta(th));
    const std::string hash = m.config_hash;
    auto slots = run_slots<bool>(std::size_t(spec.n_traj), workers, "", cfg.seed, 0, [&](std::size_t i) {
        SimulateOptions o;
        o.trajectory_index = i;
        if (cfg.snapshot_every > 0) {
            o.snapshot = [&, i](std::int64_t step, double t, const SpectralField& x) {
                write_snapshot(out / ("snapshot_" + pad(i) + "_" + std::to_string(step) + ".nsmk"),
                               {.field = x, .nu = cfg.nu, .time = t, .seed = cfg.seed});
            };
        }
        const Trajectory tr = simulate(cfg, spec.initial_state(i), o);
        std::vector<std::string> comments{"system=" + to_string(cfg.system) + " trajectory=" + std::to_string(i) +
                                          " eps0=" + num(cfg.eps0)};
        if (tr.first_cutoff_time) comments.push_back("first_cutoff_time=" + num(*tr.first_cutoff_time));
        CsvWriter w(out / ("ledger_" + pad(i) + ".csv"), hash, cols, comments);
        std::vector<double> row(cols.size());
        for (std::size_t n = 0; n < tr.size(); ++n) {
            row[0] = tr.times[n];
            row[1] = tr.h2[n];
            row[2] = tr.v2[n];
            row[3] = tr.veps2[n];
            for (std::size_t j = 0; j < tr.extra.size(); ++j) row[4 + j] = tr.extra[j][n];
            w.row(row);
        }
        w.close();
        return true;
    });
    collect_records(slots, m);
}

EmpiricalMeasure run_measure(const EnsembleSpec& spec, const ObservableSet& set, int workers, RunManifest& m) {
    const RunConfig& cfg = spec.run;
    auto slots = run_slots<WindowRecorder>(std::size_t(spec.n_traj), workers, "", cfg.seed, 0, [&](std::size_t i) {
        WindowRecorder rec(set, cfg.burn_in);
        SimulateOptions o;
        o.trajectory_index = i;
        o.observer = [&rec](double t, const SpectralField& x) { rec(t, x); };
        simulate(cfg, spec.initial_state(i), o);
        return rec;
    });
    collect_records(slots, m);
    EmpiricalMeasure measure(cfg.burn_in, set.names());
    for (const auto& s : slots) {
        if (s.value) measure.add(s.value->times, s.value->columns);
    }
    if (measure.sample_count() == 0) throw ConfigError("no samples after burn_in=" + num(cfg.burn_in));
    return measure;
}

void verb_invariant(const EnsembleSpec& spec, const fs::path& out, int workers, RunManifest& m) {
    const ObservableSet set(measure_observables(spec));
    const EmpiricalMeasure measure = run_measure(spec, set, workers, m);
    CsvWriter w(out / "measure.csv", m.config_hash, {"observable", "mean", "se", "n_eff"},
                {"burn_in=" + num(spec.run.burn_in) + " trajectories=" + std::to_string(measure.trajectory_count())});
    for (const auto& name : set.names()) {
        const auto e = measure.mean(name);
        const double row[] = {e.mean, e.se, e.n_eff};
        w.row(name, row);
    }
    const auto cut = spec.flux_cutoffs();
    const auto s = kb_summary(measure, spec.run.nu, spec.run.noise, cut);
    const double sigma2 = spec.run.noise.trace();
    const double bal[] = {s.balance.mean, s.balance.se, s.balance.n_eff};
    w.row("balance:2nu_eps-trace", bal);
    const double ires[] = {s.iota_residual, spec.run.nu * s.epsilon.se, s.epsilon.n_eff};
    w.row("iota:residual", ires);
    if (!s.rows.empty()) {
        const auto& last = s.rows.back().flux;
        const double iflux[] = {last.mean, last.se, last.n_eff};
        w.row("iota:flux", iflux);
    }
    const double tr[] = {sigma2, 0.0, 0.0};
    w.row("trace", tr);
    w.close();
}

void verb_flux(const EnsembleSpec& spec, const fs::path& out, int workers, RunManifest& m) {
    ObservableSpec o;
    o.flux_cutoffs = spec.flux_cutoffs();
    const ObservableSet set(o);
    const EmpiricalMeasure measure = run_measure(spec, set, workers, m);
    const auto s = kb_summary(measure, spec.run.nu, spec.run.noise, o.flux_cutoffs);
    CsvWriter w(out / "flux.csv", m.config_hash, {"K", "mean_flux", "se", "balance_residual", "residual_se"},
                {"n_modes=" + std::to_string(spec.run.n_modes) + " nu=" + num(spec.run.nu) +
                 " trace=" + num(spec.run.noise.trace()) + " two_nu_eps=" + num(2.0 * spec.run.nu * s.epsilon.mean)});
    for (const auto& r : s.rows) {
        const double row[] = {double(r.cutoff), r.flux.mean, r.flux.se, r.residual.mean, r.residual.se};
        w.row(row);
    }
    w.close();
}

void verb_mixing(const EnsembleSpec& spec, const fs::path& out, int workers, RunManifest& m) {
    const RunConfig& cfg = spec.run;
    const std::string& name = spec.observables.mixing_observable;
    const ObservableSet set(spec_for(name));
    const std::size_t col = column_of(set, name);
    const std::size_t n = std::size_t(spec.n_traj);

    auto from_x0 = run_slots<WindowRecorder>(n, workers, "x0", cfg.seed, 0, [&](std::size_t i) {
        WindowRecorder rec(set, 0.0);
        SimulateOptions o;
        o.trajectory_index = i;
        o.stokes_from_x0 = true;
        o.observer = [&rec](double t, const SpectralField& x) { rec(t, x); };
        simulate(cfg, spec.initial_state(i), o);
        return rec;
    });
    collect_records(from_x0, m);
    // independent reference ensemble from 0, indices after the x0 ensemble
    auto stat = run_slots<WindowRecorder>(n, workers, "stationary", cfg.seed, n, [&](std::size_t i) {
        WindowRecorder rec(set, cfg.burn_in);
        SimulateOptions o;
        o.trajectory_index = n + i;
        o.observer = [&rec](double t, const SpectralField& x) { rec(t, x); };
        simulate(cfg, SpectralField(cfg.n_modes), o);
        return rec;
    });
    collect_records(stat, m);

    std::vector<double> times;
    std::vector<std::vector<double>> a, b;
    for (const auto& s : from_x0) {
        if (!s.value) continue;
        if (times.empty()) times = s.value->times;
        a.push_back(s.value->columns[col]);
    }
    for (const auto& s : stat) {
        if (s.value) b.push_back(s.value->columns[col]);
    }
    const auto rep = mixing_fit(name, times, a, b);
    std::vector<std::string> comments;
    if (rep.fit_available) {
        comments.push_back("fit: C=" + num(rep.C) + " a=" + num(rep.a) + " r2=" + num(rep.r2) +
                           " n_fit=" + std::to_string(rep.n_fit));
    } else {
        comments.push_back("fit: unavailable");
    }
    comments.push_back("observable=" + name + " stationary_mean=" + num(rep.stationary.mean) +
                       " stationary_se=" + num(rep.stationary.se) + " system=" + to_string(cfg.system));
    CsvWriter w(out / "mixing.csv", m.config_hash, {"t", "distance", "se"}, comments);
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
        const double row[] = {rep.times[i], rep.distance[i], rep.se[i]};
        w.row(row);
    }
    w.close();
}

void verb_stopping(const EnsembleSpec& spec, const fs::path& out, int workers, RunManifest& m) {
    RunConfig cfg = spec.run;
    cfg.system = SystemKind::cutoff;
    std::vector<double> Rs = spec.observables.R_grid;
    if (Rs.empty()) Rs = {cfg.R};
    for (double d : spec.observables.delta_grid) {
        if (d > cfg.t_final) throw ConfigError("invalid delta_grid: " + num(d) + " exceeds t_final");
    }
    struct Hit {
        double initial;
        std::optional<double> tau;
    };
    std::vector<StoppingEnsemble> runs;
    for (double R : Rs) {
        RunConfig c = cfg;
        c.R = R;
        // common random numbers across R: same trajectory indices
        auto slots = run_slots<Hit>(std::size_t(spec.n_traj), workers, "R=" + num(R), cfg.seed, 0, [&](std::size_t i) {
            SimulateOptions o;
            o.trajectory_index = i;
            const Trajectory tr = simulate(c, spec.initial_state(i), o);
            return Hit{tr.veps2.front(), stopping_time(tr, c.eps0, R)};
        });
        collect_records(slots, m);
        StoppingEnsemble e;
        e.R = R;
        for (const auto& s : slots) {
            if (!s.value) continue;
            e.initial_veps2.push_back(s.value->initial);
            e.tau.push_back(s.value->tau);
        }
        runs.push_back(std::move(e));
    }
    const auto rows = stopping_statistics(runs, spec.observables.delta_grid);
    CsvWriter w(out / "stopping.csv", m.config_hash, {"R", "delta", "p_hat", "se", "n", "excluded"},
                {"eps0=" + num(cfg.eps0) + " sample_interval=" + num(cfg.sample_interval())});
    for (const auto& r : rows) {
        const double row[] = {r.R, r.delta, r.p_hat, r.se, double(r.n), double(r.excluded)};
        w.row(row);
    }
    w.close();
}

struct EnergyRun {
    std::vector<double> times;
    std::vector<std::vector<double>> E1, E2, G;
    std::vector<std::vector<std::vector<double>>> D;  ///< [traj][a][n]
    std::vector<double> h2_at0;
    std::vector<std::vector<double>> h2;
};

EnergyRun run_energy(const EnsembleSpec& spec, const RunConfig& cfg, std::uint64_t offset, const std::string& label,
                     int workers, RunManifest& m) {
    const double sigma2 = cfg.noise.trace();
    const auto& as = spec.observables.inertial_a;
    auto slots = run_slots<EnergyLedger>(std::size_t(spec.n_traj), workers, label, cfg.seed, offset,
                                         [&](std::size_t i) {
                                             return energy_ledger(cfg, spec.initial_state(i), offset + i, as);
                                         });
    collect_records(slots, m);
    EnergyRun r;
    for (const auto& s : slots) {
        if (!s.value) continue;
        const auto& L = *s.value;
        if (r.times.empty()) r.times = L.xi.times;
        r.E1.push_back(L.E1(sigma2));
        r.E2.push_back(L.En(2, sigma2));
        r.G.push_back(L.G());
        r.D.push_back(L.inertial);
        r.h2_at0.push_back(L.xi.h2.front());
        r.h2.push_back(L.xi.h2);
    }
    return r;
}

void verb_energy(const EnsembleSpec& spec, const fs::path& out, int workers, RunManifest& m) {
    const RunConfig& cfg = spec.run;
    const auto& ob = spec.observables;
    const double sigma2 = cfg.noise.trace();
    const EnergyRun base = run_energy(spec, cfg, 0, ob.richardson ? "dt" : "", workers, m);

    // energy.csv: ensemble means
    std::vector<std::string> cols{"t", "E1", "E2", "G"};
    for (double a : ob.inertial_a) cols.push_back(observable_name_inertial(a));
    {
        CsvWriter w(out / "energy.csv", m.config_hash, cols,
                    {"trajectories=" + std::to_string(base.E1.size()) + " trace=" + num(sigma2) + " nu=" + num(cfg.nu)});
        std::vector<double> row(cols.size());
        const double inv = 1.0 / double(base.E1.size());
        for (std::size_t n = 0; n < base.times.size(); ++n) {
            std::fill(row.begin(), row.end(), 0.0);
            row[0] = base.times[n];
            for (std::size_t t = 0; t < base.E1.size(); ++t) {
                row[1] += base.E1[t][n] * inv;
                row[2] += base.E2[t][n] * inv;
                row[3] += base.G[t][n] * inv;
                for (std::size_t j = 0; j < ob.inertial_a.size(); ++j) row[4 + j] += base.D[t][j][n] * inv;
            }
            w.row(row);
        }
        w.close();
    }

    Bump phi{ob.bump_start, ob.bump_width};
    if (!(phi.width > 0.0)) phi = Bump{0.25 * cfg.t_final, 0.5 * cfg.t_final};

    auto fmt = [](const MeanEstimate& e) { return num(e.mean) + " +- " + num(e.se); };
    std::optional<EnergyRun> half;
    if (ob.richardson) {
        RunConfig c2 = cfg;
        c2.dt = 0.5 * cfg.dt;
        c2.sample_every = 2 * cfg.sample_every;
        half = run_energy(spec, c2, std::uint64_t(spec.n_traj), "dt/2", workers, m);
    }
    const std::pair<const char*, std::vector<std::vector<double>> EnergyRun::*> processes[] = {
        {"E1", &EnergyRun::E1}, {"E2", &EnergyRun::E2}, {"G", &EnergyRun::G}};
    for (const auto& [label, member] : processes) {
        const auto s1 = supermartingale_smooth_test(base.times, base.*member, phi);
        Verdict v;
        v.name = std::string("supermartingale:") + label;
        if (half) {
            const auto s2 = supermartingale_smooth_test(half->times, (*half).*member, phi);
            MeanEstimate ex;
            ex.mean = 2.0 * s2.estimate.mean - s1.estimate.mean;
            ex.se = std::sqrt(4.0 * s2.estimate.se * s2.estimate.se + s1.estimate.se * s1.estimate.se);
            v.pass = ex.mean >= -3.0 * ex.se;
            v.detail = "extrapolated " + fmt(ex) + " (dt: " + fmt(s1.estimate) + ", dt/2: " + fmt(s2.estimate) + ")";
        } else {
            v.pass = s1.pass;
            v.detail = fmt(s1.estimate);
        }
        m.verdicts.push_back(v);
    }

    // H-moment bound when every trajectory starts at the same energy
    const double x0h = base.h2_at0.front();
    const bool same_start = std::all_of(base.h2_at0.begin(), base.h2_at0.end(), [&](double h) {
        return std::abs(h - x0h) <= 1e-12 * std::max(1.0, x0h);
    });
    if (same_start) {
        std::vector<double> checks = ob.check_times;
        if (checks.empty()) checks = {0.25 * cfg.t_final, 0.5 * cfg.t_final, cfg.t_final};
        for (const auto& r : h_moment_bound_check(base.times, base.h2, x0h, cfg.nu, sigma2, checks)) {
            m.verdicts.push_back({"h_moment:t=" + num(r.t), r.pass, fmt(r.mean) + " bound " + num(r.bound)});
        }
    }

    // |D_a| shrinks as a -> 0
    if (ob.inertial_a.size() >= 2) {
        const auto lo = std::min_element(ob.inertial_a.begin(), ob.inertial_a.end()) - ob.inertial_a.begin();
        const auto hi = std::max_element(ob.inertial_a.begin(), ob.inertial_a.end()) - ob.inertial_a.begin();
        double small = 0.0, large = 0.0;
        for (const auto& d : base.D) {
            for (double x : d[std::size_t(lo)]) small += std::abs(x);
            for (double x : d[std::size_t(hi)]) large += std::abs(x);
        }
        const double ratio = large > 0.0 ? small / large : 0.0;
        m.verdicts.push_back({"inertial_ratio", ratio <= 0.5,
                              "|D(" + num(ob.inertial_a[std::size_t(lo)]) + ")|/|D(" +
                                  num(ob.inertial_a[std::size_t(hi)]) + ")| = " + num(ratio)});
    }
}

std::vector<FileEntry> inventory(const fs::path& out) {
    std::vector<FileEntry> files;
    for (const auto& e : fs::recursive_directory_iterator(out)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = fs::relative(e.path(), out).generic_string();
        if (rel == "manifest.json") continue;
        files.push_back({rel, sha256_file(e.path()), e.file_size()});
    }
    std::sort(files.begin(), files.end(), [](const FileEntry& a, const FileEntry& b) { return a.name < b.name; });
    return files;
}

}  // namespace

RunManifest run_ensemble(const EnsembleSpec& spec, Verb verb, const RunOptions& opts) {
    spec.validate();
    const auto start = std::chrono::steady_clock::now();
    if (opts.out_dir.empty()) throw ConfigError("no output directory given");
    fs::create_directories(opts.out_dir);

    RunManifest m;
    m.verb = to_string(verb);
    m.config_hash = spec.hash();
    m.code_version = code_version();
    m.workers = worker_count(opts.workers);
    {
        std::ofstream cfg(opts.out_dir / "config.ini", std::ios::binary | std::ios::trunc);
        cfg << "# config_hash=" << m.config_hash << '\n' << spec.canonical();
        if (!cfg) throw ConfigError("cannot write " + (opts.out_dir / "config.ini").string());
    }
    switch (verb) {
    case Verb::simulate: verb_simulate(spec, opts.out_dir, m.workers, m); break;
    case Verb::invariant: verb_invariant(spec, opts.out_dir, m.workers, m); break;
    case Verb::flux: verb_flux(spec, opts.out_dir, m.workers, m); break;
    case Verb::mixing: verb_mixing(spec, opts.out_dir, m.workers, m); break;
    case Verb::stopping: verb_stopping(spec, opts.out_dir, m.workers, m); break;
    case Verb::energy_check: verb_energy(spec, opts.out_dir, m.workers, m); break;
    }
    if (opts.verdict_stream) {
        for (const auto& v : m.verdicts) {
            *opts.verdict_stream << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
        }
    }
    m.files = inventory(opts.out_dir);
    m.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream mf(opts.out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    mf << m.to_json();
    if (!mf) throw ConfigError("cannot write manifest");
    return m;
}

}  // namespace nsmk
