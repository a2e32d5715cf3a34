#include "nsmk/diagnostics.hpp"

#include "nsmk/errors.hpp"
#include "nsmk/nonlinearity.hpp"
#include "nsmk/philox.hpp"
#include "nsmk/spectral_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nsmk {

namespace {

double pair_product(const CVec3& a, const CVec3& b) {
    return (std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1] + std::conj(a[2]) * b[2]).real();
}

std::size_t nearest_index(std::span<const double> times, double t) {
    if (times.empty()) throw std::invalid_argument("empty time grid");
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0;
    if (it == times.end()) return times.size() - 1;
    const std::size_t hi = std::size_t(it - times.begin());
    return (times[hi] - t) < (t - times[hi - 1]) ? hi : hi - 1;
}

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::uint64_t isqrt(std::uint64_t n) {
    auto r = static_cast<std::uint64_t>(std::sqrt(double(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// energy processes

std::vector<double> energy_E1(const Trajectory& traj, double sigma2) {
    const auto integral = cumulative_trapezoid(traj.times, traj.v2);
    std::vector<double> out(traj.size());
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] = traj.h2[n] + 2.0 * traj.nu * integral[n] - traj.times[n] * sigma2;
    }
    return out;
}

std::vector<double> energy_En(const Trajectory& traj, int n, double sigma2) {
    if (n < 2) throw std::invalid_argument("energy_En requires n >= 2");
    const std::size_t len = traj.size();
    std::vector<double> weighted(len), power(len);
    for (std::size_t i = 0; i < len; ++i) {
        power[i] = std::pow(traj.h2[i], n - 1);
        weighted[i] = power[i] * traj.v2[i];
    }
    const auto iw = cumulative_trapezoid(traj.times, weighted);
    const auto ip = cumulative_trapezoid(traj.times, power);
    std::vector<double> out(len);
    for (std::size_t i = 0; i < len; ++i) {
        out[i] = std::pow(traj.h2[i], n) + 2.0 * n * traj.nu * iw[i] - n * (2.0 * n - 1.0) * sigma2 * ip[i];
    }
    return out;
}

double g_integrand(const SpectralField& v, const SpectralField& z) {
    return inner(v, nonlinearity_B(v + z, z));
}

std::vector<double> g_process(const Trajectory& v, const Trajectory& z, const Trajectory& full) {
    if (v.times != z.times || v.times != full.times) throw ConfigError("g_process: sample times are not aligned");
    if (v.states.size() != v.size() || z.states.size() != z.size()) {
        throw ConfigError("g_process: v and z trajectories must keep their states");
    }
    std::vector<double> tri(v.size());
    for (std::size_t n = 0; n < v.size(); ++n) tri[n] = g_integrand(v.states[n], z.states[n]);
    return g_process(v.times, v.h2, v.v2, tri, v.nu);
}

std::vector<double> g_process(std::span<const double> times, std::span<const double> v_h2,
                              std::span<const double> v_v2, std::span<const double> trilinear, double nu) {
    if (v_h2.size() != times.size() || v_v2.size() != times.size() || trilinear.size() != times.size()) {
        throw ConfigError("g_process: series lengths differ");
    }
    const auto iv = cumulative_trapezoid(times, v_v2);
    const auto ib = cumulative_trapezoid(times, trilinear);
    std::vector<double> out(times.size());
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = 0.5 * v_h2[n] + nu * iv[n] + ib[n];
    return out;
}

EnergyLedger energy_ledger(const RunConfig& cfg, const SpectralField& x0, std::uint64_t trajectory_index,
                           std::span<const double> inertial_a) {
    RunConfig full = cfg;
    full.system = SystemKind::full;
    full.validate();
    if (!x0.empty() && x0.n_modes() != cfg.n_modes) throw ConfigError("energy_ledger: x0 truncation differs");
    RunConfig lin = full;
    lin.system = SystemKind::stokes;
    const std::uint64_t key = trajectory_key(cfg.seed, trajectory_index);
    Integrator step_xi(full, key);
    Integrator step_z(lin, key);

    EnergyLedger out;
    out.xi.nu = cfg.nu;
    out.xi.n_modes = cfg.n_modes;
    out.xi.eps0 = cfg.eps0;
    out.xi.key = key;
    out.xi.thetas = cfg.thetas;
    out.inertial_a.assign(inertial_a.begin(), inertial_a.end());
    out.inertial.resize(inertial_a.size());

    SpectralField x = x0.empty() ? SpectralField(cfg.n_modes) : x0;
    SpectralField z(cfg.n_modes);
    auto sample = [&](double t) {
        out.xi.record(t, x, false);
        const SpectralField v = x - z;
        out.v_h2.push_back(norm2(v, 0.0));
        out.v_v2.push_back(norm2(v, 0.5));
        out.trilinear.push_back(g_integrand(v, z));
        if (!inertial_a.empty()) {
            const auto d = inertial_profile(x, nonlinearity_B(x, x), inertial_a);
            for (std::size_t j = 0; j < d.size(); ++j) out.inertial[j].push_back(d[j]);
        }
    };
    sample(0.0);
    const std::int64_t n = full.n_steps();
    double last_valid = 0.0;
    for (std::int64_t s = 0; s < n; ++s) {
        step_xi.step_in_place(x, static_cast<std::uint64_t>(s));
        step_z.step_in_place(z, static_cast<std::uint64_t>(s));
        const double t = double(s + 1) * cfg.dt;
        if (!std::isfinite(norm2(x, 0.0))) {
            throw IntegrationDiverged(last_valid, "energy ledger diverged at t=" + format_number(t));
        }
        last_valid = t;
        if ((s + 1) % cfg.sample_every == 0) sample(t);
    }
    return out;
}

double Bump::operator()(double t) const {
    const double u = (t - start) / width;
    return CutoffShape::glue(3.0 * u) * CutoffShape::glue(3.0 * (1.0 - u));
}

SupermartingaleResult supermartingale_smooth_test(std::span<const double> times,
                                                  std::span<const std::vector<double>> ensemble,
                                                  const Bump& phi) {
    if (times.size() < 2) throw std::invalid_argument("supermartingale test needs at least two samples");
    if (!(phi.width > 0.0) || phi.start < times.front() || phi.start + phi.width > times.back()) {
        throw std::invalid_argument("bump support lies outside the sampled time range");
    }
    std::vector<double> w(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) w[i] = phi(times[i]);
    std::vector<double> stats;
    stats.reserve(ensemble.size());
    for (const auto& theta : ensemble) {
        if (theta.size() != times.size()) throw std::invalid_argument("series length differs from time grid");
        // sum (w_{i+1} - w_i)(theta_i + theta_{i+1})/2, regrouped by w_j
        const std::size_t last = times.size() - 1;
        double s = -0.5 * w[0] * (theta[0] + theta[1]) + 0.5 * w[last] * (theta[last - 1] + theta[last]);
        for (std::size_t j = 1; j < last; ++j) s += 0.5 * w[j] * (theta[j - 1] - theta[j + 1]);
        stats.push_back(s);
    }
    SupermartingaleResult r;
    r.estimate = estimate_iid_mean(stats);
    r.pass = r.estimate.mean >= -3.0 * r.estimate.se;
    return r;
}

// ---------------------------------------------------------------------------
// spectral observables

double flux(const SpectralField& x, int cutoff) {
    if (cutoff < 0) throw std::invalid_argument("flux: cutoff must be >= 0");
    if (cutoff == 0 || cutoff >= x.n_modes()) return 0.0;
    const auto hi = project_modes(x, cutoff, ModeSide::high);
    const auto lo = project_modes(x, cutoff, ModeSide::low);
    return inner(lo, nonlinearity_B(x, hi));
}

double flux_via_full(const SpectralField& x, int cutoff) {
    if (cutoff < 0) throw std::invalid_argument("flux: cutoff must be >= 0");
    return inner(project_modes(x, cutoff, ModeSide::low), nonlinearity_B(x, x));
}

std::vector<double> flux_profile(const SpectralField& x, const SpectralField& bxx, std::span<const int> cutoffs) {
    const int n = x.n_modes();
    // per max-norm shell contributions, then cumulative
    std::vector<double> shell(std::size_t(n) + 1, 0.0);
    const Lattice& lat = x.lattice();
    for (std::size_t i = 0; i < x.size(); ++i) shell[std::size_t(lat.mode(i).max_norm())] += 2.0 * pair_product(x[i], bxx[i]);
    std::vector<double> out;
    out.reserve(cutoffs.size());
    for (int K : cutoffs) {
        if (K < 0) throw std::invalid_argument("flux: cutoff must be >= 0");
        if (K == 0 || K >= n) {
            out.push_back(0.0);
            continue;
        }
        double s = 0.0;
        for (int j = 1; j <= K; ++j) s += shell[std::size_t(j)];
        out.push_back(s);
    }
    return out;
}

double inertial_regularized(const SpectralField& x, double a) {
    const auto b = nonlinearity_B(x, x);
    const double as[1] = {a};
    return inertial_profile(x, b, as)[0];
}

std::vector<double> inertial_profile(const SpectralField& x, const SpectralField& bxx, std::span<const double> as) {
    const Lattice& lat = x.lattice();
    std::vector<double> out;
    out.reserve(as.size());
    for (double a : as) {
        if (!(a >= 0.0)) throw std::invalid_argument("inertial_regularized: a must be >= 0");
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += std::exp(-2.0 * a * lat.kabs(i)) * pair_product(x[i], bxx[i]);
        out.push_back(2.0 * s);
    }
    return out;
}

std::vector<double> shell_spectrum(const SpectralField& x) {
    const Lattice& lat = x.lattice();
    const auto n = std::uint64_t(x.n_modes());
    std::vector<double> e(isqrt(3 * n * n) + 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& v = x[i];
        e[isqrt(std::uint64_t(lat.mode(i).norm2()))] += 2.0 * (std::norm(v[0]) + std::norm(v[1]) + std::norm(v[2]));
    }
    return e;
}

std::string observable_name_flux(int cutoff) { return "flux:" + std::to_string(cutoff); }
std::string observable_name_lowv2(int cutoff) { return "lowv2:" + std::to_string(cutoff); }
std::string observable_name_inertial(double a) { return "D:" + format_number(a); }
std::string observable_name_theta(double theta) { return "theta:" + format_number(theta); }
std::string observable_name_shell(int kappa) { return "E(" + std::to_string(kappa) + ")"; }

ObservableSet::ObservableSet(ObservableSpec spec) : spec_(std::move(spec)) {
    names_ = {"h2", "v2"};
    for (double th : spec_.thetas) names_.push_back(observable_name_theta(th));
    for (int k = 1; k <= spec_.shells; ++k) names_.push_back(observable_name_shell(k));
    for (int K : spec_.flux_cutoffs) names_.push_back(observable_name_flux(K));
    for (int K : spec_.flux_cutoffs) names_.push_back(observable_name_lowv2(K));
    for (double a : spec_.inertial_a) names_.push_back(observable_name_inertial(a));
    for (const auto& c : spec_.custom) names_.push_back(c.first);
    auto sorted = names_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ConfigError("observable set contains duplicate names");
    }
}

void ObservableSet::evaluate(const SpectralField& x, std::span<double> out) const {
    if (out.size() != names_.size()) throw std::invalid_argument("observable output size mismatch");
    std::size_t j = 0;
    out[j++] = norm2(x, 0.0);
    out[j++] = norm2(x, 0.5);
    for (double th : spec_.thetas) out[j++] = norm2(x, th);
    if (spec_.shells > 0) {
        const auto e = shell_spectrum(x);
        for (int k = 1; k <= spec_.shells; ++k) out[j++] = std::size_t(k) < e.size() ? e[std::size_t(k)] : 0.0;
    }
    if (needs_nonlinearity()) {
        const auto b = nonlinearity_B(x, x);
        for (double f : flux_profile(x, b, spec_.flux_cutoffs)) out[j++] = f;
        for (int K : spec_.flux_cutoffs) out[j++] = norm2(project_modes(x, K, ModeSide::low), 0.5);
        for (double d : inertial_profile(x, b, spec_.inertial_a)) out[j++] = d;
    }
    for (const auto& c : spec_.custom) out[j++] = c.second(x);
}

std::vector<double> ObservableSet::evaluate(const SpectralField& x) const {
    std::vector<double> out(names_.size());
    evaluate(x, out);
    return out;
}

void ObservableRecorder::operator()(double t, const SpectralField& x) {
    times_.push_back(t);
    const auto v = set_->evaluate(x);
    for (std::size_t j = 0; j < v.size(); ++j) columns_[j].push_back(v[j]);
}

// ---------------------------------------------------------------------------
// Krylov-Bogoliubov averaging

EmpiricalMeasure::EmpiricalMeasure(double burn_in, std::vector<std::string> names)
    : burn_in_(burn_in), names_(std::move(names)), acc_(names_.size()) {}

std::size_t EmpiricalMeasure::index(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw std::out_of_range("unknown observable '" + name + "'");
    return std::size_t(it - names_.begin());
}

bool EmpiricalMeasure::has(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

void EmpiricalMeasure::add(std::span<const double> times, const std::vector<std::vector<double>>& columns) {
    if (columns.size() != names_.size()) throw std::invalid_argument("column count differs from observable set");
    const double cut = burn_in_ - 1e-9 * std::max(1.0, burn_in_);
    std::size_t first = 0;
    while (first < times.size() && times[first] < cut) ++first;
    std::vector<std::vector<double>> kept(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j].size() != times.size()) throw std::invalid_argument("series length differs from time grid");
        kept[j].assign(columns[j].begin() + std::ptrdiff_t(first), columns[j].end());
        for (double v : kept[j]) acc_[j].add(v);
    }
    times_.emplace_back(times.begin() + std::ptrdiff_t(first), times.end());
    series_.push_back(std::move(kept));
}

void EmpiricalMeasure::merge(const EmpiricalMeasure& other) {
    if (other.names_ != names_) throw std::invalid_argument("cannot merge measures with different observables");
    for (std::size_t i = 0; i < other.series_.size(); ++i) {
        times_.push_back(other.times_[i]);
        series_.push_back(other.series_[i]);
    }
    for (std::size_t j = 0; j < acc_.size(); ++j) acc_[j].merge(other.acc_[j]);
}

std::size_t EmpiricalMeasure::sample_count() const {
    std::size_t n = 0;
    for (const auto& t : times_) n += t.size();
    return n;
}

const Welford& EmpiricalMeasure::accumulator(const std::string& name) const { return acc_[index(name)]; }

std::span<const double> EmpiricalMeasure::series(std::size_t traj, const std::string& name) const {
    return series_.at(traj)[index(name)];
}

MeanEstimate EmpiricalMeasure::mean(const std::string& name) const { return mean_of({{name, 1.0}}); }

MeanEstimate EmpiricalMeasure::mean_of(const std::vector<std::pair<std::string, double>>& terms,
                                       double constant) const {
    if (sample_count() == 0) throw ConfigError("empirical measure has no samples after burn-in");
    std::vector<std::pair<std::size_t, double>> idx;
    for (const auto& [name, w] : terms) idx.emplace_back(index(name), w);
    std::vector<MeanEstimate> parts;
    for (std::size_t i = 0; i < series_.size(); ++i) {
        const std::size_t len = times_[i].size();
        if (len == 0) continue;
        std::vector<double> s(len, constant);
        for (const auto& [j, w] : idx) {
            for (std::size_t n = 0; n < len; ++n) s[n] += w * series_[i][j][n];
        }
        parts.push_back(estimate_series_mean(s));
    }
    return combine_independent(parts);
}

namespace {

void collect(const Trajectory& traj, double burn_in, const ObservableSet& obs, EmpiricalMeasure& m) {
    if (traj.states.size() != traj.size()) throw ConfigError("kb_average needs a trajectory with kept states");
    const double cut = burn_in - 1e-9 * std::max(1.0, burn_in);
    std::vector<double> times;
    std::vector<std::vector<double>> cols(obs.size());
    for (std::size_t n = 0; n < traj.size(); ++n) {
        if (traj.times[n] < cut) continue;
        times.push_back(traj.times[n]);
        const auto v = obs.evaluate(traj.states[n]);
        for (std::size_t j = 0; j < v.size(); ++j) cols[j].push_back(v[j]);
    }
    m.add(times, cols);
}

}  // namespace

EmpiricalMeasure kb_average(const Trajectory& traj, double burn_in, const ObservableSet& obs) {
    return kb_average(std::span<const Trajectory>(&traj, 1), burn_in, obs);
}

EmpiricalMeasure kb_average(std::span<const Trajectory> ensemble, double burn_in, const ObservableSet& obs) {
    EmpiricalMeasure m(burn_in, obs.names());
    for (const auto& t : ensemble) collect(t, burn_in, obs, m);
    if (m.sample_count() == 0) throw ConfigError("no samples after burn-in " + format_number(burn_in));
    return m;
}

KBSummary kb_summary(const EmpiricalMeasure& m, double nu, const CovarianceSpec& noise, std::span<const int> cutoffs) {
    KBSummary s;
    const double sigma2 = noise.trace();
    s.epsilon = m.mean("v2");
    s.balance = m.mean_of({{"v2", 2.0 * nu}}, -sigma2);
    s.iota_residual = 0.5 * sigma2 - nu * s.epsilon.mean;
    int largest = -1;
    for (int K : cutoffs) {
        BalanceRow row;
        row.cutoff = K;
        row.flux = m.mean(observable_name_flux(K));
        row.residual = m.mean_of({{observable_name_flux(K), 1.0}, {observable_name_lowv2(K), nu}},
                                 -0.5 * noise.trace_low(K));
        if (K > largest) {
            largest = K;
            s.iota_flux = row.flux.mean;
        }
        s.rows.push_back(row);
    }
    return s;
}

// ---------------------------------------------------------------------------
// ensemble statistics

std::vector<HMomentRow> h_moment_bound_check(std::span<const double> times,
                                             std::span<const std::vector<double>> h2_ensemble, double x0_h2,
                                             double nu, double sigma2, std::span<const double> check_times) {
    std::vector<HMomentRow> rows;
    for (double t : check_times) {
        const std::size_t i = nearest_index(times, t);
        std::vector<double> vals;
        vals.reserve(h2_ensemble.size());
        for (const auto& s : h2_ensemble) vals.push_back(s.at(i));
        HMomentRow r;
        r.t = times[i];
        r.mean = estimate_iid_mean(vals);
        const double decay = std::exp(-2.0 * nu * r.t);
        r.bound = x0_h2 * decay + sigma2 / (2.0 * nu) * (1.0 - decay);
        r.pass = r.mean.mean <= r.bound + 3.0 * r.mean.se;
        rows.push_back(r);
    }
    return rows;
}

MixingReport mixing_fit(const std::string& observable, std::span<const double> times,
                        std::span<const std::vector<double>> from_x0,
                        std::span<const std::vector<double>> stationary) {
    if (from_x0.empty() || stationary.empty()) throw std::invalid_argument("mixing_fit needs two non-empty ensembles");
    MixingReport r;
    r.observable = observable;
    std::vector<MeanEstimate> parts;
    for (const auto& s : stationary) parts.push_back(estimate_series_mean(s));
    r.stationary = combine_independent(parts);

    for (std::size_t i = 0; i < times.size(); ++i) {
        std::vector<double> vals;
        for (const auto& s : from_x0) vals.push_back(s.at(i));
        const auto m = estimate_iid_mean(vals);
        r.times.push_back(times[i]);
        r.distance.push_back(std::abs(m.mean - r.stationary.mean));
        r.se.push_back(std::sqrt(m.se * m.se + r.stationary.se * r.stationary.se));
    }

    std::size_t first = 0;
    while (first < r.times.size() && !(r.distance[first] > 3.0 * r.se[first])) ++first;
    std::size_t last = first;
    while (last < r.times.size() && r.distance[last] > 3.0 * r.se[last] && r.distance[last] > 0.0) ++last;
    r.n_fit = last - first;
    if (r.n_fit >= 3) {
        std::vector<double> x, y;
        for (std::size_t i = first; i < last; ++i) {
            x.push_back(r.times[i]);
            y.push_back(std::log(r.distance[i]));
        }
        const auto fit = least_squares(x, y);
        r.fit_available = true;
        r.a = -fit.slope;
        r.C = std::exp(fit.intercept);
        r.r2 = fit.r2;
    }
    return r;
}

ProbabilityEstimate entrance_probability(std::span<const double> values_at_T, double level) {
    ProbabilityEstimate e;
    e.n = values_at_T.size();
    if (e.n == 0) return e;
    std::size_t hits = 0;
    for (double v : values_at_T) hits += v <= level ? 1 : 0;
    e.p = double(hits) / double(e.n);
    e.se = std::sqrt(e.p * (1.0 - e.p) / double(e.n));
    return e;
}

double value_at(const Trajectory& traj, const std::vector<double>& series, double t) {
    if (series.size() != traj.size()) throw std::invalid_argument("series length differs from trajectory");
    return series[nearest_index(traj.times, t)];
}

std::vector<StoppingRow> stopping_statistics(std::span<const StoppingEnsemble> runs, std::span<const double> deltas) {
    std::vector<StoppingRow> rows;
    for (const auto& run : runs) {
        if (run.initial_veps2.size() != run.tau.size()) throw std::invalid_argument("stopping ensemble size mismatch");
        for (double delta : deltas) {
            StoppingRow row;
            row.R = run.R;
            row.delta = delta;
            std::size_t hits = 0;
            for (std::size_t i = 0; i < run.tau.size(); ++i) {
                if (run.initial_veps2[i] > 0.5 * run.R) {
                    ++row.excluded;
                    continue;
                }
                ++row.n;
                if (run.tau[i] && *run.tau[i] <= delta) ++hits;
            }
            if (row.n > 0) {
                row.p_hat = double(hits) / double(row.n);
                row.se = std::sqrt(row.p_hat * (1.0 - row.p_hat) / double(row.n));
            }
            rows.push_back(row);
        }
    }
    return rows;
}

JEstimate j_functional(std::span<const double> times, std::span<const std::vector<double>> ensemble, double lambda,
                       double t0) {
    if (!(lambda > 0.0)) throw std::invalid_argument("j_functional requires lambda > 0");
    const double cut = t0 - 1e-9 * std::max(1.0, std::abs(t0));
    std::size_t first = 0;
    while (first < times.size() && times[first] < cut) ++first;
    if (times.size() - first < 2) throw std::invalid_argument("j_functional needs two samples after t0");

    std::vector<double> values;
    double sup = 0.0;
    for (const auto& f : ensemble) {
        if (f.size() != times.size()) throw std::invalid_argument("series length differs from time grid");
        double j = 0.0;
        for (std::size_t i = first; i + 1 < times.size(); ++i) {
            const double h = times[i + 1] - times[i];
            const double u = lambda * h;
            const double e = std::exp(-lambda * (times[i] - t0));
            const double em = std::exp(-u);
            const double w0 = -std::expm1(-u) / lambda;
            const double w1 = (-std::expm1(-u) - u * em) / (lambda * lambda);
            j += e * (f[i] * w0 + (f[i + 1] - f[i]) / h * w1);
        }
        values.push_back(j);
        for (std::size_t i = first; i < f.size(); ++i) sup = std::max(sup, std::abs(f[i]));
    }
    JEstimate r;
    r.estimate = estimate_iid_mean(values);
    r.tail_bound = std::exp(-lambda * (times.back() - t0)) * sup / lambda;
    return r;
}

TranslationReport translation_invariance_check(const EmpiricalMeasure& m, std::span<const ShiftedPair> pairs) {
    TranslationReport rep;
    for (const auto& p : pairs) {
        TranslationRow row;
        row.pair = p;
        row.difference = m.mean_of({{p.shifted, 1.0}, {p.base, -1.0}});
        for (std::size_t i = 0; i < m.trajectory_count(); ++i) {
            const auto a = m.series(i, p.base);
            const auto b = m.series(i, p.shifted);
            for (std::size_t n = 0; n < a.size(); ++n) {
                const double scale = std::max(std::abs(a[n]), std::numeric_limits<double>::min());
                row.max_pathwise_deviation = std::max(row.max_pathwise_deviation, std::abs(b[n] - a[n]) / scale);
            }
        }
        if (p.exact) {
            row.pass = row.max_pathwise_deviation <= 1e-12;
        } else {
            row.pass = std::abs(row.difference.mean) <= 3.0 * row.difference.se;
        }
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace nsmk
