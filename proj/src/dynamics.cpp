#include "nsmk/dynamics.hpp"

#include "nsmk/errors.hpp"
#include "nsmk/philox.hpp"
#include "nsmk/spectral_ops.hpp"

#include <cmath>
#include <sstream>

namespace nsmk {

SystemKind parse_system(const std::string& name) {
    if (name == "full") return SystemKind::full;
    if (name == "stokes") return SystemKind::stokes;
    if (name == "cutoff") return SystemKind::cutoff;
    throw ConfigError("unknown system '" + name + "' (expected full|stokes|cutoff)");
}

std::string to_string(SystemKind kind) {
    switch (kind) {
    case SystemKind::full: return "full";
    case SystemKind::stokes: return "stokes";
    case SystemKind::cutoff: return "cutoff";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// cut-off function

namespace {
double h_exp(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double h_exp_derivative(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }
}  // namespace

double CutoffShape::glue(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = h_exp(t);
    const double b = h_exp(1.0 - t);
    return a / (a + b);
}

double CutoffShape::glue_derivative(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double a = h_exp(t);
    const double b = h_exp(1.0 - t);
    const double da = h_exp_derivative(t);
    const double db = -h_exp_derivative(1.0 - t);
    const double den = a + b;
    return (da * den - a * (da + db)) / (den * den);
}

double CutoffShape::value(double s) const {
    if (s < 0.0) throw std::invalid_argument("chi_R requires s >= 0");
    if (s <= 1.5 * R) return 1.0;
    if (s >= 2.0 * R) return 0.0;
    return glue((2.0 * R - s) / (0.5 * R));
}

double CutoffShape::derivative(double s) const {
    if (s <= 1.5 * R || s >= 2.0 * R) return 0.0;
    return -glue_derivative((2.0 * R - s) / (0.5 * R)) / (0.5 * R);
}

double CutoffShape::derivative_constant() {
    // chi_R'(s) = -(2/R) g'((2R - s)/(R/2)), so c = 2 max g'.
    static const double c = [] {
        double best = 0.0;
        constexpr int n = 200000;
        for (int i = 1; i < n; ++i) best = std::max(best, std::abs(glue_derivative(double(i) / n)));
        return 2.0 * best;
    }();
    return c;
}

double chi(const CutoffShape& shape, double s) { return shape.value(s); }

// ---------------------------------------------------------------------------
// configuration

void RunConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& msg) {
        throw ConfigError("invalid " + field + ": " + msg);
    };
    if (!(nu > 0.0) || !std::isfinite(nu)) fail("nu", "must be > 0");
    if (n_modes < 1) fail("n_modes", "must be >= 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt", "must be > 0");
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) fail("t_final", "must be >= 0");
    if (!(burn_in >= 0.0)) fail("burn_in", "must be >= 0");
    if (t_final > 0.0 ? !(burn_in < t_final) : burn_in != 0.0) fail("burn_in", "must be < t_final");
    if (!(eps0 > 0.0 && eps0 <= 0.25)) fail("eps0", "must lie in (0, 1/4]");
    if (!(R >= 1.0)) fail("R", "must be >= 1");
    if (sample_every < 1) fail("sample_every", "must be >= 1");
    if (snapshot_every < 0) fail("snapshot_every", "must be >= 0");
    if (noise.n_modes != n_modes) fail("noise", "truncation differs from n_modes");
    try {
        noise.validate();
    } catch (const std::invalid_argument& e) {
        fail("noise", e.what());
    }
}

std::int64_t RunConfig::n_steps() const { return static_cast<std::int64_t>(std::llround(t_final / dt)); }

// ---------------------------------------------------------------------------
// trajectory

void Trajectory::record(double t, const SpectralField& x, bool keep_state) {
    times.push_back(t);
    h2.push_back(norm2(x, 0.0));
    v2.push_back(norm2(x, 0.5));
    veps2.push_back(norm2(x, 0.25 + eps0));
    if (extra.size() != thetas.size()) extra.resize(thetas.size());
    for (std::size_t j = 0; j < thetas.size(); ++j) extra[j].push_back(norm2(x, thetas[j]));
    if (keep_state) states.push_back(x);
}

// ---------------------------------------------------------------------------
// integrator

Integrator::Integrator(const RunConfig& cfg, std::uint64_t key)
    : cfg_(cfg), key_(key), shape_{cfg.R}, nonlinearity_(cfg.n_modes), bterm_(cfg.n_modes) {
    const Lattice& lat = *Lattice::get(cfg.n_modes);
    const std::size_t n = lat.size();
    decay_.resize(n);
    phi_dt_.resize(n);
    noise_sd_.resize(n);
    veps_weight_.resize(n);
    basis_.resize(n);
    const double theta = 0.25 + cfg.eps0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lambda = cfg.nu * lat.k2(i);
        const double e = std::exp(-lambda * cfg.dt);
        decay_[i] = e;
        // dt * phi_1(-lambda dt) = (1 - e^{-lambda dt}) / lambda
        phi_dt_[i] = -std::expm1(-lambda * cfg.dt) / lambda;
        // E|c|^2 per complex plane coordinate: q_k (1 - e^{-2 lambda dt}) / (2 lambda)
        const double var = cfg.noise.mode_variance_k2(lat.k2(i)) * (-std::expm1(-2.0 * lambda * cfg.dt)) /
                           (2.0 * lambda);
        noise_sd_[i] = std::sqrt(0.5 * var);
        veps_weight_[i] = theta == 0.5 ? lat.k2(i) : std::pow(lat.k2(i), 2.0 * theta);
        basis_[i] = solenoidal_basis(lat.mode(i));
    }
}

double Integrator::veps2(const SpectralField& x) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& v = x[i];
        sum += veps_weight_[i] * (std::norm(v[0]) + std::norm(v[1]) + std::norm(v[2]));
    }
    return 2.0 * sum;
}

void Integrator::step_in_place(SpectralField& x, std::uint64_t step_index) {
    double scale = 0.0;
    switch (cfg_.system) {
    case SystemKind::full: scale = 1.0; break;
    case SystemKind::stokes: scale = 0.0; break;
    case SystemKind::cutoff: scale = shape_.value(veps2(x)); break;
    }
    last_scale_ = scale;
    const bool with_b = scale != 0.0;
    if (with_b) nonlinearity_.apply(x, x, bterm_);

    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto z1 = keyed_normal_pair(key_, step_index, static_cast<std::uint32_t>(i), 0);
        const auto z2 = keyed_normal_pair(key_, step_index, static_cast<std::uint32_t>(i), 1);
        const double sd = noise_sd_[i];
        const Complex c1(sd * z1[0], sd * z1[1]);
        const Complex c2(sd * z2[0], sd * z2[1]);
        const auto& e = basis_[i];
        const double w = phi_dt_[i] * scale;
        for (int c = 0; c < 3; ++c) {
            Complex v = decay_[i] * x[i][c];
            if (with_b) v -= w * bterm_[i][c];
            v += c1 * e[0][c] + c2 * e[1][c];
            x[i][c] = v;
        }
    }
}

SpectralField Integrator::step(const SpectralField& x, std::uint64_t step_index) {
    SpectralField y = x;
    step_in_place(y, step_index);
    return y;
}

SpectralField step_full(const SpectralField& x, const RunConfig& cfg, std::uint64_t step_index,
                        std::uint64_t key) {
    RunConfig c = cfg;
    c.system = SystemKind::full;
    Integrator integ(c, key);
    return integ.step(x, step_index);
}

SpectralField step_cutoff(const SpectralField& x, const RunConfig& cfg, std::uint64_t step_index,
                          std::uint64_t key) {
    RunConfig c = cfg;
    c.system = SystemKind::cutoff;
    Integrator integ(c, key);
    return integ.step(x, step_index);
}

Trajectory simulate(const RunConfig& cfg, const SpectralField& x0, const SimulateOptions& opts) {
    cfg.validate();
    if (!x0.empty() && x0.n_modes() != cfg.n_modes) {
        throw ConfigError("initial condition has N=" + std::to_string(x0.n_modes()) +
                          " but the run uses N=" + std::to_string(cfg.n_modes));
    }
    const std::uint64_t key = trajectory_key(cfg.seed, opts.trajectory_index);
    Integrator integ(cfg, key);

    const bool zero_start = x0.empty() || (cfg.system == SystemKind::stokes && !opts.stokes_from_x0);
    SpectralField x = zero_start ? SpectralField(cfg.n_modes) : x0;

    Trajectory traj;
    traj.nu = cfg.nu;
    traj.n_modes = cfg.n_modes;
    traj.eps0 = cfg.eps0;
    traj.key = key;
    traj.thetas = cfg.thetas;

    auto sample = [&](double t) {
        traj.record(t, x, opts.keep_states);
        if (opts.observer) opts.observer(t, x);
    };
    sample(0.0);
    if (opts.snapshot && cfg.snapshot_every > 0) opts.snapshot(0, 0.0, x);

    const std::int64_t n = cfg.n_steps();
    double last_valid = 0.0;
    for (std::int64_t s = 0; s < n; ++s) {
        integ.step_in_place(x, static_cast<std::uint64_t>(s));
        const double t = double(s + 1) * cfg.dt;
        if (cfg.system == SystemKind::cutoff && integ.last_scale() < 1.0 && !traj.first_cutoff_time) {
            traj.first_cutoff_time = double(s) * cfg.dt;
        }
        const double e = norm2(x, 0.0);
        if (!std::isfinite(e)) {
            std::ostringstream os;
            os << "integration diverged at t=" << t << " (last valid t=" << last_valid << ", step " << s
               << ", system " << to_string(cfg.system) << ")";
            throw IntegrationDiverged(last_valid, os.str());
        }
        last_valid = t;
        if ((s + 1) % cfg.sample_every == 0) sample(t);
        if (opts.snapshot && cfg.snapshot_every > 0 && (s + 1) % cfg.snapshot_every == 0) {
            opts.snapshot(s + 1, t, x);
        }
    }
    return traj;
}

std::optional<double> stopping_time(const Trajectory& traj, double eps0, double R) {
    const std::vector<double>* series = nullptr;
    if (traj.eps0 == eps0 && traj.veps2.size() == traj.times.size()) {
        series = &traj.veps2;
    } else {
        for (std::size_t j = 0; j < traj.thetas.size(); ++j) {
            if (traj.thetas[j] == 0.25 + eps0 && j < traj.extra.size()) series = &traj.extra[j];
        }
    }
    if (!series || series->size() != traj.times.size()) {
        throw ConfigError("trajectory ledger has no |x|^2_{V_eps} entry for eps0=" + std::to_string(eps0));
    }
    const double level = 1.5 * R;
    for (std::size_t n = 0; n < series->size(); ++n) {
        if ((*series)[n] >= level) return traj.times[n];
    }
    return std::nullopt;
}

Trajectory residual_v(const Trajectory& full, const Trajectory& stokes) {
    if (full.times != stokes.times) throw ConfigError("residual_v: sample times are not aligned");
    if (full.states.size() != full.times.size() || stokes.states.size() != stokes.times.size()) {
        throw ConfigError("residual_v: both trajectories must keep their states");
    }
    if (full.n_modes != stokes.n_modes || full.nu != stokes.nu) {
        throw ConfigError("residual_v: trajectories come from different configurations");
    }
    Trajectory v;
    v.nu = full.nu;
    v.n_modes = full.n_modes;
    v.eps0 = full.eps0;
    v.key = full.key;
    v.thetas = full.thetas;
    for (std::size_t n = 0; n < full.times.size(); ++n) {
        v.record(full.times[n], full.states[n] - stokes.states[n], true);
    }
    return v;
}

}  // namespace nsmk
