#include "nsmk/config.hpp"

#include "nsmk/errors.hpp"
#include "nsmk/io.hpp"
#include "nsmk/philox.hpp"
#include "nsmk/spectral_ops.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace nsmk {

namespace pt = boost::property_tree;

// ---------------------------------------------------------------------------
// initial conditions

InitialCondition InitialCondition::parse(const std::string& text) {
    InitialCondition ic;
    if (text == "zero") return ic;
    if (text.rfind("random:", 0) == 0) {
        const std::string num = text.substr(7);
        double v = 0.0;
        const auto r = std::from_chars(num.data(), num.data() + num.size(), v);
        if (r.ec != std::errc() || r.ptr != num.data() + num.size() || !(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError("invalid x0 '" + text + "': random:<energy> needs a positive number");
        }
        ic.kind = Kind::random;
        ic.energy = v;
        return ic;
    }
    if (text.empty()) throw ConfigError("invalid x0: empty");
    ic.kind = Kind::snapshot;
    ic.path = text;
    return ic;
}

std::string InitialCondition::text() const {
    switch (kind) {
    case Kind::zero: return "zero";
    case Kind::random: return "random:" + format_double(energy);
    case Kind::snapshot: return path;
    }
    return "zero";
}

// ---------------------------------------------------------------------------
// value parsing

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    const std::string s = trim(text);
    T v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw ConfigError("invalid " + key + ": '" + text + "' is not a number");
    }
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(v)) throw ConfigError("invalid " + key + ": must be finite");
    }
    return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
    std::vector<T> out;
    for (const auto& item : split_list(text)) out.push_back(parse_number<T>(key, item));
    return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string s = trim(text);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("invalid " + key + ": '" + text + "' is not a boolean");
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_floating_point_v<T>) {
            out += format_double(v[i]);
        } else {
            out += std::to_string(v[i]);
        }
    }
    return out;
}

const std::map<std::string, std::vector<std::string>>& schema() {
    static const std::map<std::string, std::vector<std::string>> s{
        {"physics", {"nu", "system", "R", "eps0"}},
        {"discretization", {"n_modes", "dt", "t_final", "burn_in", "sample_every", "snapshot_every"}},
        {"noise", {"sigma0", "trace", "q_exponent", "alpha0"}},
        {"ensemble", {"n_traj", "seed", "x0"}},
        {"observables",
         {"thetas", "shells", "flux_cutoffs", "inertial_a", "R_grid", "delta_grid", "check_times",
          "mixing_observable", "bump_start", "bump_width", "richardson"}},
    };
    return s;
}

std::string section_of(const std::string& key) {
    for (const auto& [sec, keys] : schema()) {
        if (std::find(keys.begin(), keys.end(), key) != keys.end()) return sec;
    }
    return {};
}

// '#' comments are accepted alongside the ';' comments the INI reader knows.
std::string normalize_comments(const std::string& text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const auto b = line.find_first_not_of(" \t");
        if (b != std::string::npos && line[b] == '#') line[b] = ';';
        out << line << '\n';
    }
    return out.str();
}

}  // namespace

// ---------------------------------------------------------------------------

EnsembleSpec parse_config(const std::string& text, const std::string& origin) {
    pt::ptree tree;
    try {
        std::istringstream in(normalize_comments(text));
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }

    // flatten into (section, key) -> value, rejecting unknown names
    std::map<std::string, std::string> values;
    for (const auto& [name, node] : tree) {
        if (node.empty() && !schema().count(name)) {
            const std::string sec = section_of(name);
            if (sec.empty()) throw ConfigError(origin + ": unknown key '" + name + "'");
            const std::string full = sec + "." + name;
            if (values.count(full)) throw ConfigError(origin + ": key '" + name + "' given twice");
            values[full] = node.data();
            continue;
        }
        const auto sec = schema().find(name);
        if (sec == schema().end()) throw ConfigError(origin + ": unknown section [" + name + "]");
        for (const auto& [key, leaf] : node) {
            if (std::find(sec->second.begin(), sec->second.end(), key) == sec->second.end()) {
                throw ConfigError(origin + ": unknown key '" + key + "' in [" + name + "]");
            }
            const std::string full = name + "." + key;
            if (values.count(full)) throw ConfigError(origin + ": key '" + key + "' given twice");
            values[full] = leaf.data();
        }
    }
    auto get = [&](const std::string& full) -> const std::string* {
        const auto it = values.find(full);
        return it == values.end() ? nullptr : &it->second;
    };
    auto required = [&](const std::string& full) -> const std::string& {
        const auto* v = get(full);
        if (!v) throw ConfigError(origin + ": missing required key '" + full.substr(full.find('.') + 1) + "'");
        return *v;
    };

    EnsembleSpec spec;
    RunConfig& rc = spec.run;
    try {
        rc.nu = parse_number<double>("nu", required("physics.nu"));
        if (const auto* v = get("physics.system")) rc.system = parse_system(trim(*v));
        if (const auto* v = get("physics.R")) rc.R = parse_number<double>("R", *v);
        if (const auto* v = get("physics.eps0")) rc.eps0 = parse_number<double>("eps0", *v);

        rc.n_modes = parse_number<int>("n_modes", required("discretization.n_modes"));
        rc.dt = parse_number<double>("dt", required("discretization.dt"));
        rc.t_final = parse_number<double>("t_final", required("discretization.t_final"));
        if (const auto* v = get("discretization.burn_in")) {
            rc.burn_in = parse_number<double>("burn_in", *v);
        } else {
            rc.burn_in = rc.nu > 0.0 ? std::min(10.0 / (2.0 * rc.nu), 0.5 * rc.t_final) : 0.0;
        }
        if (const auto* v = get("discretization.sample_every")) rc.sample_every = parse_number<int>("sample_every", *v);
        if (const auto* v = get("discretization.snapshot_every")) {
            rc.snapshot_every = parse_number<int>("snapshot_every", *v);
        }

        rc.noise.n_modes = rc.n_modes;
        if (const auto* v = get("noise.q_exponent")) rc.noise.q = parse_number<double>("q_exponent", *v);
        if (const auto* v = get("noise.alpha0")) rc.noise.alpha0 = parse_number<double>("alpha0", *v);
        const auto* sigma0 = get("noise.sigma0");
        const auto* trace = get("noise.trace");
        if (sigma0 && trace) throw ConfigError("invalid noise: give sigma0 or trace, not both");
        if (sigma0) {
            rc.noise.sigma0 = parse_number<double>("sigma0", *sigma0);
        } else {
            const double target = trace ? parse_number<double>("trace", *trace) : 1.0;
            if (!(target >= 0.0)) throw ConfigError("invalid trace: must be >= 0");
            if (rc.n_modes >= 1) {
                rc.noise.sigma0 = 1.0;
                rc.noise = rc.noise.normalized_to_trace(target);
            }
        }

        rc.seed = parse_number<std::uint64_t>("seed", required("ensemble.seed"));
        if (const auto* v = get("ensemble.n_traj")) spec.n_traj = parse_number<int>("n_traj", *v);
        if (const auto* v = get("ensemble.x0")) {
            spec.x0.clear();
            for (const auto& item : split_list(*v)) spec.x0.push_back(InitialCondition::parse(item));
            if (spec.x0.empty()) throw ConfigError("invalid x0: empty list");
        }

        auto& ob = spec.observables;
        if (const auto* v = get("observables.thetas")) ob.thetas = parse_list<double>("thetas", *v);
        if (const auto* v = get("observables.shells")) ob.shells = parse_number<int>("shells", *v);
        if (const auto* v = get("observables.flux_cutoffs")) ob.flux_cutoffs = parse_list<int>("flux_cutoffs", *v);
        if (const auto* v = get("observables.inertial_a")) ob.inertial_a = parse_list<double>("inertial_a", *v);
        if (const auto* v = get("observables.R_grid")) ob.R_grid = parse_list<double>("R_grid", *v);
        if (const auto* v = get("observables.delta_grid")) ob.delta_grid = parse_list<double>("delta_grid", *v);
        if (const auto* v = get("observables.check_times")) ob.check_times = parse_list<double>("check_times", *v);
        if (const auto* v = get("observables.mixing_observable")) ob.mixing_observable = trim(*v);
        if (const auto* v = get("observables.bump_start")) ob.bump_start = parse_number<double>("bump_start", *v);
        if (const auto* v = get("observables.bump_width")) ob.bump_width = parse_number<double>("bump_width", *v);
        if (const auto* v = get("observables.richardson")) ob.richardson = parse_bool("richardson", *v);
        rc.thetas = ob.thetas;
    } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return spec;
}

EnsembleSpec load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    EnsembleSpec spec = parse_config(os.str(), path.string());
    spec.base_dir = path.parent_path();
    return spec;
}

void EnsembleSpec::validate() const {
    run.validate();
    if (n_traj < 1) throw ConfigError("invalid n_traj: must be >= 1");
    if (x0.empty()) throw ConfigError("invalid x0: empty list");
    const auto& ob = observables;
    if (ob.shells < 0) throw ConfigError("invalid shells: must be >= 0");
    for (int K : ob.flux_cutoffs) {
        if (K < 0) throw ConfigError("invalid flux_cutoffs: must be >= 0");
    }
    for (double a : ob.inertial_a) {
        if (!(a > 0.0)) throw ConfigError("invalid inertial_a: must be > 0");
    }
    for (double R : ob.R_grid) {
        if (!(R >= 1.0)) throw ConfigError("invalid R_grid: must be >= 1");
    }
    for (double d : ob.delta_grid) {
        if (!(d >= 0.0)) throw ConfigError("invalid delta_grid: must be >= 0");
    }
    for (double t : ob.check_times) {
        if (!(t >= 0.0 && t <= run.t_final)) throw ConfigError("invalid check_times: must lie in [0, t_final]");
    }
    if (ob.bump_width > 0.0 && !(ob.bump_start >= 0.0 && ob.bump_start + ob.bump_width <= run.t_final)) {
        throw ConfigError("invalid bump_start/bump_width: support must lie in [0, t_final]");
    }
    if (ob.bump_width < 0.0) throw ConfigError("invalid bump_width: must be >= 0");
}

SpectralField EnsembleSpec::initial_state(std::size_t traj) const {
    const InitialCondition& ic = x0[traj % x0.size()];
    switch (ic.kind) {
    case InitialCondition::Kind::zero: return SpectralField(run.n_modes);
    case InitialCondition::Kind::random:
        return random_field(run.n_modes, ic.energy, trajectory_key(run.seed, traj), 0, 2.0);
    case InitialCondition::Kind::snapshot: {
        std::filesystem::path p(ic.path);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        return load_initial_snapshot(p, run.n_modes);
    }
    }
    return SpectralField(run.n_modes);
}

std::vector<int> EnsembleSpec::flux_cutoffs() const {
    if (!observables.flux_cutoffs.empty()) return observables.flux_cutoffs;
    std::vector<int> out;
    for (int K = 1; K <= run.n_modes; ++K) out.push_back(K);
    return out;
}

std::string EnsembleSpec::canonical() const {
    const auto& ob = observables;
    std::ostringstream os;
    os << "[physics]\n"
       << "nu = " << format_double(run.nu) << '\n'
       << "system = " << to_string(run.system) << '\n'
       << "R = " << format_double(run.R) << '\n'
       << "eps0 = " << format_double(run.eps0) << '\n'
       << "\n[discretization]\n"
       << "n_modes = " << run.n_modes << '\n'
       << "dt = " << format_double(run.dt) << '\n'
       << "t_final = " << format_double(run.t_final) << '\n'
       << "burn_in = " << format_double(run.burn_in) << '\n'
       << "sample_every = " << run.sample_every << '\n'
       << "snapshot_every = " << run.snapshot_every << '\n'
       << "\n[noise]\n"
       << "sigma0 = " << format_double(run.noise.sigma0) << '\n'
       << "q_exponent = " << format_double(run.noise.q) << '\n'
       << "alpha0 = " << format_double(run.noise.alpha0) << '\n'
       << "\n[ensemble]\n"
       << "n_traj = " << n_traj << '\n'
       << "seed = " << run.seed << '\n'
       << "x0 = ";
    for (std::size_t i = 0; i < x0.size(); ++i) os << (i ? ", " : "") << x0[i].text();
    os << "\n\n[observables]\n"
       << "thetas = " << join(ob.thetas) << '\n'
       << "shells = " << ob.shells << '\n'
       << "flux_cutoffs = " << join(ob.flux_cutoffs) << '\n'
       << "inertial_a = " << join(ob.inertial_a) << '\n'
       << "R_grid = " << join(ob.R_grid) << '\n'
       << "delta_grid = " << join(ob.delta_grid) << '\n'
       << "check_times = " << join(ob.check_times) << '\n'
       << "mixing_observable = " << ob.mixing_observable << '\n'
       << "bump_start = " << format_double(ob.bump_start) << '\n'
       << "bump_width = " << format_double(ob.bump_width) << '\n'
       << "richardson = " << (ob.richardson ? "true" : "false") << '\n';
    return os.str();
}

std::string EnsembleSpec::hash() const { return sha256_hex(canonical()).substr(0, 16); }

}  // namespace nsmk
