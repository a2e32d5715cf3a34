#include "nsmk/config.hpp"
#include "nsmk/ensemble.hpp"
#include "nsmk/errors.hpp"
#include "nsmk/noise.hpp"
#include "nsmk/nonlinearity.hpp"
#include "nsmk/spectral_ops.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <optional>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDiverged = 3;
constexpr int kCheckFailed = 4;

struct RunArgs {
    std::string config;
    std::string out;
    std::string system;
    std::string x0;
    int threads = 0;
};

void add_run_options(CLI::App* cmd, RunArgs& a, bool with_overrides) {
    cmd->add_option("--config", a.config, "Run configuration (INI)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", a.out, "Output directory")->required();
    cmd->add_option("--threads", a.threads, "Worker threads (capped by NSMK_THREADS)");
    if (with_overrides) {
        cmd->add_option("--system", a.system, "full|stokes|cutoff")
            ->check(CLI::IsMember({"full", "stokes", "cutoff"}));
        cmd->add_option("--x0", a.x0, "zero | random:<energy> | snapshot path");
    }
}

int run_verb(nsmk::Verb verb, const RunArgs& a) {
    nsmk::EnsembleSpec spec = nsmk::load_config(a.config);
    if (!a.system.empty()) spec.run.system = nsmk::parse_system(a.system);
    if (!a.x0.empty()) {
        spec.x0 = {nsmk::InitialCondition::parse(a.x0)};
        spec.base_dir.clear();
    }
    spec.validate();
    const auto m = nsmk::run_ensemble(spec, verb, {.out_dir = a.out, .workers = a.threads, .verdict_stream = &std::cerr});
    std::cout << nsmk::to_string(verb) << ": config_hash=" << m.config_hash << " trajectories=" << m.trajectories.size()
              << " diverged=" << m.diverged_count() << " files=" << m.files.size() << " -> " << a.out << '\n';
    if (verb == nsmk::Verb::energy_check && !m.checks_passed()) return kCheckFailed;
    return kOk;
}

int check_assumptions(const std::string& config, std::optional<double> q, std::optional<double> alpha0,
                      int n_modes) {
    nsmk::CovarianceSpec c{.sigma0 = 1.0, .q = 2.0, .alpha0 = 0.25, .n_modes = n_modes};
    if (!config.empty()) c = nsmk::load_config(config).run.noise;
    if (q) c.q = *q;
    if (alpha0) c.alpha0 = *alpha0;
    c.validate();
    const auto r = nsmk::check_assumptions(c);
    std::cout << r.table();
    return kOk;
}

int oracle_b(int n_modes, int pairs, std::uint64_t seed) {
    if (n_modes < 1 || n_modes > 4) throw nsmk::ConfigError("oracle-b runs at 1 <= N <= 4");
    double worst = 0.0;
    for (int p = 0; p < pairs; ++p) {
        const auto u = nsmk::random_field(n_modes, 1.0, seed, 2 * std::uint64_t(p));
        const auto v = nsmk::random_field(n_modes, 1.0, seed, 2 * std::uint64_t(p) + 1);
        const auto fast = nsmk::nonlinearity_B(u, v);
        const auto ref = nsmk::nonlinearity_B_direct(u, v);
        const double err = std::sqrt(nsmk::norm2(fast - ref, 0.0) / nsmk::norm2(ref, 0.0));
        worst = std::max(worst, err);
        std::cout << "pair " << p << " relative_error " << std::scientific << std::setprecision(3) << err << '\n';
    }
    const bool ok = worst <= 1e-12;
    std::cout << (ok ? "PASS" : "FAIL") << " max relative error " << worst << " (tolerance 1e-12)\n";
    return ok ? kOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic Navier-Stokes Galerkin toolkit"};
    app.require_subcommand(1);

    std::string ca_config;
    std::optional<double> ca_q, ca_alpha0;
    int ca_n = 8;
    auto* ca = app.add_subcommand("check-assumptions", "Noise regularity table");
    ca->add_option("--config", ca_config, "Take the noise block from this config")->check(CLI::ExistingFile);
    ca->add_option("--q", ca_q, "Covariance exponent q in Q = sigma0^2 A^-q");
    ca->add_option("--alpha0", ca_alpha0, "Regularity index alpha0");
    ca->add_option("--n-modes", ca_n, "Truncation N");

    RunArgs args;
    struct VerbCmd {
        nsmk::Verb verb;
        CLI::App* cmd;
    };
    std::vector<VerbCmd> verbs;
    auto add_verb = [&](nsmk::Verb v, const char* help, bool overrides) {
        auto* cmd = app.add_subcommand(nsmk::to_string(v), help);
        add_run_options(cmd, args, overrides);
        verbs.push_back({v, cmd});
    };
    add_verb(nsmk::Verb::simulate, "Run trajectories and write ledgers and snapshots", true);
    add_verb(nsmk::Verb::invariant, "Time-averaged observables (measure.csv)", true);
    add_verb(nsmk::Verb::flux, "Energy flux profile and per-K balance (flux.csv)", true);
    add_verb(nsmk::Verb::mixing, "Relaxation distance and exponential fit (mixing.csv)", true);
    add_verb(nsmk::Verb::stopping, "Stopping-time probabilities over (R, delta) (stopping.csv)", true);
    add_verb(nsmk::Verb::energy_check, "Energy processes and supermartingale verdicts (energy.csv)", true);

    int ob_n = 4, ob_pairs = 20;
    std::uint64_t ob_seed = 1;
    auto* ob = app.add_subcommand("oracle-b", "Compare pseudo-spectral B with the triad sum");
    ob->add_option("--n-modes", ob_n, "Truncation N (<= 4)");
    ob->add_option("--pairs", ob_pairs, "Random field pairs");
    ob->add_option("--seed", ob_seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (ca->parsed()) return check_assumptions(ca_config, ca_q, ca_alpha0, ca_n);
        if (ob->parsed()) return oracle_b(ob_n, ob_pairs, ob_seed);
        for (const auto& v : verbs) {
            if (v.cmd->parsed()) return run_verb(v.verb, args);
        }
    } catch (const nsmk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const nsmk::FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kConfigError;
    } catch (const nsmk::AllTrajectoriesDiverged& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return kDiverged;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    return kOk;
}
