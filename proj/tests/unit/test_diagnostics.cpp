#include "doctest.h"
#include "helpers.hpp"

#include "nsmk/diagnostics.hpp"
#include "nsmk/errors.hpp"
#include "nsmk/nonlinearity.hpp"
#include "nsmk/spectral_ops.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace nsmk;
using nsmk::test::random_flat;
using nsmk::test::single_mode;

namespace {

Trajectory synthetic(std::vector<double> times, std::vector<double> h2, std::vector<double> v2, double nu) {
    Trajectory t;
    t.nu = nu;
    t.times = std::move(times);
    t.h2 = std::move(h2);
    t.v2 = std::move(v2);
    t.veps2 = t.v2;
    return t;
}

RunConfig quiet_config(int n) {
    RunConfig c;
    c.nu = 0.4;
    c.n_modes = n;
    c.dt = 0.002;
    c.t_final = 1.0;
    c.system = SystemKind::full;
    c.noise = CovarianceSpec{.sigma0 = 0.0, .q = 2.0, .alpha0 = 0.25, .n_modes = n};
    return c;
}

}  // namespace

TEST_CASE("E1 and En on synthetic ledgers") {
    const std::vector<double> t{0.0, 0.5, 1.0, 1.5};
    const auto zero = synthetic(t, {0, 0, 0, 0}, {0, 0, 0, 0}, 0.3);
    for (double v : energy_E1(zero, 0.0)) CHECK(v == 0.0);
    for (double v : energy_En(zero, 2, 0.0)) CHECK(v == 0.0);
    CHECK_THROWS(energy_En(zero, 1, 0.0));

    // constant |x|_H^2 = c: En = c^n + n c^{n-1} (E1 with sigma2 -> (2n-1) sigma2, minus c)
    const double c = 2.0, nu = 0.3, sigma2 = 0.7;
    const auto tr = synthetic(t, {c, c, c, c}, {1.0, 3.0, 2.0, 5.0}, nu);
    const auto e1 = energy_E1(tr, 3.0 * sigma2);
    const auto e2 = energy_En(tr, 2, sigma2);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(e2[i] == doctest::Approx(c * c + 2.0 * c * (e1[i] - c)));
    CHECK(e1[1] == doctest::Approx(c + 2.0 * nu * 0.5 * (1.0 + 3.0) * 0.5 - 0.5 * 3.0 * sigma2));
}

TEST_CASE("E1 without noise: decay up to the scheme defect") {
    // Linear dynamics: exact decay, only the trapezoid error (2 nu |k|^2 dt)^3 / 12 per step remains.
    RunConfig lin = quiet_config(2);
    lin.system = SystemKind::stokes;
    const auto y0 = random_field(2, 2.0, 21, 0);
    const auto e_lin = energy_E1(simulate(lin, y0, {.stokes_from_x0 = true}), 0.0);
    for (std::size_t n = 1; n < e_lin.size(); ++n) CHECK(e_lin[n] <= e_lin[n - 1] + 1e-6 * e_lin[0]);
    CHECK(e_lin.back() >= e_lin.front());

    const auto x0 = random_field(4, 2.0, 21, 0);

    // With B the explicit step adds O(dt^2) energy per step: the drift halves with dt.
    auto drift = [&](double dt) {
        RunConfig c = quiet_config(4);
        c.dt = dt;
        const auto e = energy_E1(simulate(c, x0, {}), 0.0);
        return e.back() - e.front();
    };
    const double d1 = drift(0.002), d2 = drift(0.001);
    CHECK(d1 > 0.0);
    CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.05));
    CHECK(d1 < 1e-2 * e_lin[0]);
}

TEST_CASE("bump and the smoothed supermartingale statistic") {
    const Bump phi{1.0, 2.0};
    CHECK(phi(0.5) == 0.0);
    CHECK(phi(3.5) == 0.0);
    CHECK(phi(2.0) == 1.0);
    std::vector<double> t;
    for (int i = 0; i <= 4000; ++i) t.push_back(4.0 * i / 4000.0);

    const std::vector<std::vector<double>> constant(5, std::vector<double>(t.size(), 3.7));
    const auto r0 = supermartingale_smooth_test(t, constant, phi);
    CHECK(r0.estimate.mean == 0.0);
    CHECK(r0.pass);

    std::vector<double> minus_t(t.size());
    std::vector<double> phis(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        minus_t[i] = -t[i];
        phis[i] = phi(t[i]);
    }
    const std::vector<std::vector<double>> dec(3, minus_t);
    const auto r1 = supermartingale_smooth_test(t, dec, phi);
    CHECK(r1.estimate.mean == doctest::Approx(trapezoid(t, phis)).epsilon(1e-12));
    CHECK(r1.estimate.mean > 0.0);

    std::vector<std::vector<double>> inc(3, t);
    CHECK_FALSE(supermartingale_smooth_test(t, inc, phi).pass);
    CHECK_THROWS(supermartingale_smooth_test(t, constant, Bump{3.0, 2.0}));
    CHECK_THROWS(supermartingale_smooth_test(t, constant, Bump{-0.1, 1.0}));
}

TEST_CASE("G process without noise") {
    RunConfig c = quiet_config(4);
    RunConfig s = c;
    s.system = SystemKind::stokes;
    const auto x0 = random_field(4, 1.5, 31, 0);
    const auto xi = simulate(c, x0, {.keep_states = true});
    const auto z = simulate(s, x0, {.keep_states = true});
    const auto v = residual_v(xi, z);
    const auto g = g_process(v, z, xi);
    const auto ixi = cumulative_trapezoid(xi.times, xi.v2);
    for (std::size_t n = 0; n < g.size(); ++n) {
        CHECK(g[n] == doctest::Approx(0.5 * xi.h2[n] + c.nu * ixi[n]).epsilon(1e-12));
    }
    const auto e1 = energy_E1(xi, 0.0);
    for (std::size_t n = 0; n < g.size(); ++n) CHECK(g[n] == doctest::Approx(0.5 * e1[n]).epsilon(1e-12));

    RunConfig noisy = c;
    noisy.noise = noisy.noise.normalized_to_trace(1.0);
    RunConfig noisy_s = noisy;
    noisy_s.system = SystemKind::stokes;
    const auto xn = simulate(noisy, SpectralField(4), {.keep_states = true});
    const auto zn = simulate(noisy_s, SpectralField(4), {.keep_states = true});
    CHECK(g_process(residual_v(xn, zn), zn, xn)[0] == 0.0);
    RunConfig shorter = noisy_s;
    shorter.t_final = 0.5;
    CHECK_THROWS_AS(g_process(residual_v(xn, zn), simulate(shorter, SpectralField(4), {.keep_states = true}), xn),
                    ConfigError);
}

TEST_CASE("flux: two evaluation paths") {
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
        const auto x = random_flat(4, 40 + trial);
        const auto bxx = nonlinearity_B(x, x);
        const int cutoffs[] = {0, 1, 2, 3, 4, 5};
        const auto prof = flux_profile(x, bxx, cutoffs);
        for (int i = 0; i < 6; ++i) {
            const int K = cutoffs[i];
            const double a = flux(x, K);
            const double b = flux_via_full(x, K);
            if (K == 0 || K >= 4) {
                CHECK(a == 0.0);
                CHECK(prof[std::size_t(i)] == 0.0);
                CHECK(std::abs(b) < 1e-12);
            } else {
                CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
                CHECK(std::abs(prof[std::size_t(i)] - b) <= 1e-12 * std::abs(b));
            }
        }
    }
    CHECK_THROWS(flux(random_flat(2, 1), -1));
}

TEST_CASE("regularized inertial term") {
    const auto x = random_flat(5, 3);
    CHECK(std::abs(inertial_regularized(x, 0.0)) < 1e-10);
    const auto s = single_mode(5, {1, 2, 0}, {Complex(2.0, 1.0), Complex(-1.0, -0.5), Complex(0.3, 0.7)});
    for (double a : {0.0, 0.1, 1.0}) CHECK(std::abs(inertial_regularized(s, a)) < 1e-14);
    CHECK(std::abs(inertial_regularized(x, 0.3)) > 1e-6);
    CHECK_THROWS(inertial_regularized(x, -1.0));
}

TEST_CASE("shell spectrum") {
    const auto x = random_flat(4, 9);
    const auto e = shell_spectrum(x);
    double sum = 0.0;
    for (double v : e) sum += v;
    CHECK(sum == doctest::Approx(norm2(x, 0.0)).epsilon(1e-14));
    CHECK(e.size() == 7);  // floor(sqrt(48)) + 1
    CHECK(e[0] == 0.0);

    const auto s = single_mode(3, {1, 0, 0}, {Complex(0.0), Complex(1.0), Complex(0.0)});
    const auto es = shell_spectrum(s);
    CHECK(es[1] == doctest::Approx(2.0));
    for (std::size_t k = 0; k < es.size(); ++k) {
        if (k != 1) CHECK(es[k] == 0.0);
    }
    // |k| = 2 exactly sits in shell 2, sqrt(3) in shell 1
    const auto t = single_mode(3, {1, 1, 1}, {Complex(1.0), Complex(-1.0), Complex(0.0)});
    CHECK(shell_spectrum(t)[1] > 0.0);
    const auto u = single_mode(3, {0, 2, 0}, {Complex(1.0), Complex(0.0), Complex(0.0)});
    CHECK(shell_spectrum(u)[2] > 0.0);

    const auto shifted = shell_spectrum(translate(x, {0.3, 1.7, -2.2}));
    for (std::size_t k = 0; k < e.size(); ++k) CHECK(shifted[k] == doctest::Approx(e[k]).epsilon(1e-13));
}

TEST_CASE("observable set names and values") {
    ObservableSpec spec;
    spec.thetas = {0.75};
    spec.shells = 2;
    spec.flux_cutoffs = {1, 2};
    spec.inertial_a = {0.1};
    spec.custom = {{"one", [](const SpectralField&) { return 1.0; }}};
    const ObservableSet set(spec);
    const std::vector<std::string> expect{"h2", "v2", "theta:0.75", "E(1)", "E(2)", "flux:1", "flux:2",
                                          "lowv2:1", "lowv2:2", "D:0.1", "one"};
    CHECK(set.names() == expect);
    const auto x = random_flat(3, 6);
    const auto v = set.evaluate(x);
    CHECK(v[0] == doctest::Approx(norm2(x, 0.0)));
    CHECK(v[2] == doctest::Approx(norm2(x, 0.75)));
    CHECK(v[5] == doctest::Approx(flux(x, 1)).epsilon(1e-10));
    CHECK(v[7] == doctest::Approx(norm2(project_modes(x, 1, ModeSide::low), 0.5)));
    CHECK(v[9] == doctest::Approx(inertial_regularized(x, 0.1)).epsilon(1e-12));
    CHECK(v[10] == 1.0);

    ObservableSpec dup;
    dup.custom = {{"h2", [](const SpectralField&) { return 0.0; }}};
    CHECK_THROWS_AS(ObservableSet{dup}, ConfigError);
}

TEST_CASE("kb averaging") {
    const auto x = random_flat(3, 2);
    Trajectory tr;
    for (int n = 0; n < 50; ++n) tr.record(0.1 * n, x, true);
    const ObservableSet set(ObservableSpec{.thetas = {}, .shells = 1, .flux_cutoffs = {}, .inertial_a = {}, .custom = {}});
    const auto m = kb_average(tr, 2.0, set);
    CHECK(m.sample_count() == 30);
    CHECK(m.mean("h2").mean == doctest::Approx(norm2(x, 0.0)).epsilon(1e-14));
    CHECK(m.mean("v2").mean == doctest::Approx(norm2(x, 0.5)).epsilon(1e-14));
    CHECK(m.mean("h2").se == doctest::Approx(0.0));
    CHECK(m.accumulator("E(1)").n == 30);
    CHECK_THROWS_AS(kb_average(tr, 10.0, set), ConfigError);
    Trajectory no_states = tr;
    no_states.states.clear();
    CHECK_THROWS_AS(kb_average(no_states, 0.0, set), ConfigError);

    EmpiricalMeasure a(0.0, {"f"}), b(0.0, {"f"});
    const std::vector<double> t{0, 1, 2, 3};
    a.add(t, {{1.0, 2.0, 3.0, 4.0}});
    b.add(t, {{5.0, 6.0, 7.0, 8.0}});
    a.merge(b);
    CHECK(a.trajectory_count() == 2);
    CHECK(a.mean("f").mean == doctest::Approx(4.5));
    CHECK(a.accumulator("f").mean == doctest::Approx(4.5));
    CHECK(a.mean_of({{"f", 2.0}}, -1.0).mean == doctest::Approx(8.0));
}

TEST_CASE("H moment bound") {
    RunConfig c = quiet_config(3);
    c.t_final = 3.0;
    const auto x0 = random_field(3, 4.0, 77, 0);
    const auto tr = simulate(c, x0, {});
    for (std::size_t n = 0; n < tr.size(); ++n) {
        CHECK(tr.h2[n] <= tr.h2[0] * std::exp(-2.0 * c.nu * tr.times[n]) * (1.0 + 1e-12));
    }
    const std::vector<std::vector<double>> ens{tr.h2};
    const double checks[] = {0.0, 0.5, 1.0, 2.0};
    const auto rows = h_moment_bound_check(tr.times, ens, tr.h2[0], c.nu, 0.0, checks);
    CHECK(rows[0].bound == tr.h2[0]);
    CHECK(rows[0].mean.mean == tr.h2[0]);
    for (const auto& r : rows) CHECK(r.pass);
}

TEST_CASE("mixing fit") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<double> t;
    for (int i = 0; i <= 40; ++i) t.push_back(0.25 * i);
    std::vector<std::vector<double>> stat(32, std::vector<double>(t.size()));
    for (auto& s : stat) {
        for (auto& v : s) v = 1.0 + 0.1 * g(rng);
    }
    std::vector<std::vector<double>> same(32, std::vector<double>(t.size()));
    for (auto& s : same) {
        for (auto& v : s) v = 1.0 + 0.1 * g(rng);
    }
    const auto none = mixing_fit("h2", t, same, stat);
    CHECK_FALSE(none.fit_available);

    std::vector<std::vector<double>> relax(32, std::vector<double>(t.size()));
    for (auto& s : relax) {
        for (std::size_t i = 0; i < t.size(); ++i) s[i] = 1.0 + 5.0 * std::exp(-0.8 * t[i]) + 0.01 * g(rng);
    }
    const auto r = mixing_fit("h2", t, relax, stat);
    REQUIRE(r.fit_available);
    CHECK(r.a == doctest::Approx(0.8).epsilon(0.05));
    CHECK(r.C == doctest::Approx(5.0).epsilon(0.1));
    CHECK(r.r2 > 0.99);
    CHECK(r.n_fit >= 3);
}

TEST_CASE("entrance and stopping statistics") {
    const std::vector<double> vals{0.5, 1.5, 2.5, 3.5};
    CHECK(entrance_probability(vals, std::numeric_limits<double>::infinity()).p == 1.0);
    CHECK(entrance_probability(vals, 0.0).p == 0.0);
    const auto e = entrance_probability(vals, 2.0);
    CHECK(e.p == 0.5);
    CHECK(e.se == doctest::Approx(0.25));

    StoppingEnsemble s1{.R = 2.0, .initial_veps2 = {0.1, 0.2, 5.0, 0.0}, .tau = {0.5, std::nullopt, 0.1, 2.0}};
    StoppingEnsemble s2{.R = 4.0, .initial_veps2 = {0.1, 0.2, 5.0, 0.0}, .tau = {1.5, std::nullopt, 0.1, std::nullopt}};
    const StoppingEnsemble runs[] = {s1, s2};
    const double deltas[] = {1.0, 3.0};
    const auto rows = stopping_statistics(runs, deltas);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].excluded == 1);
    CHECK(rows[0].n == 3);
    CHECK(rows[0].p_hat == doctest::Approx(1.0 / 3.0));
    CHECK(rows[1].p_hat == doctest::Approx(2.0 / 3.0));
    CHECK(rows[2].excluded == 1);  // 5.0 > R/2 = 2
    CHECK(rows[2].p_hat == 0.0);
    CHECK(rows[3].p_hat == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("selection functional J") {
    std::vector<double> t;
    for (int i = 0; i <= 300; ++i) t.push_back(0.05 * i);
    const std::vector<std::vector<double>> ones(4, std::vector<double>(t.size(), 1.0));
    for (double lambda : {0.5, 1.0, 3.0}) {
        const auto j = j_functional(t, ones, lambda);
        CHECK(j.estimate.mean == doctest::Approx(-std::expm1(-lambda * 15.0) / lambda).epsilon(1e-13));
        CHECK(j.tail_bound == doctest::Approx(std::exp(-lambda * 15.0) / lambda));
    }
    const std::vector<std::vector<double>> zeros(2, std::vector<double>(t.size(), 0.0));
    CHECK(j_functional(t, zeros, 1.0).estimate.mean == 0.0);
    CHECK_THROWS(j_functional(t, ones, 0.0));

    // linear f is integrated exactly: int_0^T e^{-t} t dt
    std::vector<std::vector<double>> lin(1, t);
    const double T = 15.0;
    CHECK(j_functional(t, lin, 1.0).estimate.mean == doctest::Approx(1.0 - std::exp(-T) * (1.0 + T)).epsilon(1e-12));

    // window start shifts the weight origin
    const auto shifted = j_functional(t, ones, 1.0, 5.0);
    CHECK(shifted.estimate.mean == doctest::Approx(-std::expm1(-10.0)).epsilon(1e-13));
}

TEST_CASE("translation invariance check") {
    const auto k1 = WaveVector{1, 0, 0};
    const RVec3 shift{0.9, 0.0, 0.0};
    ObservableSpec spec;
    spec.custom = {
        {"h2_shift", [=](const SpectralField& x) { return norm2(translate(x, shift), 0.0); }},
        {"h2_zero", [=](const SpectralField& x) { return norm2(translate(x, {0.0, 0.0, 0.0}), 0.0); }},
        {"re", [=](const SpectralField& x) { return x.at(k1)[1].real(); }},
        {"re_zero", [=](const SpectralField& x) { return translate(x, {0.0, 0.0, 0.0}).at(k1)[1].real(); }},
    };
    const ObservableSet set(spec);
    Trajectory tr;
    for (int n = 0; n < 20; ++n) tr.record(n, random_flat(3, 100 + std::uint64_t(n)), true);
    const auto m = kb_average(tr, 0.0, set);
    const ShiftedPair pairs[] = {{"h2", "h2_shift", true}, {"h2", "h2_zero", true}, {"re", "re_zero", true}};
    const auto rep = translation_invariance_check(m, pairs);
    CHECK(rep.pass);
    CHECK(rep.rows[1].max_pathwise_deviation == 0.0);
    CHECK(rep.rows[2].max_pathwise_deviation == 0.0);
    CHECK(rep.rows[0].max_pathwise_deviation < 1e-14);
}
