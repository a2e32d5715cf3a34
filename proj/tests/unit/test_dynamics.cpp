#include "doctest.h"
#include "helpers.hpp"

#include "nsmk/dynamics.hpp"
#include "nsmk/errors.hpp"
#include "nsmk/spectral_ops.hpp"

#include <cmath>

using namespace nsmk;
using nsmk::test::max_abs_diff;
using nsmk::test::single_mode;

namespace {

RunConfig small_config(int n, SystemKind sys) {
    RunConfig c;
    c.nu = 0.3;
    c.n_modes = n;
    c.dt = 0.01;
    c.t_final = 1.0;
    c.system = sys;
    c.noise = CovarianceSpec{.sigma0 = 1.0, .q = 2.0, .alpha0 = 0.25, .n_modes = n}.normalized_to_trace(1.0);
    c.seed = 99;
    return c;
}

bool same_ledger(const Trajectory& a, const Trajectory& b, std::size_t upto) {
    for (std::size_t n = 0; n < upto; ++n) {
        if (a.times[n] != b.times[n] || a.h2[n] != b.h2[n] || a.v2[n] != b.v2[n] || a.veps2[n] != b.veps2[n]) {
            return false;
        }
        if (!a.states.empty() && !a.states[n].identical(b.states[n])) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("cut-off function") {
    const CutoffShape shape{10.0};
    CHECK(chi(shape, 10.0) == 1.0);
    CHECK(chi(shape, 15.0) == 1.0);
    CHECK(chi(shape, 20.0) == 0.0);
    CHECK(chi(shape, 1e9) == 0.0);
    CHECK(chi(shape, 17.5) == 0.5);
    CHECK_THROWS(chi(shape, -1.0));

    const double c = CutoffShape::derivative_constant();
    CHECK(c > 3.0);
    CHECK(c < 5.0);
    for (double R : {1.0, 7.0, 1e3}) {
        const CutoffShape s{R};
        double prev = 1.0;
        for (int i = 0; i <= 4000; ++i) {
            const double x = 1.4 * R + 0.7 * R * i / 4000.0;
            const double v = s.value(x);
            CHECK(v <= prev);
            CHECK(std::abs(s.derivative(x)) <= c / R * (1.0 + 1e-6));
            prev = v;
        }
        // derivative matches a central difference
        const double x = 1.8 * R, h = 1e-6 * R;
        CHECK(s.derivative(x) == doctest::Approx((s.value(x + h) - s.value(x - h)) / (2.0 * h)).epsilon(1e-5));
    }
}

TEST_CASE("run config validation") {
    RunConfig c = small_config(2, SystemKind::full);
    CHECK_NOTHROW(c.validate());
    auto bad = [&](auto mutate) {
        RunConfig d = c;
        mutate(d);
        CHECK_THROWS_AS(d.validate(), ConfigError);
    };
    bad([](RunConfig& d) { d.dt = 0.0; });
    bad([](RunConfig& d) { d.eps0 = 0.3; });
    bad([](RunConfig& d) { d.eps0 = 0.0; });
    bad([](RunConfig& d) { d.nu = 0.0; });
    bad([](RunConfig& d) { d.burn_in = 2.0; });
    bad([](RunConfig& d) { d.R = 0.5; });
    bad([](RunConfig& d) { d.noise.n_modes = 3; });
    try {
        RunConfig d = c;
        d.eps0 = 0.3;
        d.validate();
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("eps0") != std::string::npos);
    }
    CHECK(parse_system("stokes") == SystemKind::stokes);
    CHECK_THROWS_AS(parse_system("euler"), ConfigError);
}

TEST_CASE("zero noise from zero stays zero") {
    RunConfig c = small_config(3, SystemKind::full);
    c.noise.sigma0 = 0.0;
    const auto tr = simulate(c, SpectralField(3), {.keep_states = true});
    for (const auto& x : tr.states) CHECK(nsmk::test::max_abs(x) == 0.0);
}

TEST_CASE("linear part is exact") {
    RunConfig c = small_config(3, SystemKind::stokes);
    c.noise.sigma0 = 0.0;
    c.dt = 0.037;
    c.t_final = 3.7;
    const WaveVector k{2, -1, 1};
    const auto x0 = single_mode(3, k, {Complex(1.0, 0.5), Complex(2.0, 1.0), Complex(0.0, 0.0)});
    const auto tr = simulate(c, x0, {.keep_states = true, .stokes_from_x0 = true});
    const auto idx = x0.lattice().locate(k).index;
    for (std::size_t n = 0; n < tr.size(); ++n) {
        const double expect = std::abs(x0[idx][1]) * std::exp(-c.nu * 6.0 * tr.times[n]);
        CHECK(std::abs(tr.states[n][idx][1]) == doctest::Approx(expect).epsilon(1e-13));
    }
    // the default stokes run ignores x0
    CHECK(simulate(c, x0).h2.back() == 0.0);
}

TEST_CASE("full and cutoff agree bitwise while chi = 1") {
    RunConfig full = small_config(4, SystemKind::full);
    RunConfig cut = full;
    cut.system = SystemKind::cutoff;
    cut.R = 1e6;
    const auto x0 = random_field(4, 2.0, 5, 0);
    const auto a = simulate(full, x0, {.keep_states = true});
    const auto b = simulate(cut, x0, {.keep_states = true});
    CHECK_FALSE(b.first_cutoff_time.has_value());
    CHECK(same_ledger(a, b, a.size()));

    SUBCASE("single step helpers") {
        const auto s1 = step_full(x0, full, 3, 17);
        const auto s2 = step_cutoff(x0, cut, 3, 17);
        CHECK(s1.identical(s2));
    }
}

TEST_CASE("cutoff beyond 2R removes the nonlinearity") {
    RunConfig c = small_config(3, SystemKind::cutoff);
    c.R = 1.0;
    c.noise.sigma0 = 0.0;
    const auto x = random_field(3, 50.0, 8, 0);
    Integrator integ(c, 1);
    REQUIRE(integ.veps2(x) >= 2.0 * c.R);
    const auto y = integ.step(x, 0);
    CHECK(integ.last_scale() == 0.0);
    RunConfig lin = c;
    lin.system = SystemKind::stokes;
    Integrator linear(lin, 1);
    CHECK(y.identical(linear.step(x, 0)));
}

TEST_CASE("simulate: determinism, t_final = 0, sampling") {
    RunConfig c = small_config(3, SystemKind::full);
    c.sample_every = 5;
    c.thetas = {0.0, 1.0};
    const auto x0 = random_field(3, 1.0, 3, 0);
    const auto a = simulate(c, x0, {.keep_states = true});
    const auto b = simulate(c, x0, {.keep_states = true});
    CHECK(same_ledger(a, b, a.size()));
    CHECK(a.size() == 21);
    CHECK(a.times[1] == doctest::Approx(0.05));
    REQUIRE(a.extra.size() == 2);
    for (std::size_t n = 0; n < a.size(); ++n) {
        CHECK(a.extra[0][n] == doctest::Approx(a.h2[n]).epsilon(1e-14));
        CHECK(a.extra[1][n] == doctest::Approx(norm2(a.states[n], 1.0)).epsilon(1e-14));
        if (n > 0) CHECK(a.times[n] > a.times[n - 1]);
    }

    const auto other = simulate(c, x0, {.keep_states = true, .trajectory_index = 1});
    CHECK_FALSE(same_ledger(a, other, a.size()));

    RunConfig z = c;
    z.t_final = 0.0;
    const auto single = simulate(z, x0, {.keep_states = true});
    REQUIRE(single.size() == 1);
    CHECK(single.states[0].identical(x0));

    CHECK_THROWS_AS(simulate(c, random_field(4, 1.0, 3, 0)), ConfigError);
}

TEST_CASE("divergence is reported with the last valid time") {
    RunConfig c = small_config(4, SystemKind::full);
    c.nu = 1e-3;
    c.dt = 2.0;
    c.t_final = 400.0;
    c.noise.sigma0 = 0.0;
    const auto x0 = random_field(4, 1e6, 12, 0, 0.0);
    try {
        simulate(c, x0);
        FAIL("expected divergence");
    } catch (const IntegrationDiverged& e) {
        CHECK(e.last_valid_time() >= 0.0);
        CHECK(e.last_valid_time() < c.t_final);
    }
}

TEST_CASE("stopping time on synthetic ledgers") {
    Trajectory t;
    t.eps0 = 0.25;
    for (int n = 0; n < 12; ++n) {
        t.times.push_back(0.5 * n);
        t.h2.push_back(0.0);
        t.v2.push_back(0.0);
        t.veps2.push_back(n < 7 ? 1.0 : 20.0);
    }
    CHECK(stopping_time(t, 0.25, 100.0) == std::nullopt);
    CHECK(*stopping_time(t, 0.25, 10.0) == t.times[7]);
    CHECK(*stopping_time(t, 0.25, 0.5) == 0.0);
    CHECK_THROWS_AS(stopping_time(t, 0.1, 10.0), ConfigError);
    Trajectory empty_ledger = t;
    empty_ledger.veps2.clear();
    CHECK_THROWS_AS(stopping_time(empty_ledger, 0.25, 10.0), ConfigError);
}

TEST_CASE("residual v = xi - z") {
    RunConfig full = small_config(3, SystemKind::full);
    RunConfig stokes = full;
    stokes.system = SystemKind::stokes;
    const SpectralField x0(3);
    const auto xi = simulate(full, x0, {.keep_states = true});
    const auto z = simulate(stokes, x0, {.keep_states = true});
    const auto v = residual_v(xi, z);
    CHECK(nsmk::test::max_abs(v.states[0]) == 0.0);
    for (std::size_t n = 0; n < v.size(); ++n) {
        CHECK(max_abs_diff(v.states[n] + z.states[n], xi.states[n]) < 1e-14);
    }

    RunConfig quiet = full;
    quiet.noise.sigma0 = 0.0;
    RunConfig quiet_stokes = quiet;
    quiet_stokes.system = SystemKind::stokes;
    const auto y0 = random_field(3, 1.0, 4, 0);
    const auto xq = simulate(quiet, y0, {.keep_states = true});
    const auto vq = residual_v(xq, simulate(quiet_stokes, y0, {.keep_states = true}));
    for (std::size_t n = 0; n < vq.size(); ++n) CHECK(vq.states[n].identical(xq.states[n]));

    RunConfig shorter = stokes;
    shorter.t_final = 0.5;
    CHECK_THROWS_AS(residual_v(xi, simulate(shorter, x0, {.keep_states = true})), ConfigError);
    CHECK_THROWS_AS(residual_v(xi, simulate(stokes, x0)), ConfigError);
}

TEST_CASE("stokes ledger: stationary mean energy") {
    RunConfig c = small_config(2, SystemKind::stokes);
    c.nu = 1.0;
    c.dt = 0.01;
    c.t_final = 200.0;
    const auto tr = simulate(c, SpectralField(2));
    const auto lat = Lattice::get(2);
    double expect = 0.0;
    for (std::size_t i = 0; i < lat->size(); ++i) {
        expect += 2.0 * c.noise.mode_variance_k2(lat->k2(i)) / (c.nu * lat->k2(i));
    }
    double mean = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < tr.size(); ++n) {
        if (tr.times[n] < 5.0) continue;
        mean += tr.h2[n];
        ++count;
    }
    mean /= double(count);
    CHECK(mean == doctest::Approx(expect).epsilon(0.05));
}
