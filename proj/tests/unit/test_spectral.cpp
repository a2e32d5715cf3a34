#include "doctest.h"
#include "helpers.hpp"

#include "nsmk/nonlinearity.hpp"
#include "nsmk/spectral_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace nsmk;
using nsmk::test::max_abs;
using nsmk::test::max_abs_diff;
using nsmk::test::random_flat;
using nsmk::test::single_mode;

TEST_CASE("lattice: half-lattice storage is canonical and lexicographic") {
    const auto lat = Lattice::get(2);
    CHECK(lat->size() == (5u * 5u * 5u - 1u) / 2u);
    for (std::size_t i = 0; i < lat->size(); ++i) {
        const auto& k = lat->mode(i);
        CHECK(k.canonical());
        CHECK(lat->locate(k).index == i);
        CHECK_FALSE(lat->locate(k).conjugate);
        CHECK(lat->locate(-k).index == i);
        CHECK(lat->locate(-k).conjugate);
        if (i > 0) {
            const auto& p = lat->mode(i - 1);
            CHECK(std::tie(p.k1, p.k2, p.k3) < std::tie(k.k1, k.k2, k.k3));
        }
    }
    CHECK_THROWS(lat->locate(WaveVector{0, 0, 0}));
    CHECK_THROWS(lat->locate(WaveVector{3, 0, 0}));
}

TEST_CASE("theta_map branches") {
    CHECK(theta_map(0.3) == doctest::Approx(0.65).epsilon(1e-15));
    CHECK(theta_map(0.5) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(theta_map(1.0) == doctest::Approx(1.25).epsilon(1e-15));
    CHECK_THROWS(theta_map(0.0));
    CHECK_THROWS(theta_map(-1.0));
}

TEST_CASE("leray projection") {
    const CVec3 r1 = leray_project({1, 0, 0}, {1.0, 0.0, 0.0});
    CHECK(std::abs(r1[0]) == 0.0);
    const CVec3 r2 = leray_project({1, 0, 0}, {0.0, 1.0, 0.0});
    CHECK(r2[1] == Complex(1.0));
    const CVec3 r3 = leray_project({1, 1, 0}, {1.0, 0.0, 0.0});
    CHECK(r3[0].real() == doctest::Approx(0.5));
    CHECK(r3[1].real() == doctest::Approx(-0.5));
    CHECK(std::abs(r3[2]) == 0.0);
    CHECK_THROWS(leray_project({0, 0, 0}, {1.0, 0.0, 0.0}));

    SUBCASE("idempotent, annihilates k, self-adjoint") {
        const WaveVector k{2, -1, 3};
        const CVec3 w{Complex(0.3, -1.2), Complex(2.0, 0.5), Complex(-0.7, 0.1)};
        const CVec3 y{Complex(-1.0, 0.4), Complex(0.2, 0.9), Complex(1.5, -0.3)};
        const CVec3 pw = leray_project(k, w);
        const CVec3 ppw = leray_project(k, pw);
        for (int c = 0; c < 3; ++c) CHECK(std::abs(pw[c] - ppw[c]) < 1e-15);
        CHECK(std::abs(pw[0] * 2.0 - pw[1] + pw[2] * 3.0) < 1e-14);
        const CVec3 py = leray_project(k, y);
        Complex lhs = 0.0, rhs = 0.0;
        for (int c = 0; c < 3; ++c) {
            lhs += pw[c] * std::conj(y[c]);
            rhs += w[c] * std::conj(py[c]);
        }
        CHECK(std::abs(lhs - rhs) < 1e-14);
    }
}

TEST_CASE("apply_power") {
    const auto x = random_flat(3, 1);
    CHECK(apply_power(x, 0.0).identical(x));
    const auto s = single_mode(2, {1, 1, 1}, {Complex(1.0), Complex(-1.0), Complex(0.0)});
    const auto p = apply_power(s, 0.5);
    const auto idx = s.lattice().locate({1, 1, 1}).index;
    CHECK(p[idx][0].real() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
    CHECK(apply_power(s, 1.0)[idx][0].real() == doctest::Approx(3.0).epsilon(1e-15));
    const auto ab = apply_power(apply_power(x, 0.3), -0.8);
    const auto direct = apply_power(x, -0.5);
    CHECK(max_abs_diff(ab, direct) < 1e-14 * max_abs(x));
}

TEST_CASE("norms and space tags") {
    SpectralField zero(3);
    CHECK(norm(zero, SpaceTag::H()) == 0.0);
    CHECK(norm(zero, SpaceTag::Walpha(0.7)) == 0.0);

    const auto x = single_mode(2, {1, 0, 0}, {Complex(0.0), Complex(1.0), Complex(0.0)});
    CHECK(norm(x, SpaceTag::H()) == doctest::Approx(std::sqrt(2.0)));
    CHECK(norm(x, SpaceTag::V()) == doctest::Approx(std::sqrt(2.0)));
    CHECK(norm(x, SpaceTag::Veps(0.25)) == doctest::Approx(std::sqrt(2.0)));
    CHECK(SpaceTag::Veps(0.25).theta() == SpaceTag::V().theta());
    CHECK_THROWS(SpaceTag::Veps(0.3));
    CHECK_THROWS(SpaceTag::Veps(0.0));
    CHECK_THROWS(SpaceTag::Walpha(0.0));
    CHECK(SpaceTag::Walpha(0.3).theta() == doctest::Approx(0.65));

    // Inner product and norm agree.
    const auto y = random_flat(3, 7);
    CHECK(inner(y, y) == doctest::Approx(norm2(y, 0.0)).epsilon(1e-14));
}

TEST_CASE("heat regularization L_a") {
    const auto x = random_flat(4, 2);
    CHECK(heat_regularize(x, 0.0).identical(x));
    const auto s = single_mode(3, {3, 0, 0}, {Complex(0.0), Complex(2.0), Complex(0.0)});
    const auto r = heat_regularize(s, 1.0);
    const auto idx = s.lattice().locate({3, 0, 0}).index;
    CHECK(r[idx][1].real() == doctest::Approx(2.0 * std::exp(-3.0)).epsilon(1e-15));
    for (double a : {0.01, 0.1, 1.0, 5.0}) CHECK(norm2(heat_regularize(x, a), 0.0) <= norm2(x, 0.0));
    CHECK_THROWS(heat_regularize(x, -0.1));
}

TEST_CASE("translation m_a") {
    const auto x = random_flat(4, 3);
    CHECK(translate(x, {0.0, 0.0, 0.0}).identical(x));
    CHECK(translate(x, {2.0 * std::numbers::pi, 0.0, 0.0}).identical(x));
    CHECK(max_abs_diff(translate(x, {0.3 + 2.0 * std::numbers::pi, -1.0, 0.0}), translate(x, {0.3, -1.0, 0.0})) <
          1e-13);
    const auto y = translate(x, {0.37, -1.1, 2.9});
    for (double th : {0.0, 0.5, 0.75, -0.5, 1.25}) {
        CHECK(norm2(y, th) == doctest::Approx(norm2(x, th)).epsilon(1e-14));
    }
    // m_a m_b = m_{a+b}
    const auto ab = translate(translate(x, {0.2, 0.0, 0.5}), {0.1, 0.4, 0.0});
    CHECK(max_abs_diff(ab, translate(x, {0.3, 0.4, 0.5})) < 1e-14);
}

TEST_CASE("low/high mode projections") {
    const auto x = random_flat(4, 4);
    CHECK(project_modes(x, 4, ModeSide::low).identical(x));
    CHECK(project_modes(x, 9, ModeSide::low).identical(x));
    CHECK(norm2(project_modes(x, 0, ModeSide::low), 0.0) == 0.0);
    for (int K = 0; K <= 5; ++K) {
        const auto lo = project_modes(x, K, ModeSide::low);
        const auto hi = project_modes(x, K, ModeSide::high);
        CHECK(norm2(lo, 0.0) + norm2(hi, 0.0) == doctest::Approx(norm2(x, 0.0)).epsilon(1e-14));
        CHECK((lo + hi).identical(x));
    }
    CHECK_THROWS(project_modes(x, -1, ModeSide::low));
}

TEST_CASE("random fields satisfy the field invariants") {
    for (int n : {1, 2, 5}) {
        const auto x = random_field(n, 3.0, 11, 0);
        CHECK(validate(x).ok);
        CHECK(norm2(x, 0.0) == doctest::Approx(3.0));
    }
}

TEST_CASE("nonlinearity: single real mode gives zero") {
    const auto u = single_mode(3, {1, 2, 0}, {Complex(2.0, 1.0), Complex(-1.0, -0.5), Complex(0.3, 0.7)});
    REQUIRE(validate(u).ok);
    const auto b = nonlinearity_B(u, u);
    CHECK(max_abs(b) < 1e-14);
}

TEST_CASE("nonlinearity: pseudo-spectral equals the triad oracle at N=4") {
    for (std::uint64_t trial = 0; trial < 4; ++trial) {
        const auto u = random_flat(4, 100 + trial);
        const auto v = random_flat(4, 200 + trial);
        const auto fast = nonlinearity_B(u, v);
        const auto slow = nonlinearity_B_direct(u, v);
        CHECK(max_abs_diff(fast, slow) <= 1e-12 * max_abs(slow));
        const auto fast_uu = nonlinearity_B(u, u);
        const auto slow_uu = nonlinearity_B_direct(u, u);
        CHECK(max_abs_diff(fast_uu, slow_uu) <= 1e-12 * max_abs(slow_uu));
        CHECK(validate(fast, 1e-12).ok);
    }
}

TEST_CASE("nonlinearity: small truncations and odd grids") {
    for (int n : {1, 2, 3}) {
        const auto u = random_flat(n, 300 + n);
        const auto v = random_flat(n, 400 + n);
        CHECK(max_abs_diff(nonlinearity_B(u, v), nonlinearity_B_direct(u, v)) < 1e-12);
    }
    CHECK(dealiased_grid_size(4) >= 13);
    CHECK(dealiased_grid_size(8) >= 25);
}

TEST_CASE("nonlinearity: skew symmetry and translation equivariance") {
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
        const auto u = random_flat(6, 500 + trial);
        const auto v = random_flat(6, 600 + trial);
        const auto w = random_flat(6, 700 + trial);
        const double scale = std::sqrt(norm2(u, 0.0)) * norm2(v, 0.0);
        CHECK(std::abs(inner(nonlinearity_B(u, v), v)) <= 1e-10 * scale);
        const double uvw = inner(nonlinearity_B(u, v), w);
        const double uwv = inner(nonlinearity_B(u, w), v);
        CHECK(std::abs(uvw + uwv) <= 1e-10 * std::max(std::abs(uvw), 1.0));

        const RVec3 a{0.4 + trial, -1.3, 2.2};
        const auto lhs = nonlinearity_B(translate(u, a), translate(v, a));
        const auto rhs = translate(nonlinearity_B(u, v), a);
        CHECK(max_abs_diff(lhs, rhs) <= 1e-10 * max_abs(rhs));
    }
}

TEST_CASE("nonlinearity: mismatched truncations are rejected") {
    CHECK_THROWS(nonlinearity_B(random_flat(3, 1), random_flat(4, 1)));
    CHECK_THROWS(nonlinearity_B_direct(random_flat(3, 1), random_flat(4, 1)));
}

TEST_CASE("nonlinearity: bounded ratio regression") {
    // max over 100 random pairs of |A^(alpha-1/4) B(u,v)| / (|A^theta u| |A^theta v|), recorded values
    struct Case {
        int n;
        double alpha;
        double recorded;
    };
    const Case cases[] = {{4, 0.2, 0.17512324471918253},
                          {4, 0.6, 0.14078134596932448},
                          {8, 0.2, 0.10788153885762539},
                          {8, 0.6, 0.074156261397066547}};
    for (const auto& c : cases) {
        const double th = theta_map(c.alpha);
        double worst = 0.0;
        for (std::uint64_t p = 0; p < 100; ++p) {
            const auto u = random_field(c.n, 1.0, 2024, 2 * p);
            const auto v = random_field(c.n, 1.0, 2024, 2 * p + 1);
            const double r = std::sqrt(norm2(nonlinearity_B(u, v), c.alpha - 0.25) / (norm2(u, th) * norm2(v, th)));
            REQUIRE(std::isfinite(r));
            worst = std::max(worst, r);
        }
        CHECK(worst == doctest::Approx(c.recorded).epsilon(1e-9));
    }
}
