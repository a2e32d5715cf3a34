#include "nsmk/spectral_ops.hpp"

#include "nsmk/philox.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nsmk {

namespace {

double dot(const RVec3& a, const WaveVector& k) { return a[0] * k.k1 + a[1] * k.k2 + a[2] * k.k3; }

double squared(const CVec3& v) { return std::norm(v[0]) + std::norm(v[1]) + std::norm(v[2]); }

}  // namespace

double theta_map(double alpha) {
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("theta_map requires alpha > 0, got " + std::to_string(alpha));
    }
    return alpha < 0.5 ? 0.5 * (alpha + 1.0) : alpha + 0.25;
}

std::array<RVec3, 2> solenoidal_basis(const WaveVector& k) {
    if (k.is_zero()) throw std::invalid_argument("solenoidal basis undefined at k = 0");
    const RVec3 kk{double(k.k1), double(k.k2), double(k.k3)};
    // Cross with the axis of smallest |k_i| to stay away from degeneracy.
    int axis = 0;
    for (int i = 1; i < 3; ++i) {
        if (std::abs(kk[i]) < std::abs(kk[axis])) axis = i;
    }
    RVec3 a{0.0, 0.0, 0.0};
    a[axis] = 1.0;
    auto cross = [](const RVec3& u, const RVec3& v) {
        return RVec3{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
    };
    RVec3 e1 = cross(kk, a);
    RVec3 e2 = cross(kk, e1);
    auto normalize = [](RVec3& v) {
        const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        for (auto& c : v) c /= n;
    };
    normalize(e1);
    normalize(e2);
    return {e1, e2};
}

CVec3 leray_project(const WaveVector& k, const CVec3& w) {
    if (k.is_zero()) throw std::invalid_argument("Leray projection undefined at k = 0");
    const Complex kw = w[0] * double(k.k1) + w[1] * double(k.k2) + w[2] * double(k.k3);
    const Complex s = kw / double(k.norm2());
    return {w[0] - s * double(k.k1), w[1] - s * double(k.k2), w[2] - s * double(k.k3)};
}

SpectralField apply_power(const SpectralField& x, double theta) {
    SpectralField out = x;
    if (theta == 0.0) return out;
    const Lattice& lat = x.lattice();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double s = std::pow(lat.k2(i), theta);
        for (auto& c : out[i]) c *= s;
    }
    return out;
}

double norm2(const SpectralField& x, double theta) {
    const Lattice& lat = x.lattice();
    double sum = 0.0;
    if (theta == 0.0) {
        for (std::size_t i = 0; i < x.size(); ++i) sum += squared(x[i]);
    } else if (theta == 0.5) {
        for (std::size_t i = 0; i < x.size(); ++i) sum += lat.k2(i) * squared(x[i]);
    } else {
        for (std::size_t i = 0; i < x.size(); ++i) sum += std::pow(lat.k2(i), 2.0 * theta) * squared(x[i]);
    }
    return 2.0 * sum;
}

double norm2(const SpectralField& x, const SpaceTag& tag) { return norm2(x, tag.theta()); }

double norm(const SpectralField& x, const SpaceTag& tag) { return std::sqrt(norm2(x, tag)); }

double inner(const SpectralField& x, const SpectralField& y) {
    if (x.n_modes() != y.n_modes()) throw std::invalid_argument("inner: truncation mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            sum += x[i][c].real() * y[i][c].real() + x[i][c].imag() * y[i][c].imag();
        }
    }
    return 2.0 * sum;
}

SpectralField heat_regularize(const SpectralField& x, double a) {
    if (!(a >= 0.0)) throw std::invalid_argument("heat_regularize requires a >= 0");
    SpectralField out = x;
    if (a == 0.0) return out;
    const Lattice& lat = x.lattice();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double s = std::exp(-a * lat.kabs(i));
        for (auto& c : out[i]) c *= s;
    }
    return out;
}

SpectralField translate(const SpectralField& x, const RVec3& shift) {
    SpectralField out = x;
    if (shift[0] == 0.0 && shift[1] == 0.0 && shift[2] == 0.0) return out;
    const Lattice& lat = x.lattice();
    constexpr double two_pi = 2.0 * 3.14159265358979323846;
    // Reduce each shift component mod 2pi so that m_{a + 2pi k} == m_a exactly.
    RVec3 a = shift;
    for (auto& c : a) {
        c = std::fmod(c, two_pi);
        if (c < 0.0) c += two_pi;
        if (c >= two_pi) c -= two_pi;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double phase = dot(a, lat.mode(i));
        const Complex rot = std::polar(1.0, phase);
        for (auto& c : out[i]) c *= rot;
    }
    return out;
}

SpectralField project_modes(const SpectralField& x, int cutoff, ModeSide side) {
    if (cutoff < 0) throw std::invalid_argument("project_modes requires K >= 0");
    SpectralField out = x;
    const Lattice& lat = x.lattice();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const bool low = lat.mode(i).max_norm() <= cutoff;
        if (low != (side == ModeSide::low)) out[i] = CVec3{};
    }
    return out;
}

FieldCheck validate(const SpectralField& x, double tol) {
    FieldCheck check;
    const Lattice& lat = x.lattice();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& v = x[i];
        for (const auto& c : v) {
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) check.finite = false;
        }
        const WaveVector& k = lat.mode(i);
        const Complex kv = v[0] * double(k.k1) + v[1] * double(k.k2) + v[2] * double(k.k3);
        const double scale = lat.kabs(i) * std::sqrt(squared(v));
        if (scale > 0.0) check.max_divergence = std::max(check.max_divergence, std::abs(kv) / scale);
    }
    check.ok = check.finite && check.max_divergence <= tol;
    return check;
}

SpectralField random_field(int n_modes, double energy, std::uint64_t key, std::uint64_t stream,
                           double decay) {
    SpectralField out(n_modes);
    const Lattice& lat = out.lattice();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto basis = solenoidal_basis(lat.mode(i));
        const double amp = std::pow(lat.k2(i), -0.5 * decay);
        const auto z1 = keyed_normal_pair(key, stream, static_cast<std::uint32_t>(i), 0, DrawDomain::initial);
        const auto z2 = keyed_normal_pair(key, stream, static_cast<std::uint32_t>(i), 1, DrawDomain::initial);
        const Complex c1(z1[0], z1[1]);
        const Complex c2(z2[0], z2[1]);
        for (int c = 0; c < 3; ++c) out[i][c] = amp * (c1 * basis[0][c] + c2 * basis[1][c]);
    }
    const double e = norm2(out, 0.0);
    if (e > 0.0) out *= std::sqrt(energy / e);
    return out;
}

}  // namespace nsmk
