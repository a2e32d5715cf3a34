#include "nsmk/noise.hpp"

#include "nsmk/philox.hpp"
#include "nsmk/spectral_ops.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nsmk {

double CovarianceSpec::mode_variance(const WaveVector& k) const {
    if (k.is_zero()) throw std::invalid_argument("mode_variance undefined at k = 0");
    return mode_variance_k2(static_cast<double>(k.norm2()));
}

double CovarianceSpec::mode_variance_k2(double k2) const {
    if (q == 0.0) return sigma0 * sigma0;
    return sigma0 * sigma0 * std::pow(k2, -q);
}

double CovarianceSpec::trace() const { return trace_low(n_modes); }

double CovarianceSpec::trace_low(int cutoff) const {
    const Lattice& lat = *Lattice::get(n_modes);
    double sum = 0.0;
    for (std::size_t i = 0; i < lat.size(); ++i) {
        if (lat.mode(i).max_norm() <= cutoff) sum += mode_variance_k2(lat.k2(i));
    }
    return 2.0 * 2.0 * sum;
}

double CovarianceSpec::trace_regularized(double a) const {
    if (!(a >= 0.0)) throw std::invalid_argument("trace_regularized requires a >= 0");
    if (a == 0.0) return trace();
    const Lattice& lat = *Lattice::get(n_modes);
    double sum = 0.0;
    for (std::size_t i = 0; i < lat.size(); ++i) {
        sum += mode_variance_k2(lat.k2(i)) * std::exp(-2.0 * a * lat.kabs(i));
    }
    return 4.0 * sum;
}

CovarianceSpec CovarianceSpec::normalized_to_trace(double target) const {
    CovarianceSpec out = *this;
    out.sigma0 = 1.0;
    const double t = out.trace();
    out.sigma0 = std::sqrt(target / t);
    return out;
}

void CovarianceSpec::validate() const {
    if (!(sigma0 >= 0.0) || !std::isfinite(sigma0)) {
        throw std::invalid_argument("sigma0 must be finite and >= 0");
    }
    if (!(q >= 0.0)) throw std::invalid_argument("q_exponent must be >= 0");
    if (!(alpha0 > 0.0)) throw std::invalid_argument("alpha0 must be > 0");
    if (n_modes < 1) throw std::invalid_argument("noise truncation must be >= 1");
}

AssumptionReport check_assumptions(const CovarianceSpec& spec) {
    constexpr double tol = 1e-12;
    AssumptionReport r;
    r.alpha0 = spec.alpha0;
    r.implied_alpha0 = 0.5 * (spec.q - 1.5);
    const double bound_exp = 1.5 + 2.0 * spec.alpha0;
    r.a1 = 2.0 * spec.q > 3.0;
    r.a2 = r.a1 && spec.alpha0 > 0.0 && spec.q >= bound_exp - tol;
    r.a3 = r.a2 && spec.alpha0 > 1.0 / 6.0;
    r.a4 = r.a3 && std::abs(spec.q - bound_exp) <= tol;
    r.literal_exponent_flag = spec.alpha0 > 0.0 && std::abs(spec.q - (1.5 + spec.alpha0)) <= tol;

    // |k|^{2(3/4+alpha0)} sigma0 |k|^{-q} over distinct shells |k|^2 <= 3N^2.
    const double expo = 2.0 * (0.75 + spec.alpha0) - spec.q;
    double sup = 0.0;
    double inf = std::numeric_limits<double>::infinity();
    const int max_k2 = 3 * spec.n_modes * spec.n_modes;
    for (int k2 = 1; k2 <= max_k2; ++k2) {
        const double v = spec.sigma0 * std::pow(std::sqrt(double(k2)), expo);
        sup = std::max(sup, v);
        inf = std::min(inf, v);
    }
    r.sup_operator_proxy = sup;
    r.inf_operator_proxy = inf;
    return r;
}

std::string AssumptionReport::table() const {
    std::ostringstream os;
    auto yn = [](bool b) { return b ? "yes" : "no"; };
    os << "condition  holds  meaning\n";
    os << "A1         " << yn(a1) << (a1 ? "    " : "     ") << "Q trace class (2q > 3)\n";
    os << "A2         " << yn(a2) << (a2 ? "    " : "     ") << "A^{3/4+alpha0} Q^{1/2} bounded, alpha0 > 0\n";
    os << "A3         " << yn(a3) << (a3 ? "    " : "     ") << "as A2 with alpha0 > 1/6\n";
    os << "A4         " << yn(a4) << (a4 ? "    " : "     ") << "as A3 with bounded inverse\n";
    os << "alpha0               " << alpha0 << "\n";
    os << "implied max alpha0   " << implied_alpha0 << "\n";
    os << "operator proxy sup   " << sup_operator_proxy << "\n";
    os << "operator proxy inf   " << inf_operator_proxy << "\n";
    if (literal_exponent_flag) {
        os << "warning: q = 3/2 + alpha0 gives A^{3/4+alpha0} Q^{1/2} = sigma0 A^{alpha0/2}, "
              "which is unbounded; use q = 3/2 + 2 alpha0 for A4\n";
    }
    return os.str();
}

SpectralField sample_increment(const CovarianceSpec& spec, double dt, std::uint64_t key,
                               std::uint64_t step) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_increment requires dt > 0");
    SpectralField out(spec.n_modes);
    const Lattice& lat = out.lattice();
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const auto basis = solenoidal_basis(lat.mode(i));
        // Each complex plane coordinate has E|c|^2 = q_k dt.
        const double amp = std::sqrt(0.5 * spec.mode_variance_k2(lat.k2(i)) * dt);
        const auto z1 = keyed_normal_pair(key, step, static_cast<std::uint32_t>(i), 0);
        const auto z2 = keyed_normal_pair(key, step, static_cast<std::uint32_t>(i), 1);
        const Complex c1(amp * z1[0], amp * z1[1]);
        const Complex c2(amp * z2[0], amp * z2[1]);
        for (int c = 0; c < 3; ++c) out[i][c] = c1 * basis[0][c] + c2 * basis[1][c];
    }
    return out;
}

}  // namespace nsmk
