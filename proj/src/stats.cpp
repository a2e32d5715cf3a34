#include "nsmk/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace nsmk {

void Welford::add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / double(n);
    m2 += d * (x - mean);
}

void Welford::merge(const Welford& other) {
    if (other.n == 0) return;
    if (n == 0) {
        *this = other;
        return;
    }
    const double total = double(n + other.n);
    const double d = other.mean - mean;
    mean += d * double(other.n) / total;
    m2 += other.m2 + d * d * double(n) * double(other.n) / total;
    n += other.n;
}

double integrated_autocorrelation_time(std::span<const double> series, double window_c) {
    const std::size_t n = series.size();
    if (n < 4) return 1.0;
    Welford w;
    for (double x : series) w.add(x);
    const double c0 = w.m2 / double(n);
    if (!(c0 > 0.0)) return 1.0;
    double tau = 1.0;
    const std::size_t max_lag = n / 2;
    for (std::size_t lag = 1; lag < max_lag; ++lag) {
        double c = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) c += (series[i] - w.mean) * (series[i + lag] - w.mean);
        c /= double(n);
        tau += 2.0 * c / c0;
        if (double(lag) >= window_c * tau) break;
    }
    return tau < 1.0 ? 1.0 : tau;
}

MeanEstimate estimate_series_mean(std::span<const double> series) {
    MeanEstimate e;
    e.n = series.size();
    if (e.n == 0) return e;
    Welford w;
    for (double x : series) w.add(x);
    e.mean = w.mean;
    const double tau = integrated_autocorrelation_time(series);
    e.n_eff = double(e.n) / tau;
    e.se = e.n > 1 ? std::sqrt(w.variance() / e.n_eff) : 0.0;
    return e;
}

MeanEstimate estimate_iid_mean(std::span<const double> samples) {
    MeanEstimate e;
    e.n = samples.size();
    if (e.n == 0) return e;
    Welford w;
    for (double x : samples) w.add(x);
    e.mean = w.mean;
    e.n_eff = double(e.n);
    e.se = e.n > 1 ? std::sqrt(w.variance() / double(e.n)) : 0.0;
    return e;
}

MeanEstimate combine_independent(std::span<const MeanEstimate> parts) {
    MeanEstimate e;
    if (parts.empty()) return e;
    double var = 0.0;
    for (const auto& p : parts) {
        e.mean += p.mean;
        var += p.se * p.se;
        e.n_eff += p.n_eff;
        e.n += p.n;
    }
    const double m = double(parts.size());
    e.mean /= m;
    e.se = std::sqrt(var) / m;
    return e;
}

MeanEstimate difference_independent(const MeanEstimate& a, const MeanEstimate& b) {
    MeanEstimate e;
    e.mean = a.mean - b.mean;
    e.se = std::sqrt(a.se * a.se + b.se * b.se);
    e.n_eff = std::min(a.n_eff, b.n_eff);
    e.n = std::min(a.n, b.n);
    return e;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("least_squares: size mismatch");
    LinearFit f;
    f.n = x.size();
    if (f.n < 2) return f;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(f.n);
    my /= double(f.n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

double trapezoid(std::span<const double> t, std::span<const double> y) {
    if (t.size() != y.size()) throw std::invalid_argument("trapezoid: size mismatch");
    double s = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> y) {
    if (t.size() != y.size()) throw std::invalid_argument("cumulative_trapezoid: size mismatch");
    std::vector<double> out(t.size(), 0.0);
    for (std::size_t i = 1; i < t.size(); ++i) out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
    return out;
}

}  // namespace nsmk
