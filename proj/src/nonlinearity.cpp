#include "nsmk/nonlinearity.hpp"

#include "nsmk/spectral_ops.hpp"

#include <fftw3.h>
#include <omp.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsmk {

namespace {

bool is_smooth(int m) {
    for (int p : {2, 3, 5, 7}) {
        while (m % p == 0) m /= p;
    }
    return m == 1;
}

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using FftwArray = std::unique_ptr<T[], FftwDeleter>;

template <class T>
FftwArray<T> fftw_array(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (!p) throw std::bad_alloc();
    return FftwArray<T>(p);
}

/// Plans are shared across instances; FFTW planning is not thread-safe.
struct PlanPair {
    fftw_plan c2r = nullptr;
    fftw_plan r2c = nullptr;
};

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

PlanPair plans_for(int grid) {
    static std::map<int, PlanPair> cache;
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto it = cache.find(grid);
    if (it != cache.end()) return it->second;
    const std::size_t nreal = std::size_t(grid) * grid * grid;
    const std::size_t ncplx = std::size_t(grid) * grid * (grid / 2 + 1);
    auto r = fftw_array<double>(nreal);
    auto c = fftw_array<fftw_complex>(ncplx);
    PlanPair p;
    p.c2r = fftw_plan_dft_c2r_3d(grid, grid, grid, c.get(), r.get(), FFTW_ESTIMATE);
    p.r2c = fftw_plan_dft_r2c_3d(grid, grid, grid, r.get(), c.get(), FFTW_ESTIMATE);
    if (!p.c2r || !p.r2c) throw std::runtime_error("FFTW planning failed for grid " + std::to_string(grid));
    cache.emplace(grid, p);
    return p;
}

inline bool outside_parallel() { return omp_in_parallel() == 0; }

}  // namespace

int dealiased_grid_size(int n_modes) {
    int m = 3 * n_modes + 1;
    while (!is_smooth(m)) ++m;
    return m;
}

struct Nonlinearity::Buffers {
    std::size_t nreal = 0;
    std::size_t ncplx = 0;
    PlanPair plans;
    FftwArray<fftw_complex> spec;
    std::array<FftwArray<double>, 3> u;
    std::array<FftwArray<double>, 3> v;
    FftwArray<double> prod;
    // scatter entries: complex-array slot, stored mode, conjugate flag
    std::vector<std::size_t> scatter_slot;
    std::vector<std::size_t> scatter_mode;
    std::vector<char> scatter_conj;
    // gather: slot per stored mode and whether the slot holds conj(x_k)
    std::vector<std::size_t> gather_slot;
    std::vector<char> gather_conj;
    std::vector<CVec3> acc;
};

Nonlinearity::Nonlinearity(int n_modes)
    : n_modes_(n_modes), grid_(dealiased_grid_size(n_modes)), buf_(std::make_unique<Buffers>()) {
    const int m = grid_;
    const int mh = m / 2 + 1;
    buf_->nreal = std::size_t(m) * m * m;
    buf_->ncplx = std::size_t(m) * m * mh;
    buf_->plans = plans_for(m);
    buf_->spec = fftw_array<fftw_complex>(buf_->ncplx);
    for (int c = 0; c < 3; ++c) {
        buf_->u[c] = fftw_array<double>(buf_->nreal);
        buf_->v[c] = fftw_array<double>(buf_->nreal);
    }
    buf_->prod = fftw_array<double>(buf_->nreal);

    auto wrap = [m](int k) { return static_cast<std::size_t>(k < 0 ? k + m : k); };
    auto slot = [&](const WaveVector& k) {
        return (wrap(k.k1) * m + wrap(k.k2)) * mh + static_cast<std::size_t>(k.k3);
    };
    const Lattice& lat = *Lattice::get(n_modes);
    buf_->gather_slot.resize(lat.size());
    buf_->gather_conj.resize(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const WaveVector& k = lat.mode(i);
        auto add = [&](const WaveVector& at, bool conj) {
            buf_->scatter_slot.push_back(slot(at));
            buf_->scatter_mode.push_back(i);
            buf_->scatter_conj.push_back(conj);
        };
        if (k.k3 > 0) {
            add(k, false);
        } else if (k.k3 < 0) {
            add(-k, true);
        } else {
            add(k, false);
            add(-k, true);
        }
        if (k.k3 >= 0) {
            buf_->gather_slot[i] = slot(k);
            buf_->gather_conj[i] = 0;
        } else {
            buf_->gather_slot[i] = slot(-k);
            buf_->gather_conj[i] = 1;
        }
    }
    buf_->acc.resize(lat.size());
}

Nonlinearity::~Nonlinearity() = default;

void Nonlinearity::to_physical(const SpectralField& x, int component, double* dst) {
    fftw_complex* spec = buf_->spec.get();
    std::fill_n(&spec[0][0], 2 * buf_->ncplx, 0.0);
    const std::size_t n = buf_->scatter_slot.size();
    for (std::size_t e = 0; e < n; ++e) {
        const Complex c = x[buf_->scatter_mode[e]][component];
        const std::size_t s = buf_->scatter_slot[e];
        spec[s][0] = c.real();
        spec[s][1] = buf_->scatter_conj[e] ? -c.imag() : c.imag();
    }
    fftw_execute_dft_c2r(buf_->plans.c2r, spec, dst);
}

void Nonlinearity::accumulate_divergence(const double* a, const double* b, int row, int col,
                                         std::vector<CVec3>& acc, bool symmetric_pair) {
    double* prod = buf_->prod.get();
    const auto n = static_cast<std::ptrdiff_t>(buf_->nreal);
#pragma omp parallel for schedule(static) if (outside_parallel() && n > 32768)
    for (std::ptrdiff_t p = 0; p < n; ++p) prod[p] = a[p] * b[p];

    fftw_complex* spec = buf_->spec.get();
    fftw_execute_dft_r2c(buf_->plans.r2c, prod, spec);

    const Lattice& lat = *Lattice::get(n_modes_);
    const double inv = 1.0 / static_cast<double>(buf_->nreal);
    const auto nm = static_cast<std::ptrdiff_t>(lat.size());
#pragma omp parallel for schedule(static) if (outside_parallel() && nm > 4096)
    for (std::ptrdiff_t i = 0; i < nm; ++i) {
        const std::size_t s = buf_->gather_slot[i];
        Complex w(spec[s][0] * inv, buf_->gather_conj[i] ? -spec[s][1] * inv : spec[s][1] * inv);
        const WaveVector& k = lat.mode(i);
        const double kc[3] = {double(k.k1), double(k.k2), double(k.k3)};
        const Complex iw(-w.imag(), w.real());
        acc[i][row] += kc[col] * iw;
        if (symmetric_pair) acc[i][col] += kc[row] * iw;
    }
}

void Nonlinearity::apply(const SpectralField& u, const SpectralField& v, SpectralField& out) {
    if (u.n_modes() != n_modes_ || v.n_modes() != n_modes_) {
        throw std::invalid_argument("nonlinearity: truncation mismatch (workspace N=" +
                                    std::to_string(n_modes_) + ", u N=" + std::to_string(u.n_modes()) +
                                    ", v N=" + std::to_string(v.n_modes()) + ")");
    }
    auto& acc = buf_->acc;
    std::fill(acc.begin(), acc.end(), CVec3{});
    const bool same = (&u == &v) || u.identical(v);
    for (int c = 0; c < 3; ++c) to_physical(u, c, buf_->u[c].get());
    if (same) {
        for (int i = 0; i < 3; ++i) {
            for (int j = i; j < 3; ++j) {
                accumulate_divergence(buf_->u[j].get(), buf_->u[i].get(), i, j, acc, i != j);
            }
        }
    } else {
        for (int c = 0; c < 3; ++c) to_physical(v, c, buf_->v[c].get());
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                accumulate_divergence(buf_->u[j].get(), buf_->v[i].get(), i, j, acc, false);
            }
        }
    }
    if (out.n_modes() != n_modes_) out = SpectralField(Lattice::get(n_modes_));
    const Lattice& lat = out.lattice();
    for (std::size_t i = 0; i < lat.size(); ++i) out[i] = leray_project(lat.mode(i), acc[i]);
}

SpectralField Nonlinearity::apply(const SpectralField& u, const SpectralField& v) {
    SpectralField out(Lattice::get(n_modes_));
    apply(u, v, out);
    return out;
}

SpectralField nonlinearity_B(const SpectralField& u, const SpectralField& v) {
    if (u.n_modes() != v.n_modes()) {
        throw std::invalid_argument("nonlinearity: truncation mismatch (" + std::to_string(u.n_modes()) +
                                    " vs " + std::to_string(v.n_modes()) + ")");
    }
    thread_local std::map<int, std::unique_ptr<Nonlinearity>> workspaces;
    auto& ws = workspaces[u.n_modes()];
    if (!ws) ws = std::make_unique<Nonlinearity>(u.n_modes());
    return ws->apply(u, v);
}

SpectralField nonlinearity_B_direct(const SpectralField& u, const SpectralField& v) {
    if (u.n_modes() != v.n_modes()) {
        throw std::invalid_argument("nonlinearity: truncation mismatch (" + std::to_string(u.n_modes()) +
                                    " vs " + std::to_string(v.n_modes()) + ")");
    }
    const Lattice& lat = u.lattice();
    const int n = lat.n_modes();
    SpectralField out(u.lattice_ptr());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const WaveVector& k = lat.mode(i);
        CVec3 sum{};
        for (int a = -n; a <= n; ++a) {
            for (int b = -n; b <= n; ++b) {
                for (int c = -n; c <= n; ++c) {
                    const WaveVector l{a, b, c};
                    const WaveVector m{k.k1 - a, k.k2 - b, k.k3 - c};
                    if (l.is_zero() || m.is_zero() || m.max_norm() > n) continue;
                    const CVec3 ul = u.at(l);
                    const CVec3 vm = v.at(m);
                    const Complex um = ul[0] * double(m.k1) + ul[1] * double(m.k2) + ul[2] * double(m.k3);
                    const Complex coef = Complex(0.0, 1.0) * um;
                    for (int d = 0; d < 3; ++d) sum[d] += coef * vm[d];
                }
            }
        }
        out[i] = leray_project(k, sum);
    }
    return out;
}

}  // namespace nsmk
