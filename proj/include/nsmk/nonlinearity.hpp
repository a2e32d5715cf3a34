#pragma once

#include "nsmk/field.hpp"

#include <memory>

namespace nsmk {

/// Smallest 7-smooth grid size M >= 3N + 1. Products of two fields with
/// |k|_inf <= N then alias only onto modes outside the retained cube.
int dealiased_grid_size(int n_modes);

/// Pseudo-spectral B(u, v)_k = P_k sum_{l+m=k} i (u_l . m) v_m.
///
/// Evaluated in divergence form i k . (u (x) v)_k on a dealiased physical grid,
/// so the result equals the exact truncated triad sum on every retained mode.
/// One instance owns its FFT work arrays and must not be shared between
/// threads; the pointwise kernels are OpenMP-parallel when called outside a
/// parallel region. Results do not depend on the thread count.
class Nonlinearity {
public:
    explicit Nonlinearity(int n_modes);
    ~Nonlinearity();
    Nonlinearity(const Nonlinearity&) = delete;
    Nonlinearity& operator=(const Nonlinearity&) = delete;

    int n_modes() const { return n_modes_; }
    int grid_size() const { return grid_; }

    SpectralField apply(const SpectralField& u, const SpectralField& v);
    void apply(const SpectralField& u, const SpectralField& v, SpectralField& out);

private:
    struct Buffers;

    void to_physical(const SpectralField& x, int component, double* dst);
    void accumulate_divergence(const double* a, const double* b, int row, int col,
                               std::vector<CVec3>& acc, bool symmetric_pair);

    int n_modes_;
    int grid_;
    std::unique_ptr<Buffers> buf_;
};

/// B(u, v) using a per-thread cached workspace.
SpectralField nonlinearity_B(const SpectralField& u, const SpectralField& v);

/// Brute-force triad convolution; serial reference implementation of B.
SpectralField nonlinearity_B_direct(const SpectralField& u, const SpectralField& v);

}  // namespace nsmk
