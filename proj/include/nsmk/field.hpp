#pragma once

#include "nsmk/lattice.hpp"

#include <array>
#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace nsmk {

using Complex = std::complex<double>;
using CVec3 = std::array<Complex, 3>;
using RVec3 = std::array<double, 3>;

/// Divergence-free, mean-zero, real periodic vector field stored by its
/// Fourier coefficients on the canonical half-lattice |k|_inf <= N.
///
/// The coefficient at -k is conj(x_k) and x_0 = 0; neither is stored.
/// Incompressibility (k . x_k = 0) is maintained by every operation in the
/// library and can be checked with validate().
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(int n_modes);
    explicit SpectralField(std::shared_ptr<const Lattice> lattice);
    SpectralField(std::shared_ptr<const Lattice> lattice, std::vector<CVec3> coeffs);

    bool empty() const { return !lattice_; }
    int n_modes() const { return lattice_ ? lattice_->n_modes() : 0; }
    const Lattice& lattice() const { return *lattice_; }
    const std::shared_ptr<const Lattice>& lattice_ptr() const { return lattice_; }
    std::size_t size() const { return coeffs_.size(); }

    const CVec3& operator[](std::size_t i) const { return coeffs_[i]; }
    CVec3& operator[](std::size_t i) { return coeffs_[i]; }
    std::span<const CVec3> coeffs() const { return coeffs_; }
    std::span<CVec3> coeffs() { return coeffs_; }

    /// Coefficient at any lattice point, including the implied -k half and k = 0.
    CVec3 at(const WaveVector& k) const;

    SpectralField& operator+=(const SpectralField& other);
    SpectralField& operator-=(const SpectralField& other);
    SpectralField& operator*=(double s);

    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

    /// Exact equality of all stored coefficients (signed zeros compare equal).
    bool identical(const SpectralField& other) const;

private:
    void require_same_lattice(const SpectralField& other) const;

    std::shared_ptr<const Lattice> lattice_;
    std::vector<CVec3> coeffs_;
};

/// Selects the norm |A^theta x|_H.
class SpaceTag {
public:
    enum class Kind { H, V, Veps, Walpha, Power };

    static SpaceTag H() { return {Kind::H, 0.0}; }
    static SpaceTag V() { return {Kind::V, 0.0}; }
    /// V_eps = D(A^{1/4 + eps}), eps in (0, 1/4].
    static SpaceTag Veps(double eps);
    /// W_alpha = D(A^{theta(alpha)}), alpha > 0.
    static SpaceTag Walpha(double alpha);
    static SpaceTag Power(double theta) { return {Kind::Power, theta}; }

    Kind kind() const { return kind_; }
    double parameter() const { return param_; }
    /// Exponent theta such that the norm is |A^theta x|_H.
    double theta() const;

private:
    SpaceTag(Kind kind, double param) : kind_(kind), param_(param) {}
    Kind kind_;
    double param_;
};

}  // namespace nsmk
