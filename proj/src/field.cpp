#include "nsmk/field.hpp"

#include "nsmk/spectral_ops.hpp"

#include <stdexcept>
#include <string>

namespace nsmk {

SpectralField::SpectralField(int n_modes) : SpectralField(Lattice::get(n_modes)) {}

SpectralField::SpectralField(std::shared_ptr<const Lattice> lattice)
    : lattice_(std::move(lattice)) {
    if (!lattice_) throw std::invalid_argument("null lattice");
    coeffs_.assign(lattice_->size(), CVec3{});
}

SpectralField::SpectralField(std::shared_ptr<const Lattice> lattice, std::vector<CVec3> coeffs)
    : lattice_(std::move(lattice)), coeffs_(std::move(coeffs)) {
    if (!lattice_) throw std::invalid_argument("null lattice");
    if (coeffs_.size() != lattice_->size()) {
        throw std::invalid_argument("coefficient count " + std::to_string(coeffs_.size()) +
                                    " does not match lattice size " +
                                    std::to_string(lattice_->size()));
    }
}

CVec3 SpectralField::at(const WaveVector& k) const {
    if (k.is_zero()) return CVec3{};
    const ModeRef ref = lattice_->locate(k);
    CVec3 v = coeffs_[ref.index];
    if (ref.conjugate) {
        for (auto& c : v) c = std::conj(c);
    }
    return v;
}

void SpectralField::require_same_lattice(const SpectralField& other) const {
    if (n_modes() != other.n_modes()) {
        throw std::invalid_argument("fields have different truncations (" +
                                    std::to_string(n_modes()) + " vs " +
                                    std::to_string(other.n_modes()) + ")");
    }
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
    require_same_lattice(other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        for (int c = 0; c < 3; ++c) coeffs_[i][c] += other.coeffs_[i][c];
    }
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
    require_same_lattice(other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        for (int c = 0; c < 3; ++c) coeffs_[i][c] -= other.coeffs_[i][c];
    }
    return *this;
}

SpectralField& SpectralField::operator*=(double s) {
    for (auto& v : coeffs_) {
        for (auto& c : v) c *= s;
    }
    return *this;
}

bool SpectralField::identical(const SpectralField& other) const {
    if (n_modes() != other.n_modes()) return false;
    return coeffs_ == other.coeffs_;
}

SpaceTag SpaceTag::Veps(double eps) {
    if (!(eps > 0.0 && eps <= 0.25)) {
        throw std::invalid_argument("V_eps requires eps in (0, 1/4], got " + std::to_string(eps));
    }
    return {Kind::Veps, eps};
}

SpaceTag SpaceTag::Walpha(double alpha) {
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("W_alpha requires alpha > 0, got " + std::to_string(alpha));
    }
    return {Kind::Walpha, alpha};
}

double SpaceTag::theta() const {
    switch (kind_) {
    case Kind::H: return 0.0;
    case Kind::V: return 0.5;
    case Kind::Veps: return 0.25 + param_;
    case Kind::Walpha: return theta_map(param_);
    case Kind::Power: return param_;
    }
    return 0.0;
}

}  // namespace nsmk
