#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

namespace nsmk {

/// Integer wave vector on the truncated lattice of T^3 = [0, 2pi]^3.
struct WaveVector {
    int k1 = 0;
    int k2 = 0;
    int k3 = 0;

    constexpr int norm2() const { return k1 * k1 + k2 * k2 + k3 * k3; }
    constexpr int max_norm() const {
        int a = k1 < 0 ? -k1 : k1;
        int b = k2 < 0 ? -k2 : k2;
        int c = k3 < 0 ? -k3 : k3;
        return a > b ? (a > c ? a : c) : (b > c ? b : c);
    }
    constexpr bool is_zero() const { return k1 == 0 && k2 == 0 && k3 == 0; }
    constexpr WaveVector operator-() const { return {-k1, -k2, -k3}; }
    constexpr bool operator==(const WaveVector&) const = default;

    /// True if the first nonzero component is positive (canonical half-lattice).
    constexpr bool canonical() const {
        if (k1 != 0) return k1 > 0;
        if (k2 != 0) return k2 > 0;
        return k3 > 0;
    }
};

/// Location of a full-lattice wave vector in half-lattice storage.
struct ModeRef {
    std::size_t index = 0;
    bool conjugate = false;
};

/// Canonical half-lattice of wave vectors with 0 < |k|_inf <= N.
///
/// Storage order is lexicographic on (k1, k2, k3) restricted to vectors whose
/// first nonzero component is positive. Instances are shared and immutable;
/// obtain them through Lattice::get.
class Lattice {
public:
    static std::shared_ptr<const Lattice> get(int n_modes);

    explicit Lattice(int n_modes);

    int n_modes() const { return n_modes_; }
    std::size_t size() const { return modes_.size(); }
    const WaveVector& mode(std::size_t i) const { return modes_[i]; }
    const std::vector<WaveVector>& modes() const { return modes_; }

    /// |k|^2 of stored mode i.
    double k2(std::size_t i) const { return k2_[i]; }
    /// |k| of stored mode i.
    double kabs(std::size_t i) const { return kabs_[i]; }

    /// Storage reference for any nonzero k with |k|_inf <= N.
    ModeRef locate(const WaveVector& k) const;
    bool contains(const WaveVector& k) const {
        return !k.is_zero() && k.max_norm() <= n_modes_;
    }

    /// Number of full-lattice points with 0 < |k|_inf <= N.
    std::size_t full_size() const { return 2 * modes_.size(); }

private:
    std::size_t cube_index(const WaveVector& k) const;

    int n_modes_;
    std::vector<WaveVector> modes_;
    std::vector<double> k2_;
    std::vector<double> kabs_;
    std::vector<std::int64_t> cube_to_mode_;
};

}  // namespace nsmk
