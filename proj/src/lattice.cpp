#include "nsmk/lattice.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

namespace nsmk {

std::shared_ptr<const Lattice> Lattice::get(int n_modes) {
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const Lattice>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n_modes);
    if (it != cache.end()) return it->second;
    auto lattice = std::make_shared<const Lattice>(n_modes);
    cache.emplace(n_modes, lattice);
    return lattice;
}

Lattice::Lattice(int n_modes) : n_modes_(n_modes) {
    if (n_modes < 1) {
        throw std::invalid_argument("lattice truncation must be >= 1, got " +
                                    std::to_string(n_modes));
    }
    const int side = 2 * n_modes + 1;
    cube_to_mode_.assign(static_cast<std::size_t>(side) * side * side, 0);
    for (int a = 0; a <= n_modes; ++a) {
        for (int b = -n_modes; b <= n_modes; ++b) {
            for (int c = -n_modes; c <= n_modes; ++c) {
                WaveVector k{a, b, c};
                if (!k.canonical()) continue;
                const auto idx = static_cast<std::int64_t>(modes_.size());
                modes_.push_back(k);
                k2_.push_back(static_cast<double>(k.norm2()));
                kabs_.push_back(std::sqrt(static_cast<double>(k.norm2())));
                cube_to_mode_[cube_index(k)] = idx + 1;
                cube_to_mode_[cube_index(-k)] = -(idx + 1);
            }
        }
    }
}

std::size_t Lattice::cube_index(const WaveVector& k) const {
    const std::size_t side = 2 * static_cast<std::size_t>(n_modes_) + 1;
    return (static_cast<std::size_t>(k.k1 + n_modes_) * side +
            static_cast<std::size_t>(k.k2 + n_modes_)) * side +
           static_cast<std::size_t>(k.k3 + n_modes_);
}

ModeRef Lattice::locate(const WaveVector& k) const {
    if (!contains(k)) {
        throw std::out_of_range("wave vector outside the truncated lattice");
    }
    const std::int64_t code = cube_to_mode_[cube_index(k)];
    if (code > 0) return {static_cast<std::size_t>(code - 1), false};
    return {static_cast<std::size_t>(-code - 1), true};
}

}  // namespace nsmk
