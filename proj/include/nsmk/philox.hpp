#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace nsmk {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// Stateless: every output block is a pure function of (key, counter).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter generate(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }
};

/// SplitMix64 finalizer; used to derive per-trajectory keys from (base, index).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t trajectory_key(std::uint64_t base_seed, std::uint64_t traj) {
    return mix64(mix64(base_seed) ^ mix64(traj + 0x632BE59BD9B4E019ull));
}

/// Draw domains keep initial-condition sampling and noise increments disjoint.
enum class DrawDomain : std::uint32_t { noise = 0, initial = 1, test = 2 };

/// Two independent standard normals addressed by (key, step, mode, draw).
inline std::array<double, 2> keyed_normal_pair(std::uint64_t key, std::uint64_t step,
                                               std::uint32_t mode, std::uint32_t draw,
                                               DrawDomain domain = DrawDomain::noise) {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step),
                                  static_cast<std::uint32_t>(step >> 32), mode,
                                  (static_cast<std::uint32_t>(domain) << 24) | draw};
    const Philox4x32::Key k{static_cast<std::uint32_t>(key),
                            static_cast<std::uint32_t>(key >> 32)};
    const auto out = Philox4x32::generate(ctr, k);
    constexpr double scale = 0x1.0p-53;
    const std::uint64_t a = ((static_cast<std::uint64_t>(out[0]) << 32) | out[1]) >> 11;
    const std::uint64_t b = ((static_cast<std::uint64_t>(out[2]) << 32) | out[3]) >> 11;
    const double u1 = (static_cast<double>(a) + 0.5) * scale;
    const double u2 = (static_cast<double>(b) + 0.5) * scale;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace nsmk
