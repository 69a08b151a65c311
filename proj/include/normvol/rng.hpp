#pragma once

// Philox4x32-10 counter-based generator. Every draw is addressed by
// (seed, stream, block), so per-path streams are reproducible no matter
// how paths are scheduled across workers. One block yields two doubles
// in (0,1) or two standard normals via the inverse CDF.

#include <array>
#include <cstdint>

#include "normvol/math.hpp"

namespace normvol {

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::uint32_t k0,
                         std::uint32_t k1) {
    constexpr std::uint64_t kMul0 = 0xD2511F53u;
    constexpr std::uint64_t kMul1 = 0xCD9E8D57u;
    const std::uint64_t p0 = kMul0 * ctr[0];
    const std::uint64_t p1 = kMul1 * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0,
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1,
           static_cast<std::uint32_t>(p0)};
}

}  // namespace detail

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::uint64_t key) {
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        detail::philox_round(ctr, k0, k1);
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return ctr;
}

struct UniformPair {
    double first;
    double second;
};

// Two uniforms in the open interval (0,1) from block `block` of stream
// `stream` under seed `seed`.
inline UniformPair uniform_pair(std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t block) {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
        static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
    const auto out = philox4x32(ctr, seed);
    const std::uint64_t hi =
        (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    const std::uint64_t lo =
        (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    return {(static_cast<double>(hi >> 11) + 0.5) * kScale,
            (static_cast<double>(lo >> 11) + 0.5) * kScale};
}

struct NormalPair {
    double first;
    double second;
};

inline NormalPair normal_pair(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t block) {
    const UniformPair u = uniform_pair(seed, stream, block);
    return {norm_inv_cdf(u.first), norm_inv_cdf(u.second)};
}

}  // namespace normvol
