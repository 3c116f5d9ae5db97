// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/rng.hpp"

#include <cmath>
#include <numbers>

namespace ddrm {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::uint64_t join(std::uint32_t lo, std::uint32_t hi) {
    return static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
}

// 53 random bits mapped into [0, 1).
inline double unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

std::array<std::uint32_t, 4> NoiseStream::block(NoiseDomain domain, std::uint64_t step,
                                                std::uint64_t pair) const {
    // The step occupies one counter word; chains never approach 2^32 levels.
    return philox4x32({static_cast<std::uint32_t>(pair), static_cast<std::uint32_t>(pair >> 32),
                       static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(domain)},
                      {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
}

double NoiseStream::normal(NoiseDomain domain, std::uint64_t step, std::uint64_t index) const {
    const auto r = block(domain, step, index / 2);
    // Box-Muller on one block: u1 in (0, 1], u2 in [0, 1).
    const double u1 = 1.0 - unit(join(r[0], r[1]));
    const double u2 = unit(join(r[2], r[3]));
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return (index % 2 == 0) ? radius * std::cos(angle) : radius * std::sin(angle);
}

Vector NoiseStream::normals(NoiseDomain domain, std::uint64_t step, Index n) const {
    Vector out(n);
    for (Index i = 0; i < n; i += 2) {
        const auto r = block(domain, step, static_cast<std::uint64_t>(i / 2));
        const double u1 = 1.0 - unit(join(r[0], r[1]));
        const double u2 = unit(join(r[2], r[3]));
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        out[i] = radius * std::cos(angle);
        if (i + 1 < n) out[i + 1] = radius * std::sin(angle);
    }
    return out;
}

std::uint64_t NoiseStream::bits(NoiseDomain domain, std::uint64_t step, std::uint64_t index) const {
    const auto r = block(domain, step, index / 2);
    return (index % 2 == 0) ? join(r[0], r[1]) : join(r[2], r[3]);
}

double NoiseStream::uniform(NoiseDomain domain, std::uint64_t step, std::uint64_t index) const {
    return unit(bits(domain, step, index));
}

}  // namespace ddrm
