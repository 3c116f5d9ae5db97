// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ddrm/common.hpp"

#include <array>
#include <cstdint>

namespace ddrm {

/// Philox4x32-10 block function (Salmon et al. 2011).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Separates independent uses of one seed.
enum class NoiseDomain : std::uint32_t {
    chain = 0,        ///< sampler transitions, indexed by chain position
    measurement = 1,  ///< additive measurement noise
    selection = 2,    ///< random masks and shuffles
    prior = 3,        ///< synthetic test images
};

/*
 * Counter-based standard-normal source. The draw for (domain, step, index) is
 * a pure function of the seed, so results do not depend on the order in which
 * values are requested or on how work is split across threads.
 */
class NoiseStream {
public:
    explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    double normal(NoiseDomain domain, std::uint64_t step, std::uint64_t index) const;

    /// normal(domain, step, i) for i = 0 .. n-1.
    Vector normals(NoiseDomain domain, std::uint64_t step, Index n) const;

    /// Uniform in [0, 1).
    double uniform(NoiseDomain domain, std::uint64_t step, std::uint64_t index) const;

    std::uint64_t bits(NoiseDomain domain, std::uint64_t step, std::uint64_t index) const;

    /// A stream for sample k of a batch: seed xor k.
    NoiseStream derive(std::uint64_t k) const { return NoiseStream(seed_ ^ k); }

private:
    std::array<std::uint32_t, 4> block(NoiseDomain domain, std::uint64_t step,
                                       std::uint64_t pair) const;

    std::uint64_t seed_;
};

}  // namespace ddrm
