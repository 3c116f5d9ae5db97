// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/oracle/oracle.hpp"
#include "ddrm/rng.hpp"

#include "doctest.h"

#include <cmath>
#include <set>

using namespace ddrm;

TEST_CASE("philox4x32-10 known answers") {
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) ==
          A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                     A2{0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                     A2{0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("draws are pure functions of (seed, domain, step, index)") {
    const NoiseStream a(42), b(42), c(43);
    const Vector block = a.normals(NoiseDomain::chain, 7, 101);
    for (Index i = 0; i < 101; ++i)
        CHECK(block[i] == b.normal(NoiseDomain::chain, 7, static_cast<std::uint64_t>(i)));
    // Order of requests does not matter.
    CHECK(a.normal(NoiseDomain::chain, 7, 100) == block[100]);
    CHECK(block != c.normals(NoiseDomain::chain, 7, 101));
    CHECK(block != a.normals(NoiseDomain::chain, 8, 101));
    CHECK(block != a.normals(NoiseDomain::measurement, 7, 101));
    CHECK(a.derive(3).seed() == (42u ^ 3u));
    CHECK(a.derive(0).normals(NoiseDomain::chain, 7, 101) == block);
}

TEST_CASE("uniform and bits") {
    const NoiseStream rng(9);
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const double u = rng.uniform(NoiseDomain::selection, 0, i);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        seen.insert(rng.bits(NoiseDomain::selection, 0, i));
    }
    CHECK(seen.size() == 2000);
}

TEST_CASE("normal moments") {
    const NoiseStream rng(2024);
    oracle::MomentAccumulator acc(1);
    double skew = 0.0, kurt = 0.0;
    constexpr int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal(NoiseDomain::prior, 0, static_cast<std::uint64_t>(i));
        CHECK_FALSE(std::isnan(z));
        acc.add(Vector::Constant(1, z));
        skew += z * z * z;
        kurt += z * z * z * z;
    }
    CHECK(std::abs(acc.mean()[0]) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(acc.variance()[0] - 1.0) < 0.01);
    CHECK(std::abs(skew / n) < 0.03);
    CHECK(std::abs(kurt / n - 3.0) < 0.05);
}
