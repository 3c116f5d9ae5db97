// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ddrm/common.hpp"
#include "ddrm/rng.hpp"

#include <filesystem>
#include <string>

#include <unistd.h>

namespace ddrm::testing {

inline double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline Vector randn(Index n, std::uint64_t seed, std::uint64_t step = 0) {
    return NoiseStream(seed).normals(NoiseDomain::prior, step, n);
}

inline Vector randu(Index n, std::uint64_t seed, std::uint64_t step = 0) {
    const NoiseStream rng(seed);
    Vector v(n);
    for (Index i = 0; i < n; ++i)
        v[i] = rng.uniform(NoiseDomain::prior, step, static_cast<std::uint64_t>(i));
    return v;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("ddrm-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace ddrm::testing
