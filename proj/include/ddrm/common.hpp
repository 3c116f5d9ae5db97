// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ddrm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A caller broke a documented precondition (sizes, ranges, malformed input).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& what) : Error(what) {}
};

class DimensionMismatch : public ContractError {
public:
    DimensionMismatch(const std::string& where, Index expected, Index got)
        : ContractError(where + ": expected length " + std::to_string(expected) + ", got " +
                        std::to_string(got)) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractError(msg);
}

inline void require_size(const std::string& where, Index expected, Index got) {
    if (expected != got) throw DimensionMismatch(where, expected, got);
}

}  // namespace ddrm
