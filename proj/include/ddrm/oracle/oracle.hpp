// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Brute-force references for tests and `ddrm verify`. Nothing here shares
// code with the structured operators beyond their public apply().

#include "ddrm/linops.hpp"

#include <span>

namespace ddrm::oracle {

/// Thin SVD H = U diag(s) Vᵀ, r = min(m, n) columns, s descending.
struct DenseSvd {
    Matrix U;
    Vector s;
    Matrix V;

    Matrix reconstruct() const;
};

/// m x n matrix of op, one apply() per basis vector. Requires m·n <= 1e6.
Matrix probe(const SvdOperator& op);

/// One-sided Jacobi. Requires m·n <= 1e6.
DenseSvd dense_svd(const Matrix& h);
DenseSvd dense_svd(const SvdOperator& op);

/// Per spectral coordinate posterior of x | y under the prior N(μ₀, τ² I).
struct DensePosterior {
    Vector mean;
    Vector variance;
};

/*
 * Closed form in the operator's spectral basis. With σ_y = 0 the observed
 * coordinates are conditioned exactly (mean ȳ_i, variance 0).
 */
DensePosterior gaussian_posterior(const SvdOperator& op, const Vector& y, double sigma_y,
                                  const Vector& prior_mean, double tau);

/// Same posterior mean in signal space by a dense Cholesky solve; needs σ_y > 0.
Vector gaussian_posterior_mean_dense(const Matrix& h, const Vector& y, double sigma_y,
                                     const Vector& prior_mean, double tau);

/// Welford one-pass moments, per coordinate.
class MomentAccumulator {
public:
    explicit MomentAccumulator(Index dim);

    void add(const Vector& sample);

    Index count() const { return count_; }
    const Vector& mean() const { return mean_; }
    /// Sample variance (N - 1); needs two samples.
    Vector variance() const;
    /// sqrt(variance / N).
    Vector standard_error() const;

private:
    Index count_ = 0;
    Vector mean_;
    Vector m2_;
};

struct McStats {
    Vector mean;
    Vector variance;
    Vector standard_error;
};

McStats mc_stats(std::span<const Vector> samples);

}  // namespace ddrm::oracle
