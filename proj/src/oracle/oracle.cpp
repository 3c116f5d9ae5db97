// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ddrm::oracle {

namespace {

constexpr double kMaxEntries = 1e6;

void check_size(Index m, Index n) {
    require(static_cast<double>(m) * static_cast<double>(n) <= kMaxEntries,
            "dense oracle limited to m*n <= 1e6, got " + std::to_string(m) + "x" +
                std::to_string(n));
}

// Rotates column pairs of a until they are mutually orthogonal; the same
// rotations accumulate into j, so a_in * j = a_out.
void one_sided_jacobi(Matrix& a, Matrix& j) {
    const Index cols = a.cols();
    j = Matrix::Identity(cols, cols);
    constexpr double tol = 1e-15;
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (Index p = 0; p + 1 < cols; ++p) {
            for (Index q = p + 1; q < cols; ++q) {
                const double alpha = a.col(p).squaredNorm();
                const double beta = a.col(q).squaredNorm();
                const double gamma = a.col(p).dot(a.col(q));
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t =
                    std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Matrix* mat : {&a, &j}) {
                    for (Index r = 0; r < mat->rows(); ++r) {
                        const double x = (*mat)(r, p), y = (*mat)(r, q);
                        (*mat)(r, p) = c * x - s * y;
                        (*mat)(r, q) = s * x + c * y;
                    }
                }
            }
        }
        if (!rotated) return;
    }
    throw Error("one-sided Jacobi did not converge");
}

}  // namespace

Matrix DenseSvd::reconstruct() const { return U * s.asDiagonal() * V.transpose(); }

Matrix probe(const SvdOperator& op) {
    check_size(op.m(), op.n());
    Matrix h(op.m(), op.n());
    Vector e = Vector::Zero(op.n());
    for (Index c = 0; c < op.n(); ++c) {
        e[c] = 1.0;
        h.col(c) = op.apply(e);
        e[c] = 0.0;
    }
    return h;
}

DenseSvd dense_svd(const Matrix& h) {
    check_size(h.rows(), h.cols());
    const bool wide = h.rows() <= h.cols();
    // Orthogonalise the shorter dimension's worth of columns.
    Matrix a = wide ? Matrix(h.transpose()) : h;
    Matrix j;
    one_sided_jacobi(a, j);

    const Index r = a.cols();
    Vector norms(r);
    for (Index c = 0; c < r; ++c) norms[c] = a.col(c).norm();
    std::vector<Index> order(static_cast<std::size_t>(r));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&norms](Index x, Index y) { return norms[x] > norms[y]; });

    Matrix left(a.rows(), r);
    Matrix right(j.rows(), r);
    DenseSvd out;
    out.s.resize(r);
    for (Index k = 0; k < r; ++k) {
        const Index c = order[static_cast<std::size_t>(k)];
        out.s[k] = norms[c];
        left.col(k) = norms[c] > 0.0 ? Vector(a.col(c) / norms[c]) : Vector::Zero(a.rows());
        right.col(k) = j.col(c);
    }
    // wide: Hᵀ J = B  =>  H = J diag(s) B̂ᵀ; tall: H J = B  =>  H = B̂ diag(s) Jᵀ.
    if (wide) {
        out.U = right;
        out.V = left;
    } else {
        out.U = left;
        out.V = right;
    }
    return out;
}

DenseSvd dense_svd(const SvdOperator& op) { return dense_svd(probe(op)); }

DensePosterior gaussian_posterior(const SvdOperator& op, const Vector& y, double sigma_y,
                                  const Vector& prior_mean, double tau) {
    require(tau > 0.0, "prior std tau must be > 0");
    require(sigma_y >= 0.0, "sigma_y must be >= 0");
    require_size("posterior y", op.m(), y.size());
    require_size("prior mean", op.n(), prior_mean.size());
    const Vector& s = op.singulars();
    const Vector mu_bar = op.apply_Vt(prior_mean);
    const Vector uty = op.apply_Ut(y);
    const Index n = op.n();
    DensePosterior out{Vector(n), Vector(n)};
    const double prior_precision = 1.0 / (tau * tau);
    for (Index i = 0; i < n; ++i) {
        if (s[i] <= 0.0) {
            out.mean[i] = mu_bar[i];
            out.variance[i] = tau * tau;
            continue;
        }
        const double ybar = uty[i] / s[i];
        if (sigma_y == 0.0) {
            out.mean[i] = ybar;
            out.variance[i] = 0.0;
            continue;
        }
        const double like = s[i] * s[i] / (sigma_y * sigma_y);
        const double precision = prior_precision + like;
        out.mean[i] = (mu_bar[i] * prior_precision + ybar * like) / precision;
        out.variance[i] = 1.0 / precision;
    }
    return out;
}

Vector gaussian_posterior_mean_dense(const Matrix& h, const Vector& y, double sigma_y,
                                     const Vector& prior_mean, double tau) {
    require(tau > 0.0 && sigma_y > 0.0, "dense posterior needs tau > 0 and sigma_y > 0");
    require_size("posterior y", h.rows(), y.size());
    require_size("prior mean", h.cols(), prior_mean.size());
    const Index n = h.cols();
    const double inv_noise = 1.0 / (sigma_y * sigma_y);
    Matrix a = inv_noise * (h.transpose() * h);
    a.diagonal().array() += 1.0 / (tau * tau);
    Vector b = prior_mean / (tau * tau) + inv_noise * (h.transpose() * y);

    // Cholesky a = L Lᵀ, then two triangular solves.
    Matrix l = Matrix::Zero(n, n);
    for (Index c = 0; c < n; ++c) {
        double d = a(c, c);
        for (Index k = 0; k < c; ++k) d -= l(c, k) * l(c, k);
        require(d > 0.0, "posterior precision is not positive definite");
        l(c, c) = std::sqrt(d);
        for (Index r = c + 1; r < n; ++r) {
            double v = a(r, c);
            for (Index k = 0; k < c; ++k) v -= l(r, k) * l(c, k);
            l(r, c) = v / l(c, c);
        }
    }
    for (Index r = 0; r < n; ++r) {
        for (Index k = 0; k < r; ++k) b[r] -= l(r, k) * b[k];
        b[r] /= l(r, r);
    }
    for (Index r = n - 1; r >= 0; --r) {
        for (Index k = r + 1; k < n; ++k) b[r] -= l(k, r) * b[k];
        b[r] /= l(r, r);
    }
    return b;
}

MomentAccumulator::MomentAccumulator(Index dim)
    : mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)) {}

void MomentAccumulator::add(const Vector& sample) {
    require_size("moment sample", mean_.size(), sample.size());
    ++count_;
    const Vector delta = sample - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta.cwiseProduct(sample - mean_);
}

Vector MomentAccumulator::variance() const {
    require(count_ >= 2, "variance needs at least two samples");
    return m2_ / static_cast<double>(count_ - 1);
}

Vector MomentAccumulator::standard_error() const {
    return (variance() / static_cast<double>(count_)).cwiseSqrt();
}

McStats mc_stats(std::span<const Vector> samples) {
    require(samples.size() >= 2, "mc_stats needs at least two samples");
    MomentAccumulator acc(samples.front().size());
    for (const auto& s : samples) acc.add(s);
    return {acc.mean(), acc.variance(), acc.standard_error()};
}

}  // namespace ddrm::oracle
