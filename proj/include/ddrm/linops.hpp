// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ddrm/common.hpp"

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ddrm {

enum class OperatorKind { denoise, inpaint, block_sr, bicubic_sr, colorize, sep_blur, dense };

std::string_view to_string(OperatorKind kind);

/// Measurement mapped into spectral coordinates: ybar = Σ† Uᵀ y, together with
/// the per-index noise level σ_y / s_i (+inf where s_i = 0).
struct SpectralMeasurement {
    Vector ybar;
    Vector noise_level;
};

/*
 * A linear degradation H (m x n, m <= n) held through its SVD H = U Σ Vᵀ.
 *
 * Signals use the planar (C, H, W) layout, row-major within a channel.
 * Spectral vectors have length n; index i < m pairs with singular value s_i,
 * indices i >= m have s_i = 0. Implementations never materialise U or V
 * (except the test-only dense kind) and keep O(n) state.
 *
 * Instances are immutable after construction; every action is a pure function
 * of its argument, so one operator may be shared by concurrent sampling runs.
 */
class SvdOperator {
public:
    virtual ~SvdOperator() = default;

    SvdOperator(const SvdOperator&) = delete;
    SvdOperator& operator=(const SvdOperator&) = delete;

    Index m() const { return m_; }
    Index n() const { return n_; }
    OperatorKind kind() const { return kind_; }

    /// Hx computed directly from the structure (block means, convolutions, ...).
    Vector apply(const Vector& x) const;

    Vector apply_Vt(const Vector& x) const;
    Vector apply_V(const Vector& xbar) const;
    Vector apply_Ut(const Vector& y) const;
    Vector apply_U(const Vector& ybar) const;

    /// Length n, non-increasing, s_i = 0 for i >= m.
    const Vector& singulars() const { return singulars_; }

    /// U Σ Vᵀ x through the factor actions only.
    Vector apply_factored(const Vector& x) const;

    SpectralMeasurement spectral_measurement(const Vector& y, double sigma_y) const;

    /// H† y = V Σ† Uᵀ y.
    Vector pseudo_inverse(const Vector& y) const;

    /// Number of strictly positive singular values.
    Index rank() const;

protected:
    SvdOperator(OperatorKind kind, Index m, Index n);

    virtual Vector do_apply(const Vector& x) const = 0;
    virtual Vector do_apply_Vt(const Vector& x) const = 0;
    virtual Vector do_apply_V(const Vector& xbar) const = 0;
    virtual Vector do_apply_Ut(const Vector& y) const = 0;
    virtual Vector do_apply_U(const Vector& ybar) const = 0;

    Vector singulars_;

private:
    OperatorKind kind_;
    Index m_;
    Index n_;
};

using OperatorPtr = std::shared_ptr<const SvdOperator>;

// H = I.
OperatorPtr build_denoising(Index n);

/// Keeps the scalars listed in `kept` (unique, in [0, n)). The retained
/// entries are ordered ascending and placed first in spectral space.
OperatorPtr build_inpainting(Index n, std::span<const Index> kept);

/// Averages r x r blocks of every channel of a d x d image.
OperatorPtr build_block_sr(Index side, Index factor, Index channels);

/// Averages the three channels of every pixel of a d x d colour image.
OperatorPtr build_colorization(Index side, Index channels = 3);

/*
 * Zero-padded separable blur of a d x d image: `col_kernel` runs down the
 * columns (vertical), `row_kernel` along the rows (horizontal). Singular
 * values below sv_threshold * s_max are zeroed; the truncated factorization
 * then defines the operator.
 */
OperatorPtr build_sep_blur(Index side, Index channels, std::span<const double> row_kernel,
                           std::span<const double> col_kernel, double sv_threshold = 0.0);

/// Bicubic (Keys, a = -0.5) downsampling by r as a strided separable convolution.
OperatorPtr build_bicubic_sr(Index side, Index factor, Index channels);

/// Explicit matrix with m <= n; intended for tests.
OperatorPtr build_dense(const Matrix& h);

/// Strided 1-D bicubic downsampling matrix, (d / r) x d.
Matrix bicubic_matrix(Index side, Index factor);

/// d x d zero-padded "same" convolution matrix for a 1-D kernel.
Matrix convolution_matrix(Index side, std::span<const double> kernel);

double bicubic_weight(double t, double a = -0.5);

std::vector<double> uniform_kernel(Index taps);

/// Normalised Gaussian taps of standard deviation sigma, radius min(ceil(3σ), max_radius).
std::vector<double> gaussian_kernel(double sigma, Index max_radius);

}  // namespace ddrm
