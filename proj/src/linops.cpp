// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/linops.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ddrm {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Values at or below this are rounding noise around an exact zero.
double rank_cutoff(double s_max, Index rows, Index cols) {
    return s_max * static_cast<double>(std::max(rows, cols)) *
           std::numeric_limits<double>::epsilon();
}

class IdentityOperator final : public SvdOperator {
public:
    explicit IdentityOperator(Index n) : SvdOperator(OperatorKind::denoise, n, n) {
        singulars_.setOnes();
    }

protected:
    Vector do_apply(const Vector& x) const override { return x; }
    Vector do_apply_Vt(const Vector& x) const override { return x; }
    Vector do_apply_V(const Vector& x) const override { return x; }
    Vector do_apply_Ut(const Vector& y) const override { return y; }
    Vector do_apply_U(const Vector& y) const override { return y; }
};

// H = I Σ P: the permutation P moves the kept entries to the front.
class InpaintingOperator final : public SvdOperator {
public:
    InpaintingOperator(Index n, std::vector<Index> perm, Index kept)
        : SvdOperator(OperatorKind::inpaint, kept, n), perm_(std::move(perm)) {
        singulars_.head(kept).setOnes();
    }

protected:
    Vector do_apply(const Vector& x) const override {
        Vector y(m());
        for (Index i = 0; i < m(); ++i) y[i] = x[perm_[i]];
        return y;
    }
    Vector do_apply_Vt(const Vector& x) const override {
        Vector out(n());
        for (Index i = 0; i < n(); ++i) out[i] = x[perm_[i]];
        return out;
    }
    Vector do_apply_V(const Vector& xbar) const override {
        Vector out(n());
        for (Index i = 0; i < n(); ++i) out[perm_[i]] = xbar[i];
        return out;
    }
    Vector do_apply_Ut(const Vector& y) const override { return y; }
    Vector do_apply_U(const Vector& y) const override { return y; }

private:
    std::vector<Index> perm_;
};

/*
 * Every output scalar is kᵀ p_q for a disjoint "patch" p_q of the input, with
 * k = (1/p, ..., 1/p). This covers block super-resolution (patches are r x r
 * blocks) and colorization (patches are the three channels of a pixel).
 *
 *   H = (I ⊗ kᵀ) P1,  kᵀ = U_k Σ_k V_kᵀ,
 *   Vᵀ = P2 (I ⊗ V_kᵀ) P1,  U = I ⊗ U_k,  Σ = (I ⊗ Σ_k) P2ᵀ.
 *
 * P1 is stored as `patch_index_` (element j of patch q is x[patch_index_[q*p+j]]).
 * P2 puts the first component of every patch up front, in patch order, and
 * the remaining p-1 components of each patch after them.
 */
class PatchAverageOperator final : public SvdOperator {
public:
    PatchAverageOperator(OperatorKind kind, Index patch_size, std::vector<Index> patch_index)
        : SvdOperator(kind, static_cast<Index>(patch_index.size()) / patch_size,
                      static_cast<Index>(patch_index.size())),
          p_(patch_size),
          patch_index_(std::move(patch_index)) {
        const Matrix k = Matrix::Constant(1, p_, 1.0 / static_cast<double>(p_));
        Eigen::JacobiSVD<Matrix> svd(k, Eigen::ComputeFullU | Eigen::ComputeFullV);
        vk_ = svd.matrixV();
        // Fold the sign of the 1x1 U_k into V_k so that U = I.
        if (svd.matrixU()(0, 0) < 0.0) vk_.col(0) = -vk_.col(0);
        singulars_.head(m()).setConstant(svd.singularValues()(0));
    }

protected:
    Vector do_apply(const Vector& x) const override {
        Vector y(m());
        for (Index q = 0; q < m(); ++q) {
            double acc = 0.0;
            for (Index j = 0; j < p_; ++j) acc += x[patch_index_[q * p_ + j]];
            y[q] = acc / static_cast<double>(p_);
        }
        return y;
    }

    Vector do_apply_Vt(const Vector& x) const override {
        Vector out(n());
        Vector patch(p_);
        const Index patches = m();
        for (Index q = 0; q < patches; ++q) {
            for (Index j = 0; j < p_; ++j) patch[j] = x[patch_index_[q * p_ + j]];
            const Vector c = vk_.transpose() * patch;
            out[q] = c[0];
            for (Index j = 1; j < p_; ++j) out[patches + q * (p_ - 1) + (j - 1)] = c[j];
        }
        return out;
    }

    Vector do_apply_V(const Vector& xbar) const override {
        Vector out(n());
        Vector c(p_);
        const Index patches = m();
        for (Index q = 0; q < patches; ++q) {
            c[0] = xbar[q];
            for (Index j = 1; j < p_; ++j) c[j] = xbar[patches + q * (p_ - 1) + (j - 1)];
            const Vector patch = vk_ * c;
            for (Index j = 0; j < p_; ++j) out[patch_index_[q * p_ + j]] = patch[j];
        }
        return out;
    }

    Vector do_apply_Ut(const Vector& y) const override { return y; }
    Vector do_apply_U(const Vector& y) const override { return y; }

private:
    Index p_;
    std::vector<Index> patch_index_;
    Matrix vk_;
};

/*
 * Per channel Y = A_v X A_hᵀ with A_v (rows_v x d) acting on columns and
 * A_h (rows_h x d) on rows. With A = U S Vᵀ per axis, the Kronecker SVD has
 * coefficient X~ = V_vᵀ X V_h with singular value s_v[a] s_h[b] at (a, b).
 * `order_` sorts the n coefficient slots (c, a, b) by singular value; the m
 * slots with a < rows_v and b < rows_h always come first.
 */
class KroneckerOperator final : public SvdOperator {
public:
    KroneckerOperator(OperatorKind kind, Index channels, Index side, Matrix a_v, Matrix a_h,
                      double sv_threshold)
        : SvdOperator(kind, channels * a_v.rows() * a_h.rows(), channels * side * side),
          channels_(channels),
          side_(side),
          rows_v_(a_v.rows()),
          rows_h_(a_h.rows()),
          a_v_(std::move(a_v)),
          a_h_(std::move(a_h)) {
        Eigen::JacobiSVD<Matrix> svd_v(a_v_, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::JacobiSVD<Matrix> svd_h(a_h_, Eigen::ComputeFullU | Eigen::ComputeFullV);
        u_v_ = svd_v.matrixU();
        v_v_ = svd_v.matrixV();
        u_h_ = svd_h.matrixU();
        v_h_ = svd_h.matrixV();
        const Vector& s_v = svd_v.singularValues();
        const Vector& s_h = svd_h.singularValues();

        const Index plane = side_ * side_;
        std::vector<double> value(static_cast<std::size_t>(n()), 0.0);
        std::vector<char> measured(static_cast<std::size_t>(n()), 0);
        for (Index c = 0; c < channels_; ++c) {
            for (Index a = 0; a < rows_v_; ++a) {
                for (Index b = 0; b < rows_h_; ++b) {
                    const auto slot = static_cast<std::size_t>(c * plane + a * side_ + b);
                    value[slot] = s_v[a] * s_h[b];
                    measured[slot] = 1;
                }
            }
        }
        order_.resize(static_cast<std::size_t>(n()));
        std::iota(order_.begin(), order_.end(), Index{0});
        std::stable_sort(order_.begin(), order_.end(), [&](Index lhs, Index rhs) {
            const auto l = static_cast<std::size_t>(lhs);
            const auto r = static_cast<std::size_t>(rhs);
            if (value[l] != value[r]) return value[l] > value[r];
            return measured[l] > measured[r];
        });

        const double s_max = m() > 0 ? value[static_cast<std::size_t>(order_[0])] : 0.0;
        const double cutoff = rank_cutoff(s_max, m(), n());
        const double threshold = sv_threshold * s_max;
        for (Index i = 0; i < m(); ++i) {
            const double s = value[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
            if (s <= cutoff) {
                singulars_[i] = 0.0;
            } else if (s < threshold) {
                singulars_[i] = 0.0;
                truncated_ = true;
            } else {
                singulars_[i] = s;
            }
        }
    }

protected:
    Vector do_apply(const Vector& x) const override {
        if (truncated_) return apply_factored(x);
        Vector y(m());
        const Index plane = side_ * side_;
        const Index out_plane = rows_v_ * rows_h_;
        for (Index c = 0; c < channels_; ++c) {
            Eigen::Map<const RowMajorMatrix> img(x.data() + c * plane, side_, side_);
            Eigen::Map<RowMajorMatrix> out(y.data() + c * out_plane, rows_v_, rows_h_);
            out.noalias() = a_v_ * img * a_h_.transpose();
        }
        return y;
    }

    Vector do_apply_Vt(const Vector& x) const override {
        const Index plane = side_ * side_;
        Vector coeff(n());
        for (Index c = 0; c < channels_; ++c) {
            Eigen::Map<const RowMajorMatrix> img(x.data() + c * plane, side_, side_);
            Eigen::Map<RowMajorMatrix> out(coeff.data() + c * plane, side_, side_);
            out.noalias() = v_v_.transpose() * img * v_h_;
        }
        Vector xbar(n());
        for (Index i = 0; i < n(); ++i) xbar[i] = coeff[order_[static_cast<std::size_t>(i)]];
        return xbar;
    }

    Vector do_apply_V(const Vector& xbar) const override {
        const Index plane = side_ * side_;
        Vector coeff(n());
        for (Index i = 0; i < n(); ++i) coeff[order_[static_cast<std::size_t>(i)]] = xbar[i];
        Vector x(n());
        for (Index c = 0; c < channels_; ++c) {
            Eigen::Map<const RowMajorMatrix> in(coeff.data() + c * plane, side_, side_);
            Eigen::Map<RowMajorMatrix> img(x.data() + c * plane, side_, side_);
            img.noalias() = v_v_ * in * v_h_.transpose();
        }
        return x;
    }

    Vector do_apply_Ut(const Vector& y) const override {
        const Index out_plane = rows_v_ * rows_h_;
        Vector coeff(m());
        for (Index c = 0; c < channels_; ++c) {
            Eigen::Map<const RowMajorMatrix> img(y.data() + c * out_plane, rows_v_, rows_h_);
            Eigen::Map<RowMajorMatrix> out(coeff.data() + c * out_plane, rows_v_, rows_h_);
            out.noalias() = u_v_.transpose() * img * u_h_;
        }
        Vector ybar(m());
        for (Index i = 0; i < m(); ++i) ybar[i] = coeff[measurement_slot(i)];
        return ybar;
    }

    Vector do_apply_U(const Vector& ybar) const override {
        const Index out_plane = rows_v_ * rows_h_;
        Vector coeff(m());
        for (Index i = 0; i < m(); ++i) coeff[measurement_slot(i)] = ybar[i];
        Vector y(m());
        for (Index c = 0; c < channels_; ++c) {
            Eigen::Map<const RowMajorMatrix> in(coeff.data() + c * out_plane, rows_v_, rows_h_);
            Eigen::Map<RowMajorMatrix> img(y.data() + c * out_plane, rows_v_, rows_h_);
            img.noalias() = u_v_ * in * u_h_.transpose();
        }
        return y;
    }

private:
    // Position of spectral index i (< m) inside the channel-stacked U-coefficient grid.
    Index measurement_slot(Index i) const {
        const Index slot = order_[static_cast<std::size_t>(i)];
        const Index plane = side_ * side_;
        const Index c = slot / plane;
        const Index a = (slot % plane) / side_;
        const Index b = slot % side_;
        return c * rows_v_ * rows_h_ + a * rows_h_ + b;
    }

    Index channels_;
    Index side_;
    Index rows_v_;
    Index rows_h_;
    Matrix a_v_, a_h_;
    Matrix u_v_, v_v_, u_h_, v_h_;
    std::vector<Index> order_;
    bool truncated_ = false;
};

class DenseOperator final : public SvdOperator {
public:
    explicit DenseOperator(const Matrix& h)
        : SvdOperator(OperatorKind::dense, h.rows(), h.cols()), h_(h) {
        Eigen::JacobiSVD<Matrix> svd(h_, Eigen::ComputeFullU | Eigen::ComputeFullV);
        u_ = svd.matrixU();
        v_ = svd.matrixV();
        const Vector& s = svd.singularValues();
        const double cutoff = rank_cutoff(s.size() > 0 ? s[0] : 0.0, h.rows(), h.cols());
        for (Index i = 0; i < s.size(); ++i) singulars_[i] = s[i] > cutoff ? s[i] : 0.0;
    }

protected:
    Vector do_apply(const Vector& x) const override { return h_ * x; }
    Vector do_apply_Vt(const Vector& x) const override { return v_.transpose() * x; }
    Vector do_apply_V(const Vector& xbar) const override { return v_ * xbar; }
    Vector do_apply_Ut(const Vector& y) const override { return u_.transpose() * y; }
    Vector do_apply_U(const Vector& ybar) const override { return u_ * ybar; }

private:
    Matrix h_, u_, v_;
};

}  // namespace

std::string_view to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::denoise: return "denoise";
        case OperatorKind::inpaint: return "inpaint";
        case OperatorKind::block_sr: return "block_sr";
        case OperatorKind::bicubic_sr: return "bicubic_sr";
        case OperatorKind::colorize: return "colorize";
        case OperatorKind::sep_blur: return "sep_blur";
        case OperatorKind::dense: return "dense";
    }
    return "unknown";
}

SvdOperator::SvdOperator(OperatorKind kind, Index m, Index n)
    : singulars_(Vector::Zero(n)), kind_(kind), m_(m), n_(n) {
    require(m >= 0 && n > 0, "operator dimensions must satisfy n > 0, m >= 0");
    require(m <= n, "operator must satisfy m <= n");
}

Vector SvdOperator::apply(const Vector& x) const {
    require_size("apply", n_, x.size());
    return do_apply(x);
}

Vector SvdOperator::apply_Vt(const Vector& x) const {
    require_size("apply_Vt", n_, x.size());
    return do_apply_Vt(x);
}

Vector SvdOperator::apply_V(const Vector& xbar) const {
    require_size("apply_V", n_, xbar.size());
    return do_apply_V(xbar);
}

Vector SvdOperator::apply_Ut(const Vector& y) const {
    require_size("apply_Ut", m_, y.size());
    return do_apply_Ut(y);
}

Vector SvdOperator::apply_U(const Vector& ybar) const {
    require_size("apply_U", m_, ybar.size());
    return do_apply_U(ybar);
}

Vector SvdOperator::apply_factored(const Vector& x) const {
    require_size("apply_factored", n_, x.size());
    const Vector xbar = do_apply_Vt(x);
    const Vector scaled = singulars_.head(m_).cwiseProduct(xbar.head(m_));
    return do_apply_U(scaled);
}

SpectralMeasurement SvdOperator::spectral_measurement(const Vector& y, double sigma_y) const {
    require_size("spectral_measurement", m_, y.size());
    require(sigma_y >= 0.0, "sigma_y must be >= 0");
    SpectralMeasurement out{Vector::Zero(n_),
                            Vector::Constant(n_, std::numeric_limits<double>::infinity())};
    const Vector uty = do_apply_Ut(y);
    for (Index i = 0; i < m_; ++i) {
        const double s = singulars_[i];
        if (s > 0.0) {
            out.ybar[i] = uty[i] / s;
            out.noise_level[i] = sigma_y / s;
        }
    }
    return out;
}

Vector SvdOperator::pseudo_inverse(const Vector& y) const {
    return do_apply_V(spectral_measurement(y, 0.0).ybar);
}

Index SvdOperator::rank() const {
    return static_cast<Index>((singulars_.array() > 0.0).count());
}

OperatorPtr build_denoising(Index n) {
    require(n > 0, "denoising operator needs n > 0");
    return std::make_shared<IdentityOperator>(n);
}

OperatorPtr build_inpainting(Index n, std::span<const Index> kept) {
    require(n > 0, "inpainting operator needs n > 0");
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Index> sorted(kept.begin(), kept.end());
    std::sort(sorted.begin(), sorted.end());
    for (Index idx : sorted) {
        require(idx >= 0 && idx < n, "inpainting mask index out of range: " + std::to_string(idx));
        require(!seen[static_cast<std::size_t>(idx)],
                "inpainting mask index repeated: " + std::to_string(idx));
        seen[static_cast<std::size_t>(idx)] = 1;
    }
    std::vector<Index> perm = sorted;
    perm.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        if (!seen[static_cast<std::size_t>(i)]) perm.push_back(i);
    return std::make_shared<InpaintingOperator>(n, std::move(perm),
                                                static_cast<Index>(sorted.size()));
}

OperatorPtr build_block_sr(Index side, Index factor, Index channels) {
    require(side > 0 && factor > 0 && channels > 0, "block_sr: side, factor, channels must be > 0");
    require(side % factor == 0, "block_sr: side " + std::to_string(side) +
                                    " is not divisible by factor " + std::to_string(factor));
    const Index small = side / factor;
    const Index p = factor * factor;
    std::vector<Index> patch_index(static_cast<std::size_t>(channels * side * side));
    for (Index c = 0; c < channels; ++c) {
        for (Index bi = 0; bi < small; ++bi) {
            for (Index bj = 0; bj < small; ++bj) {
                const Index q = c * small * small + bi * small + bj;
                for (Index a = 0; a < factor; ++a) {
                    for (Index b = 0; b < factor; ++b) {
                        patch_index[static_cast<std::size_t>(q * p + a * factor + b)] =
                            c * side * side + (bi * factor + a) * side + bj * factor + b;
                    }
                }
            }
        }
    }
    return std::make_shared<PatchAverageOperator>(OperatorKind::block_sr, p,
                                                  std::move(patch_index));
}

OperatorPtr build_colorization(Index side, Index channels) {
    require(channels == 3, "colorization needs exactly 3 channels, got " + std::to_string(channels));
    require(side > 0, "colorization: side must be > 0");
    const Index plane = side * side;
    std::vector<Index> patch_index(static_cast<std::size_t>(3 * plane));
    for (Index q = 0; q < plane; ++q)
        for (Index c = 0; c < 3; ++c) patch_index[static_cast<std::size_t>(q * 3 + c)] = c * plane + q;
    return std::make_shared<PatchAverageOperator>(OperatorKind::colorize, 3,
                                                  std::move(patch_index));
}

Matrix convolution_matrix(Index side, std::span<const double> kernel) {
    const auto taps = static_cast<Index>(kernel.size());
    require(taps > 0, "blur kernel must be nonempty");
    require(taps <= side, "blur kernel of length " + std::to_string(taps) +
                              " is longer than the image side " + std::to_string(side));
    const Index centre = (taps - 1) / 2;
    Matrix a = Matrix::Zero(side, side);
    for (Index i = 0; i < side; ++i) {
        for (Index j = 0; j < side; ++j) {
            const Index t = i - j + centre;
            if (t >= 0 && t < taps) a(i, j) = kernel[static_cast<std::size_t>(t)];
        }
    }
    return a;
}

OperatorPtr build_sep_blur(Index side, Index channels, std::span<const double> row_kernel,
                           std::span<const double> col_kernel, double sv_threshold) {
    require(side > 0 && channels > 0, "sep_blur: side and channels must be > 0");
    require(sv_threshold >= 0.0 && sv_threshold < 1.0, "sep_blur: sv_threshold must be in [0, 1)");
    return std::make_shared<KroneckerOperator>(OperatorKind::sep_blur, channels, side,
                                               convolution_matrix(side, col_kernel),
                                               convolution_matrix(side, row_kernel), sv_threshold);
}

double bicubic_weight(double t, double a) {
    const double x = std::abs(t);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

Matrix bicubic_matrix(Index side, Index factor) {
    require(side > 0 && factor > 0, "bicubic: side and factor must be > 0");
    require(side % factor == 0, "bicubic_sr: side " + std::to_string(side) +
                                    " is not divisible by factor " + std::to_string(factor));
    const Index rows = side / factor;
    const auto r = static_cast<double>(factor);
    Matrix a = Matrix::Zero(rows, side);
    for (Index o = 0; o < rows; ++o) {
        const double centre = (static_cast<double>(o) + 0.5) * r - 0.5;
        for (Index j = 0; j < side; ++j) a(o, j) = bicubic_weight((static_cast<double>(j) - centre) / r);
        // Border rows lose taps to the zero padding; keep each row a partition of unity.
        a.row(o) /= a.row(o).sum();
    }
    return a;
}

OperatorPtr build_bicubic_sr(Index side, Index factor, Index channels) {
    require(channels > 0, "bicubic_sr: channels must be > 0");
    Matrix a = bicubic_matrix(side, factor);
    Matrix b = a;
    return std::make_shared<KroneckerOperator>(OperatorKind::bicubic_sr, channels, side,
                                               std::move(a), std::move(b), 0.0);
}

OperatorPtr build_dense(const Matrix& h) {
    require(h.rows() <= h.cols(), "dense operator needs rows <= cols");
    return std::make_shared<DenseOperator>(h);
}

std::vector<double> uniform_kernel(Index taps) {
    require(taps > 0, "uniform kernel needs taps > 0");
    return std::vector<double>(static_cast<std::size_t>(taps), 1.0 / static_cast<double>(taps));
}

std::vector<double> gaussian_kernel(double sigma, Index max_radius) {
    require(sigma > 0.0, "gaussian kernel needs sigma > 0");
    require(max_radius >= 0, "gaussian kernel needs max_radius >= 0");
    const Index radius = std::min(static_cast<Index>(std::ceil(3.0 * sigma)), max_radius);
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (Index i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        total += v;
    }
    for (double& v : k) v /= total;
    return k;
}

}  // namespace ddrm
