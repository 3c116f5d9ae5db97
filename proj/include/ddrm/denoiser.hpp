// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ddrm/common.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace ddrm {

/*
 * Maps a noisy VE sample x_t = x_0 + σ_t ε to a prediction of x_0.
 * Implementations must be deterministic: the sampler owns all randomness.
 * `step` is the training timestep matching σ_t; `class_label` is forwarded
 * untouched to conditional models.
 */
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual Vector predict_x0(const Vector& x_t, double sigma_t, int step,
                              std::optional<std::int64_t> class_label) = 0;
};

/// Exact posterior mean under an isotropic prior N(mean, std² I).
class GaussianDenoiser final : public Denoiser {
public:
    GaussianDenoiser(double prior_mean, double prior_std);

    Vector predict_x0(const Vector& x_t, double sigma_t, int step,
                      std::optional<std::int64_t> class_label) override;

    Vector predict(const Vector& x_t, double sigma_t) const;

    /// Diagonal of d x̂₀ / d x_t.
    Vector jacobian_diagonal(const Vector& x_t, double sigma_t) const;

    double prior_mean() const { return mean_; }
    double prior_std() const { return std_; }

private:
    double mean_;
    double std_;
};

struct MixtureComponent {
    double weight;
    double mean;
    double std;
};

/*
 * Exact posterior mean when every coordinate is i.i.d. from a 1-D Gaussian
 * mixture. Responsibilities are evaluated per coordinate in log space.
 */
class GmmDenoiser final : public Denoiser {
public:
    explicit GmmDenoiser(std::vector<MixtureComponent> components);

    /// Text file, one component per line: `weight mean std`; '#' starts a comment.
    static GmmDenoiser load(const std::filesystem::path& path);

    Vector predict_x0(const Vector& x_t, double sigma_t, int step,
                      std::optional<std::int64_t> class_label) override;

    Vector predict(const Vector& x_t, double sigma_t) const;
    Vector jacobian_diagonal(const Vector& x_t, double sigma_t) const;

    /// Per-component MMSE outputs for one coordinate.
    std::vector<double> component_predictions(double x_t, double sigma_t) const;

    const std::vector<MixtureComponent>& components() const { return components_; }

private:
    std::vector<double> responsibilities(double x_t, double sigma_t) const;

    std::vector<MixtureComponent> components_;
};

}  // namespace ddrm
