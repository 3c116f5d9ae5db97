// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ddrm/common.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ddrm {

/*
 * Variance-exploding noise levels 0 = σ_0 < σ_1 < ... < σ_T. Index t matches
 * the training timestep of a pretrained model, so σ_t with t in [1, T] is the
 * level the model saw at step t.
 */
class SigmaSchedule {
public:
    explicit SigmaSchedule(std::vector<double> sigmas);

    /// σ_t = sqrt(1/ᾱ_t - 1) for the given ᾱ_1..ᾱ_T, with σ_0 = 0 prepended.
    static SigmaSchedule from_vp_alphas(std::span<const double> alpha_bars);

    /// DDPM linear-β schedule: β linearly spaced over T steps, ᾱ_t = Π_{s<=t} (1 - β_s).
    static SigmaSchedule linear_beta(double beta_min = 1e-4, double beta_max = 2e-2,
                                     int steps = 1000);

    int max_step() const { return static_cast<int>(sigmas_.size()) - 1; }
    double sigma(int t) const { return sigmas_.at(static_cast<std::size_t>(t)); }
    const std::vector<double>& sigmas() const { return sigmas_; }

    double alpha_bar(int t) const;

    /// One σ per line, 17 significant digits.
    std::string to_text() const;
    static SigmaSchedule from_text(const std::string& text);
    static SigmaSchedule load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    std::vector<double> sigmas_;
};

/// ᾱ = 1 / (1 + σ²).
double to_vp_alpha(double sigma);

/// Inverse of to_vp_alpha: σ = sqrt((1 - ᾱ) / ᾱ).
double to_ve_sigma(double alpha_bar);

/// x / sqrt(1 + σ²), a VE sample mapped to VP scale.
Vector ve_to_vp(const Vector& x, double sigma);
double ve_to_vp(double x, double sigma);

/// x * sqrt(1 + σ²).
Vector vp_to_ve(const Vector& x, double sigma);
double vp_to_ve(double x, double sigma);

/*
 * k uniformly spaced timesteps out of max_step, anchored at the top:
 * max_step - stride*(k-1), ..., max_step with stride = floor(max_step / k).
 * Ascending; the last entry is always max_step.
 */
std::vector<int> subsample(int max_step, int k);

}  // namespace ddrm
