// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ddrm/denoiser.hpp"
#include "ddrm/linops.hpp"
#include "ddrm/rng.hpp"
#include "ddrm/schedule.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ddrm {

/// Mixing weight of the measurement in the σ_t >= σ_y / s_i case.
struct EtaB {
    enum class Mode { fixed, theorem };

    Mode mode = Mode::fixed;
    double value = 1.0;

    static EtaB fixed(double v) { return {Mode::fixed, v}; }
    /// η_b = 2σ_t² / (σ_t² + σ_y²/s_i²) per index.
    static EtaB theorem() { return {Mode::theorem, 0.0}; }

    bool operator==(const EtaB& o) const {
        return mode == o.mode && (mode == Mode::theorem || value == o.value);
    }
};

struct DdrmParams {
    double eta = 0.85;
    EtaB eta_b = EtaB::fixed(1.0);
    /// Ascending schedule indices visited by the chain, e.g. subsample(1000, 20).
    std::vector<int> timesteps;
    std::uint64_t seed = 0;
    std::optional<std::int64_t> class_label;
};

/// y = Hx + σ_y z with its spectral form ȳ = Σ† Uᵀ y cached.
class ProblemInstance {
public:
    ProblemInstance(OperatorPtr op, Vector y, double sigma_y);

    const SvdOperator& op() const { return *op_; }
    const OperatorPtr& op_ptr() const { return op_; }
    const Vector& y() const { return y_; }
    double sigma_y() const { return sigma_y_; }
    const Vector& ybar() const { return spectral_.ybar; }
    /// σ_y / s_i, +inf where s_i = 0.
    const Vector& noise_level() const { return spectral_.noise_level; }
    const Vector& singulars() const { return op_->singulars(); }

    /// Smallest σ_T satisfying σ_T >= σ_y / s_i for every s_i > 0.
    double min_sigma_max() const;

    /// Throws unless σ_T >= σ_y / s_i for every s_i > 0.
    void require_sigma_max(double sigma_max) const;

private:
    OperatorPtr op_;
    Vector y_;
    double sigma_y_;
    SpectralMeasurement spectral_;
};

enum class Branch : std::uint8_t {
    null_space,   ///< s_i = 0
    below_noise,  ///< s_i > 0, σ_t < σ_y / s_i
    above_noise,  ///< s_i > 0, σ_t >= σ_y / s_i
};

/// Per-index Gaussian of one transition.
struct Moments {
    Vector mean;
    Vector variance;
    std::vector<Branch> branch;
};

/// Throws for s_i = 0 and for the undefined σ_t = σ_y = 0 point.
double eta_b_theorem(double sigma_t, double sigma_y, double s);

/// η_b used for one index in the σ_t >= σ_y / s_i case.
double resolve_eta_b(const EtaB& eta_b, double sigma_t, double noise_level);

/*
 * Distribution of x̄_T. `anchor` fills the s_i = 0 entries: 0 for the model
 * chain, x̄_0 for the variational chain.
 */
Moments init_moments(const ProblemInstance& problem, double sigma_max, const Vector& anchor);

/*
 * Distribution of x̄_t given x̄_{t+1}. `anchor` is the spectral x̄_θ
 * prediction for the model chain, or the true x̄_0 for the variational chain.
 */
Moments transition_moments(const Vector& x_next, const Vector& anchor,
                           const ProblemInstance& problem, double sigma_t, double sigma_next,
                           double eta, const EtaB& eta_b);

/// mean + sqrt(variance) * noise.
Vector draw(const Moments& moments, const Vector& noise);

Vector init_xT(const ProblemInstance& problem, double sigma_max, const Vector& noise);

Vector step(const Vector& x_next, const Vector& x_theta_bar, const ProblemInstance& problem,
            double sigma_t, double sigma_next, double eta, const EtaB& eta_b,
            const Vector& noise);

/// Variational chain start; needs the true signal in spectral form.
Vector q_init(const ProblemInstance& problem, const Vector& x0_bar, double sigma_max,
              const Vector& noise);

Vector q_step(const Vector& x_next, const Vector& x0_bar, const ProblemInstance& problem,
              double sigma_t, double sigma_next, double eta, const EtaB& eta_b,
              const Vector& noise);

/*
 * One ILVR update in signal space for noiseless measurements:
 *   x' = x_θ + σ_t ε,  y_t = H†y + σ_t ε',  x_t = x' - H†H x' + H†H y_t.
 */
Vector ilvr_reference_step(const Vector& x_theta, const ProblemInstance& problem,
                           double sigma_t, const Vector& eps, const Vector& eps_prime);

/// Checks η, η_b, the timestep list and the σ_T guard before a run.
void validate(const ProblemInstance& problem, const SigmaSchedule& schedule,
              const DdrmParams& params);

/*
 * Full sampling run; returns x̂₀ in signal space. Chain position j (K for
 * x̄_T, j-1 for the transition out of level j) selects the noise block, so
 * the draw for (j, i) depends only on the seed.
 */
Vector run(const ProblemInstance& problem, Denoiser& denoiser, const SigmaSchedule& schedule,
           const DdrmParams& params);

}  // namespace ddrm
