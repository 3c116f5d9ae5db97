// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ddrm {

namespace {

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) throw ContractError(std::string(what) + " contains non-finite entries");
}

// Variance of the σ_t >= σ_y/s_i case; rounding can push an exact zero slightly negative.
double measurement_variance(double sigma_t, double noise_level, double eta_b) {
    const double v = sigma_t * sigma_t - noise_level * noise_level * eta_b * eta_b;
    if (v < -1e-12 * std::max(sigma_t * sigma_t, std::numeric_limits<double>::min())) {
        std::ostringstream msg;
        msg << "negative transition variance " << v << " (sigma_t=" << sigma_t
            << ", sigma_y/s_i=" << noise_level << ", eta_b=" << eta_b << ")";
        throw ContractError(msg.str());
    }
    return std::max(v, 0.0);
}

}  // namespace

ProblemInstance::ProblemInstance(OperatorPtr op, Vector y, double sigma_y)
    : op_(std::move(op)), y_(std::move(y)), sigma_y_(sigma_y) {
    require(op_ != nullptr, "problem needs an operator");
    require(sigma_y >= 0.0 && std::isfinite(sigma_y), "sigma_y must be finite and >= 0");
    require_size("measurement y", op_->m(), y_.size());
    require_finite(y_, "measurement y");
    spectral_ = op_->spectral_measurement(y_, sigma_y_);
}

double ProblemInstance::min_sigma_max() const {
    double worst = 0.0;
    const Vector& s = singulars();
    for (Index i = 0; i < s.size(); ++i)
        if (s[i] > 0.0) worst = std::max(worst, spectral_.noise_level[i]);
    return worst;
}

void ProblemInstance::require_sigma_max(double sigma_max) const {
    const double needed = min_sigma_max();
    if (sigma_max < needed) {
        std::ostringstream msg;
        msg << "largest noise level " << sigma_max << " is below sigma_y/s_i = " << needed
            << "; use a longer schedule or zero small singular values";
        throw ContractError(msg.str());
    }
}

double eta_b_theorem(double sigma_t, double sigma_y, double s) {
    require(s > 0.0, "eta_b_theorem needs s_i > 0");
    const double nl = sigma_y / s;
    const double denom = sigma_t * sigma_t + nl * nl;
    require(denom > 0.0, "eta_b_theorem undefined at sigma_t = sigma_y = 0");
    return 2.0 * sigma_t * sigma_t / denom;
}

double resolve_eta_b(const EtaB& eta_b, double sigma_t, double noise_level) {
    if (eta_b.mode == EtaB::Mode::fixed) return eta_b.value;
    const double denom = sigma_t * sigma_t + noise_level * noise_level;
    // Final level of a noiseless problem: condition exactly on the measurement.
    if (denom == 0.0) return 1.0;
    return 2.0 * sigma_t * sigma_t / denom;
}

Moments init_moments(const ProblemInstance& problem, double sigma_max, const Vector& anchor) {
    const Index n = problem.op().n();
    require_size("init anchor", n, anchor.size());
    require_finite(anchor, "init anchor");
    problem.require_sigma_max(sigma_max);
    const Vector& s = problem.singulars();
    Moments out{Vector(n), Vector(n), std::vector<Branch>(static_cast<std::size_t>(n))};
    for (Index i = 0; i < n; ++i) {
        if (s[i] > 0.0) {
            const double nl = problem.noise_level()[i];
            out.mean[i] = problem.ybar()[i];
            out.variance[i] = std::max(sigma_max * sigma_max - nl * nl, 0.0);
            out.branch[static_cast<std::size_t>(i)] = Branch::above_noise;
        } else {
            out.mean[i] = anchor[i];
            out.variance[i] = sigma_max * sigma_max;
            out.branch[static_cast<std::size_t>(i)] = Branch::null_space;
        }
    }
    return out;
}

Moments transition_moments(const Vector& x_next, const Vector& anchor,
                           const ProblemInstance& problem, double sigma_t, double sigma_next,
                           double eta, const EtaB& eta_b) {
    const Index n = problem.op().n();
    require_size("x_next", n, x_next.size());
    require_size("prediction", n, anchor.size());
    require_finite(x_next, "x_next");
    require_finite(anchor, "prediction");
    require(sigma_t >= 0.0 && sigma_t < sigma_next, "transition needs 0 <= sigma_t < sigma_next");
    require(eta > 0.0 && eta <= 1.0, "eta must lie in (0, 1]");

    const Vector& s = problem.singulars();
    const Vector& ybar = problem.ybar();
    const double keep = std::sqrt(1.0 - eta * eta);
    const double fresh_var = eta * eta * sigma_t * sigma_t;

    Moments out{Vector(n), Vector(n), std::vector<Branch>(static_cast<std::size_t>(n))};
    for (Index i = 0; i < n; ++i) {
        auto& branch = out.branch[static_cast<std::size_t>(i)];
        if (s[i] <= 0.0) {
            branch = Branch::null_space;
            out.mean[i] = anchor[i] + keep * sigma_t * (x_next[i] - anchor[i]) / sigma_next;
            out.variance[i] = fresh_var;
            continue;
        }
        const double nl = problem.noise_level()[i];
        if (sigma_t < nl) {
            branch = Branch::below_noise;
            out.mean[i] = anchor[i] + keep * sigma_t * (ybar[i] - anchor[i]) / nl;
            out.variance[i] = fresh_var;
        } else {
            branch = Branch::above_noise;
            const double w = resolve_eta_b(eta_b, sigma_t, nl);
            out.mean[i] = (1.0 - w) * anchor[i] + w * ybar[i];
            out.variance[i] = measurement_variance(sigma_t, nl, w);
        }
    }
    return out;
}

Vector draw(const Moments& moments, const Vector& noise) {
    require_size("noise", moments.mean.size(), noise.size());
    return moments.mean + moments.variance.cwiseSqrt().cwiseProduct(noise);
}

Vector init_xT(const ProblemInstance& problem, double sigma_max, const Vector& noise) {
    return draw(init_moments(problem, sigma_max, Vector::Zero(problem.op().n())), noise);
}

Vector step(const Vector& x_next, const Vector& x_theta_bar, const ProblemInstance& problem,
            double sigma_t, double sigma_next, double eta, const EtaB& eta_b,
            const Vector& noise) {
    return draw(transition_moments(x_next, x_theta_bar, problem, sigma_t, sigma_next, eta, eta_b),
                noise);
}

Vector q_init(const ProblemInstance& problem, const Vector& x0_bar, double sigma_max,
              const Vector& noise) {
    return draw(init_moments(problem, sigma_max, x0_bar), noise);
}

Vector q_step(const Vector& x_next, const Vector& x0_bar, const ProblemInstance& problem,
              double sigma_t, double sigma_next, double eta, const EtaB& eta_b,
              const Vector& noise) {
    return draw(transition_moments(x_next, x0_bar, problem, sigma_t, sigma_next, eta, eta_b),
                noise);
}

Vector ilvr_reference_step(const Vector& x_theta, const ProblemInstance& problem,
                           double sigma_t, const Vector& eps, const Vector& eps_prime) {
    require(problem.sigma_y() == 0.0, "ILVR reference step needs noiseless measurements");
    const SvdOperator& h = problem.op();
    require_size("x_theta", h.n(), x_theta.size());
    require_size("eps", h.n(), eps.size());
    require_size("eps_prime", h.n(), eps_prime.size());
    auto project = [&h](const Vector& v) { return h.pseudo_inverse(h.apply(v)); };
    const Vector x_prime = x_theta + sigma_t * eps;
    const Vector y_t = h.pseudo_inverse(problem.y()) + sigma_t * eps_prime;
    return x_prime - project(x_prime) + project(y_t);
}

void validate(const ProblemInstance& problem, const SigmaSchedule& schedule,
              const DdrmParams& params) {
    require(params.eta > 0.0 && params.eta <= 1.0, "eta must lie in (0, 1]");
    if (params.eta_b.mode == EtaB::Mode::fixed)
        require(params.eta_b.value >= 0.0 && params.eta_b.value <= 2.0,
                "fixed eta_b must lie in [0, 2]");
    require(!params.timesteps.empty(), "timestep list is empty");
    for (std::size_t j = 0; j < params.timesteps.size(); ++j) {
        const int t = params.timesteps[j];
        require(t >= 1 && t <= schedule.max_step(),
                "timestep " + std::to_string(t) + " outside the schedule");
        require(j == 0 || t > params.timesteps[j - 1], "timesteps must be strictly increasing");
    }
    const double sigma_max = schedule.sigma(params.timesteps.back());
    problem.require_sigma_max(sigma_max);

    if (params.eta_b.mode != EtaB::Mode::fixed) return;
    // Every level the chain lands on, including σ_0 = 0.
    std::vector<double> levels{0.0};
    for (std::size_t j = 0; j + 1 < params.timesteps.size(); ++j)
        levels.push_back(schedule.sigma(params.timesteps[j]));
    const Vector& s = problem.singulars();
    for (Index i = 0; i < s.size(); ++i) {
        if (s[i] <= 0.0) continue;
        const double nl = problem.noise_level()[i];
        for (double sigma_t : levels)
            if (sigma_t >= nl) measurement_variance(sigma_t, nl, params.eta_b.value);
    }
}

Vector run(const ProblemInstance& problem, Denoiser& denoiser, const SigmaSchedule& schedule,
           const DdrmParams& params) {
    validate(problem, schedule, params);
    const SvdOperator& h = problem.op();
    const Index n = h.n();
    const NoiseStream noise(params.seed);
    const auto k = params.timesteps.size();
    auto level = [&](std::size_t j) {
        return j == 0 ? 0.0 : schedule.sigma(params.timesteps[j - 1]);
    };

    Vector xbar = init_xT(problem, level(k), noise.normals(NoiseDomain::chain, k, n));
    for (std::size_t j = k; j >= 1; --j) {
        const double sigma_next = level(j);
        const Vector x0 = denoiser.predict_x0(h.apply_V(xbar), sigma_next, params.timesteps[j - 1],
                                              params.class_label);
        require_size("denoiser output", n, x0.size());
        require_finite(x0, "denoiser output");
        xbar = step(xbar, h.apply_Vt(x0), problem, level(j - 1), sigma_next, params.eta,
                    params.eta_b, noise.normals(NoiseDomain::chain, j - 1, n));
    }
    return h.apply_V(xbar);
}

}  // namespace ddrm
