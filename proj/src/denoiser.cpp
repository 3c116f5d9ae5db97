// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace ddrm {

GaussianDenoiser::GaussianDenoiser(double prior_mean, double prior_std)
    : mean_(prior_mean), std_(prior_std) {
    require(prior_std > 0.0 && std::isfinite(prior_std), "gaussian prior std must be > 0");
    require(std::isfinite(prior_mean), "gaussian prior mean must be finite");
}

Vector GaussianDenoiser::predict(const Vector& x_t, double sigma_t) const {
    require(sigma_t >= 0.0, "sigma_t must be >= 0");
    const double s2 = sigma_t * sigma_t;
    const double t2 = std_ * std_;
    return ((s2 * mean_) + t2 * x_t.array()) / (s2 + t2);
}

Vector GaussianDenoiser::predict_x0(const Vector& x_t, double sigma_t, int,
                                    std::optional<std::int64_t>) {
    return predict(x_t, sigma_t);
}

Vector GaussianDenoiser::jacobian_diagonal(const Vector& x_t, double sigma_t) const {
    const double t2 = std_ * std_;
    return Vector::Constant(x_t.size(), t2 / (sigma_t * sigma_t + t2));
}

GmmDenoiser::GmmDenoiser(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
    require(!components_.empty(), "mixture needs at least one component");
    double total = 0.0;
    for (const auto& c : components_) {
        require(c.weight > 0.0, "mixture weights must be positive");
        require(c.std > 0.0, "mixture component std must be > 0");
        require(std::isfinite(c.mean), "mixture component mean must be finite");
        total += c.weight;
    }
    require(std::abs(total - 1.0) <= 1e-9, "mixture weights must sum to 1");
}

GmmDenoiser GmmDenoiser::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open mixture file " + path.string());
    std::vector<MixtureComponent> comps;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        MixtureComponent c{};
        if (!(fields >> c.weight)) continue;
        if (!(fields >> c.mean >> c.std))
            throw ContractError("mixture file: expected 'weight mean std' in '" + line + "'");
        comps.push_back(c);
    }
    return GmmDenoiser(std::move(comps));
}

std::vector<double> GmmDenoiser::responsibilities(double x, double sigma_t) const {
    const double s2 = sigma_t * sigma_t;
    std::vector<double> logr(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        const double var = c.std * c.std + s2;
        const double d = x - c.mean;
        logr[k] = std::log(c.weight) - 0.5 * std::log(2.0 * std::numbers::pi * var) -
                  0.5 * d * d / var;
    }
    const double top = *std::max_element(logr.begin(), logr.end());
    double total = 0.0;
    for (double& v : logr) {
        v = std::exp(v - top);
        total += v;
    }
    for (double& v : logr) v /= total;
    return logr;
}

std::vector<double> GmmDenoiser::component_predictions(double x, double sigma_t) const {
    const double s2 = sigma_t * sigma_t;
    std::vector<double> out(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        const double t2 = c.std * c.std;
        out[k] = (s2 * c.mean + t2 * x) / (s2 + t2);
    }
    return out;
}

Vector GmmDenoiser::predict(const Vector& x_t, double sigma_t) const {
    require(sigma_t >= 0.0, "sigma_t must be >= 0");
    Vector out(x_t.size());
    for (Index i = 0; i < x_t.size(); ++i) {
        const auto r = responsibilities(x_t[i], sigma_t);
        const auto m = component_predictions(x_t[i], sigma_t);
        double acc = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) acc += r[k] * m[k];
        out[i] = acc;
    }
    return out;
}

Vector GmmDenoiser::predict_x0(const Vector& x_t, double sigma_t, int,
                               std::optional<std::int64_t>) {
    return predict(x_t, sigma_t);
}

Vector GmmDenoiser::jacobian_diagonal(const Vector& x_t, double sigma_t) const {
    const double s2 = sigma_t * sigma_t;
    Vector out(x_t.size());
    for (Index i = 0; i < x_t.size(); ++i) {
        const double x = x_t[i];
        const auto r = responsibilities(x, sigma_t);
        const auto m = component_predictions(x, sigma_t);
        // d log N_k / dx and the mixture average of it.
        std::vector<double> g(r.size());
        double g_bar = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            const auto& c = components_[k];
            g[k] = -(x - c.mean) / (c.std * c.std + s2);
            g_bar += r[k] * g[k];
        }
        double acc = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            const double t2 = components_[k].std * components_[k].std;
            acc += r[k] * (g[k] - g_bar) * m[k] + r[k] * t2 / (s2 + t2);
        }
        out[i] = acc;
    }
    return out;
}

}  // namespace ddrm
