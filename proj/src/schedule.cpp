// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/schedule.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ddrm {

SigmaSchedule::SigmaSchedule(std::vector<double> sigmas) : sigmas_(std::move(sigmas)) {
    require(sigmas_.size() >= 2, "a schedule needs at least one positive noise level");
    require(sigmas_[0] == 0.0, "schedule must start at sigma_0 = 0");
    for (std::size_t t = 1; t < sigmas_.size(); ++t) {
        require(std::isfinite(sigmas_[t]), "schedule entries must be finite");
        require(sigmas_[t] > sigmas_[t - 1],
                "schedule must be strictly increasing (index " + std::to_string(t) + ")");
    }
}

SigmaSchedule SigmaSchedule::from_vp_alphas(std::span<const double> alpha_bars) {
    std::vector<double> sigmas{0.0};
    sigmas.reserve(alpha_bars.size() + 1);
    for (double a : alpha_bars) {
        require(a > 0.0 && a <= 1.0, "alpha_bar entries must lie in (0, 1]");
        sigmas.push_back(to_ve_sigma(a));
    }
    return SigmaSchedule(std::move(sigmas));
}

SigmaSchedule SigmaSchedule::linear_beta(double beta_min, double beta_max, int steps) {
    require(steps >= 1, "linear beta schedule needs at least one step");
    require(beta_min > 0.0 && beta_max < 1.0 && beta_min <= beta_max,
            "linear beta schedule needs 0 < beta_min <= beta_max < 1");
    std::vector<double> alpha_bars(static_cast<std::size_t>(steps));
    double prod = 1.0;
    for (int s = 0; s < steps; ++s) {
        const double beta =
            steps == 1 ? beta_min : beta_min + (beta_max - beta_min) * s / (steps - 1);
        prod *= 1.0 - beta;
        alpha_bars[static_cast<std::size_t>(s)] = prod;
    }
    return from_vp_alphas(alpha_bars);
}

double SigmaSchedule::alpha_bar(int t) const { return to_vp_alpha(sigma(t)); }

std::string SigmaSchedule::to_text() const {
    std::string out;
    char buf[40];
    for (double s : sigmas_) {
        std::snprintf(buf, sizeof buf, "%.17g\n", s);
        out += buf;
    }
    return out;
}

SigmaSchedule SigmaSchedule::from_text(const std::string& text) {
    std::istringstream in(text);
    std::vector<double> sigmas;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const std::string field = line.substr(first);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(field, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || field.find_first_not_of(" \t\r", used) != std::string::npos)
            throw ContractError("schedule file: cannot parse '" + line + "'");
        sigmas.push_back(v);
    }
    require(!sigmas.empty(), "schedule file holds no values");
    if (sigmas.front() != 0.0) sigmas.insert(sigmas.begin(), 0.0);
    return SigmaSchedule(std::move(sigmas));
}

SigmaSchedule SigmaSchedule::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open schedule file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

void SigmaSchedule::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write schedule file " + path.string());
    out << to_text();
}

double to_vp_alpha(double sigma) {
    require(sigma >= 0.0, "sigma must be >= 0");
    return 1.0 / (1.0 + sigma * sigma);
}

double to_ve_sigma(double alpha_bar) {
    require(alpha_bar > 0.0 && alpha_bar <= 1.0, "alpha_bar must lie in (0, 1]");
    // 1 - ᾱ is exact for ᾱ >= 1/2.
    return std::sqrt((1.0 - alpha_bar) / alpha_bar);
}

double ve_to_vp(double x, double sigma) { return x / std::sqrt(1.0 + sigma * sigma); }
double vp_to_ve(double x, double sigma) { return x * std::sqrt(1.0 + sigma * sigma); }

Vector ve_to_vp(const Vector& x, double sigma) { return x / std::sqrt(1.0 + sigma * sigma); }
Vector vp_to_ve(const Vector& x, double sigma) { return x * std::sqrt(1.0 + sigma * sigma); }

std::vector<int> subsample(int max_step, int k) {
    require(k >= 1 && k <= max_step, "step count " + std::to_string(k) + " outside [1, " +
                                         std::to_string(max_step) + "]");
    const int stride = max_step / k;
    std::vector<int> steps(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) steps[static_cast<std::size_t>(j)] = max_step - stride * (k - 1 - j);
    return steps;
}

}  // namespace ddrm
