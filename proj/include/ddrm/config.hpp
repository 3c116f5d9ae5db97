// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ddrm/sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ddrm {

/*
 * Everything a restore or sweep run needs. The file form is one `key = value`
 * per line ('#' comments, blank lines ignored); to_text writes every key so a
 * resolved config reproduces the run.
 */
struct RunConfig {
    std::string deg = "denoise";
    double sigma_y = 0.0;
    double eta = 0.85;
    EtaB eta_b = EtaB::fixed(1.0);
    int steps = 20;
    std::uint64_t seed = 0;
    int samples = 1;
    std::string denoiser = "gaussian";  ///< gaussian | gmm | external
    double tau = 0.25;
    double mu = 0.5;
    std::string gmm_file;
    std::string bridge_cmd;
    std::optional<std::int64_t> class_label;
    double sv_threshold = 0.0;
    std::string mask;
    std::string schedule_file;  ///< empty: built-in linear-β schedule
    std::string input;
    std::string outdir = "out";
    double std_scale = 4.0;
    std::vector<double> eta_grid{0.7, 0.8, 0.9, 1.0};
    std::vector<EtaB> eta_b_grid{EtaB::fixed(0.7), EtaB::fixed(0.8), EtaB::fixed(0.9),
                                 EtaB::fixed(1.0)};

    std::string to_text() const;

    /// Applies `key = value` lines on top of `base`; unknown keys are errors.
    static RunConfig parse(const std::string& text, RunConfig base);
    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::filesystem::path& path, RunConfig base);

    /// Applies one setting; throws ContractError on unknown keys or malformed values.
    void set(const std::string& key, const std::string& value);

    /// Range checks that need no file access.
    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

/// "theorem" or a number.
EtaB parse_eta_b(const std::string& text);
std::string format_eta_b(const EtaB& eta_b);

/// Shortest text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& key, const std::string& text);

const std::vector<std::string>& preset_names();

}  // namespace ddrm
