// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ddrm/config.hpp"
#include "ddrm/denoiser.hpp"
#include "ddrm/imaging.hpp"
#include "ddrm/linops.hpp"
#include "ddrm/schedule.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ddrm {

/*
 * The measurement is taken with the exact operator; the sampler uses the
 * operator with singular values below sv_threshold * s_max removed. Both
 * share U and V, so they differ only in which components count as observed.
 */
struct PresetOperators {
    OperatorPtr measure;
    OperatorPtr restore;
};

PresetOperators build_preset(const RunConfig& config, Index channels, Index height, Index width);

SigmaSchedule load_schedule(const RunConfig& config);

using DenoiserFactory = std::function<std::unique_ptr<Denoiser>()>;

/// Reads any denoiser files up front; each call of the factory yields a fresh instance.
DenoiserFactory make_denoiser_factory(const RunConfig& config, const ImageTensor& shape);

/// DDRM_THREADS if set to a positive integer, else the hardware concurrency.
int thread_count_from_env();

using Metrics = std::vector<std::pair<std::string, double>>;

struct RestoreResult {
    ImageTensor original;
    ImageTensor degraded;  ///< H†y
    std::vector<ImageTensor> samples;
    std::optional<Aggregate> aggregate;
    Metrics metrics;
};

/// Degrades `original`, samples config.samples restorations and scores them.
RestoreResult restore(const RunConfig& config, const ImageTensor& original, int threads);

/*
 * Writes orig/degraded/sample_<k>/mean/std PNGs, metrics.txt, metrics.json and
 * config.resolved.ini into config.outdir. Files written before a failure are
 * removed again.
 */
void write_restore_outputs(const RunConfig& config, const RestoreResult& result);

struct SweepRow {
    double eta;
    EtaB eta_b;
    double psnr;
};

std::vector<SweepRow> sweep(const RunConfig& config, const ImageTensor& original, int threads);

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace ddrm
