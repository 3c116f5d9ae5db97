// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/pipeline.hpp"

#include "doctest.h"
#include "support/helpers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace ddrm;
namespace fs = std::filesystem;

namespace {

ImageTensor smooth_image(Index channels, Index side) {
    ImageTensor img(channels, side, side);
    for (Index c = 0; c < channels; ++c)
        for (Index y = 0; y < side; ++y)
            for (Index x = 0; x < side; ++x)
                img.at(c, y, x) = 0.5 + 0.3 * std::sin(0.3 * x + 0.2 * y + static_cast<double>(c));
    return img;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

double metric(const Metrics& m, const std::string& name) {
    for (const auto& [key, value] : m)
        if (key == name) return value;
    FAIL("missing metric " << name);
    return 0.0;
}

}  // namespace

TEST_CASE("presets build operators of the right shape") {
    RunConfig cfg;
    for (const auto& name : preset_names()) {
        if (name == "inpaint") continue;
        CAPTURE(name);
        cfg.deg = name;
        const PresetOperators ops = build_preset(cfg, 3, 16, 16);
        CHECK(ops.measure->n() == 768);
        CHECK(ops.restore == ops.measure);
    }
    cfg.deg = "sr4";
    CHECK(build_preset(cfg, 3, 16, 16).measure->m() == 48);
    cfg.deg = "color";
    CHECK_THROWS_AS(build_preset(cfg, 1, 16, 16), ContractError);
    cfg.deg = "sr2";
    CHECK_THROWS_AS(build_preset(cfg, 3, 16, 8), ContractError);
    cfg.deg = "denoise";
    CHECK(build_preset(cfg, 1, 4, 9).measure->n() == 36);
    cfg.deg = "deblur_uni";
    cfg.sv_threshold = 0.05;
    const PresetOperators ops = build_preset(cfg, 1, 16, 16);
    CHECK(ops.restore->rank() < ops.measure->rank());
}

TEST_CASE("inpaint preset reads the mask") {
    ddrm::testing::TempDir dir("mask");
    ImageTensor mask(1, 8, 8);
    mask.data.setZero();
    for (Index x = 0; x < 8; ++x) mask.at(0, 3, x) = 1.0;
    save_png(dir / "mask.png", mask);
    RunConfig cfg;
    cfg.deg = "inpaint";
    cfg.mask = (dir / "mask.png").string();
    CHECK(build_preset(cfg, 3, 8, 8).measure->m() == 3 * 56);
    CHECK_THROWS_AS(build_preset(cfg, 3, 8, 9), ContractError);
    cfg.deg = "inpaint_rand50";
    CHECK(build_preset(cfg, 3, 8, 8).measure->m() == 3 * 32);
}

TEST_CASE("noiseless denoising returns the input") {
    RunConfig cfg;
    ImageTensor img = smooth_image(3, 12);
    for (Index i = 0; i < img.size(); ++i) img.data[i] = to_byte(img.data[i]) / 255.0;
    const RestoreResult r = restore(cfg, img, 1);
    REQUIRE(r.samples.size() == 1);
    for (Index i = 0; i < img.size(); ++i) CHECK(to_byte(r.samples[0].data[i]) == to_byte(img.data[i]));
    CHECK_FALSE(r.aggregate.has_value());
}

TEST_CASE("several samples") {
    RunConfig cfg;
    cfg.deg = "sr4";
    cfg.sigma_y = 0.05;
    cfg.samples = 3;
    cfg.seed = 11;
    const ImageTensor img = smooth_image(3, 16);
    const RestoreResult a = restore(cfg, img, 1);
    REQUIRE(a.samples.size() == 3);
    CHECK(a.samples[0].data != a.samples[1].data);
    CHECK(a.samples[1].data != a.samples[2].data);
    REQUIRE(a.aggregate.has_value());
    CHECK(metric(a.metrics, "psnr_mean_image") > 0.0);
    CHECK(metric(a.metrics, "ssim_avg") <= 1.0);

    const RestoreResult b = restore(cfg, img, 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(a.samples[k].data == b.samples[k].data);

}

TEST_CASE("outputs") {
    ddrm::testing::TempDir dir("out");
    RunConfig cfg;
    cfg.deg = "sr2";
    cfg.sigma_y = 0.02;
    cfg.samples = 2;
    cfg.outdir = (dir / "run").string();
    const ImageTensor img = smooth_image(3, 16);
    write_restore_outputs(cfg, restore(cfg, img, 2));
    for (const char* name : {"orig.png", "degraded.png", "sample_0.png", "sample_1.png", "mean.png",
                             "std.png", "metrics.txt", "metrics.json", "config.resolved.ini"})
        CHECK(fs::exists(dir / "run" / name));
    CHECK(slurp(dir / "run" / "metrics.txt").find("psnr_avg=") != std::string::npos);
    CHECK(RunConfig::load(dir / "run" / "config.resolved.ini", RunConfig{}) == cfg);

    const std::string first = slurp(dir / "run" / "sample_1.png");
    cfg.outdir = (dir / "again").string();
    write_restore_outputs(cfg, restore(cfg, img, 1));
    CHECK(slurp(dir / "again" / "sample_1.png") == first);
    CHECK(slurp(dir / "again" / "metrics.json") == slurp(dir / "run" / "metrics.json"));
}

TEST_CASE("failed writes leave nothing behind") {
    ddrm::testing::TempDir dir("partial");
    RunConfig cfg;
    const RestoreResult r = restore(cfg, smooth_image(1, 8), 1);

    fs::create_directories(dir / "blocked" / "metrics.json" / "keep");
    cfg.outdir = (dir / "blocked").string();
    CHECK_THROWS(write_restore_outputs(cfg, r));
    CHECK_FALSE(fs::exists(dir / "blocked" / "orig.png"));
    CHECK_FALSE(fs::exists(dir / "blocked" / "metrics.txt"));
    CHECK(fs::exists(dir / "blocked" / "metrics.json" / "keep"));

    RestoreResult bad = r;
    bad.original = ImageTensor(2, 8, 8, Vector::Zero(128));
    cfg.outdir = (dir / "fresh").string();
    CHECK_THROWS(write_restore_outputs(cfg, bad));
    CHECK_FALSE(fs::exists(dir / "fresh"));
}

TEST_CASE("guard failure suggests a threshold") {
    RunConfig cfg;
    cfg.deg = "deblur_aniso";
    const ImageTensor img = smooth_image(1, 16);
    const OperatorPtr op = build_preset(cfg, 1, 16, 16).measure;
    const double s_min = op->singulars()[op->rank() - 1];
    // Puts σ_y / s_min above the largest schedule level.
    cfg.sigma_y = 200.0 * s_min;
    std::string message;
    try {
        restore(cfg, img, 1);
    } catch (const ContractError& e) {
        message = e.what();
    }
    REQUIRE(message.find("sv_threshold >= ") != std::string::npos);
    const auto at = message.find("sv_threshold >= ") + 16;
    cfg.sv_threshold = std::stod(message.substr(at)) * 1.01;
    CHECK(restore(cfg, img, 1).samples[0].data.allFinite());
}

TEST_CASE("sweep") {
    RunConfig cfg;
    cfg.deg = "sr2";
    cfg.sigma_y = 0.05;
    cfg.seed = 5;
    const ImageTensor img = smooth_image(1, 12);
    cfg.eta_grid = {0.6};
    cfg.eta_b_grid = {EtaB::fixed(0.9)};
    const auto single = sweep(cfg, img, 1);
    REQUIRE(single.size() == 1);
    RunConfig direct = cfg;
    direct.eta = 0.6;
    direct.eta_b = EtaB::fixed(0.9);
    CHECK(single[0].psnr == metric(restore(direct, img, 1).metrics, "psnr_avg"));

    cfg.eta_grid = {0.7, 0.8, 0.9, 1.0};
    cfg.eta_b_grid = {EtaB::fixed(0.7), EtaB::fixed(0.8), EtaB::fixed(0.9), EtaB::theorem()};
    const auto rows = sweep(cfg, img, 1);
    CHECK(rows.size() == 16);
    const std::string csv = sweep_csv(rows);
    CHECK(csv.rfind("eta,etab,psnr\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
    CHECK(csv.find("theorem") != std::string::npos);
}

TEST_CASE("more measurement noise degrades the pseudo-inverse") {
    RunConfig cfg;
    cfg.deg = "sr2";
    const ImageTensor img = smooth_image(3, 12);
    double previous = 1e9;
    for (double s : {0.0, 0.01, 0.05, 0.2}) {
        cfg.sigma_y = s;
        const double p = metric(restore(cfg, img, 1).metrics, "psnr_degraded");
        CHECK(p < previous);
        previous = p;
    }
}

TEST_CASE("thread count from the environment") {
    ::setenv("DDRM_THREADS", "3", 1);
    CHECK(thread_count_from_env() == 3);
    ::setenv("DDRM_THREADS", "zero", 1);
    CHECK(thread_count_from_env() >= 1);
    ::unsetenv("DDRM_THREADS");
    CHECK(thread_count_from_env() >= 1);
}
