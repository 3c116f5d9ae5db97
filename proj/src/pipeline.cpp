// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/pipeline.hpp"

#include "ddrm/bridge.hpp"
#include "ddrm/sampler.hpp"

#include "json.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace ddrm {

namespace {

void require_square(const std::string& deg, Index height, Index width) {
    require(height == width, "preset " + deg + " needs a square image, got " +
                                 std::to_string(height) + "x" + std::to_string(width));
}

OperatorPtr preset_operator(const RunConfig& cfg, Index channels, Index height, Index width,
                            double sv_threshold) {
    const std::string& deg = cfg.deg;
    const Index n = channels * height * width;
    if (deg == "denoise") return build_denoising(n);
    if (deg == "inpaint") {
        const ImageTensor mask = load_image(cfg.mask);
        require(mask.height == height && mask.width == width,
                "mask size " + std::to_string(mask.height) + "x" + std::to_string(mask.width) +
                    " does not match the image");
        const auto kept = mask_from_image(mask, channels);
        return build_inpainting(n, kept);
    }
    require_square(deg, height, width);
    const Index side = height;
    if (deg == "inpaint_rand50") {
        const auto kept = random_half_mask(side, channels, NoiseStream(cfg.seed));
        return build_inpainting(n, kept);
    }
    if (deg.rfind("sr", 0) == 0) {
        const Index factor = std::stoi(deg.substr(2));
        require(side % factor == 0, "image side " + std::to_string(side) +
                                        " is not divisible by " + std::to_string(factor));
        return build_block_sr(side, factor, channels);
    }
    if (deg == "bicubic_sr4") {
        require(side % 4 == 0, "image side must be divisible by 4 for bicubic_sr4");
        return build_bicubic_sr(side, 4, channels);
    }
    if (deg == "deblur_uni") {
        const auto k = uniform_kernel(9);
        return build_sep_blur(side, channels, k, k, sv_threshold);
    }
    if (deg == "deblur_aniso") {
        const Index max_radius = (side - 1) / 2;
        const auto horizontal = gaussian_kernel(20.0, max_radius);
        const auto vertical = gaussian_kernel(1.0, max_radius);
        return build_sep_blur(side, channels, horizontal, vertical, sv_threshold);
    }
    if (deg == "color") {
        require(channels == 3, "preset color needs an RGB image");
        return build_colorization(side, channels);
    }
    throw ContractError("unknown degradation preset '" + deg + "'");
}

ImageTensor as_image(const ImageTensor& shape, Vector data) {
    return ImageTensor(shape.channels, shape.height, shape.width, std::move(data));
}

Vector run_sample(const ProblemInstance& problem, const DenoiserFactory& factory,
                  const SigmaSchedule& schedule, DdrmParams params) {
    auto denoiser = factory();
    return run(problem, *denoiser, schedule, params);
}

std::string metric_text(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

PresetOperators build_preset(const RunConfig& config, Index channels, Index height, Index width) {
    PresetOperators ops;
    ops.measure = preset_operator(config, channels, height, width, 0.0);
    ops.restore = config.sv_threshold > 0.0
                      ? preset_operator(config, channels, height, width, config.sv_threshold)
                      : ops.measure;
    return ops;
}

SigmaSchedule load_schedule(const RunConfig& config) {
    if (config.schedule_file.empty()) return SigmaSchedule::linear_beta();
    return SigmaSchedule::load(config.schedule_file);
}

DenoiserFactory make_denoiser_factory(const RunConfig& config, const ImageTensor& shape) {
    if (config.denoiser == "gaussian") {
        const double mu = config.mu, tau = config.tau;
        return [mu, tau] { return std::make_unique<GaussianDenoiser>(mu, tau); };
    }
    if (config.denoiser == "gmm") {
        auto gmm = std::make_shared<const GmmDenoiser>(GmmDenoiser::load(config.gmm_file));
        return [gmm] { return std::make_unique<GmmDenoiser>(*gmm); };
    }
    require(config.denoiser == "external", "unknown denoiser '" + config.denoiser + "'");
    require_square("with an external denoiser,", shape.height, shape.width);
    const std::string cmd = config.bridge_cmd;
    const Index n = shape.size();
    const auto channels = static_cast<std::uint32_t>(shape.channels);
    const auto side = static_cast<std::uint32_t>(shape.height);
    return [cmd, n, channels, side] {
        return std::make_unique<ExternalDenoiser>(cmd, n, channels, side);
    };
}

int thread_count_from_env() {
    if (const char* env = std::getenv("DDRM_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

RestoreResult restore(const RunConfig& config, const ImageTensor& original, int threads) {
    config.validate();
    require(threads >= 1, "thread count must be >= 1");
    const SigmaSchedule schedule = load_schedule(config);
    const PresetOperators ops =
        build_preset(config, original.channels, original.height, original.width);
    const DenoiserFactory factory = make_denoiser_factory(config, original);

    const NoiseStream noise(config.seed);
    const Vector y = degrade(original, *ops.measure, config.sigma_y, noise);
    const ProblemInstance problem(ops.restore, y, config.sigma_y);

    DdrmParams params;
    params.eta = config.eta;
    params.eta_b = config.eta_b;
    params.timesteps = subsample(schedule.max_step(), config.steps);
    params.class_label = config.class_label;
    try {
        validate(problem, schedule, params);
    } catch (const ContractError& e) {
        const double sigma_max = schedule.sigma(params.timesteps.back());
        const double s_max = ops.measure->singulars()[0];
        if (problem.min_sigma_max() <= sigma_max || s_max <= 0.0) throw;
        std::ostringstream msg;
        msg << e.what() << " (sv_threshold >= " << config.sigma_y / (sigma_max * s_max)
            << " satisfies the bound)";
        throw ContractError(msg.str());
    }

    const auto count = static_cast<std::size_t>(config.samples);
    std::vector<Vector> outputs(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < count; k = next++) {
            try {
                DdrmParams p = params;
                p.seed = config.seed ^ static_cast<std::uint64_t>(k);
                outputs[k] = run_sample(problem, factory, schedule, p);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const auto pool_size = std::min<std::size_t>(count, static_cast<std::size_t>(threads));
    if (pool_size <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < pool_size; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    RestoreResult result;
    result.original = original;
    result.degraded = as_image(original, ops.restore->pseudo_inverse(y));
    for (auto& v : outputs) result.samples.push_back(as_image(original, std::move(v)));
    if (count > 1) result.aggregate = aggregate(result.samples, config.std_scale);

    const bool with_ssim = original.height >= 11 && original.width >= 11;
    auto& m = result.metrics;
    m.emplace_back("psnr_degraded", psnr(result.degraded, original));
    if (with_ssim) m.emplace_back("ssim_degraded", ssim(result.degraded, original));
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double p = psnr(result.samples[k], original);
        psnr_sum += p;
        m.emplace_back("psnr_sample_" + std::to_string(k), p);
        if (with_ssim) {
            const double s = ssim(result.samples[k], original);
            ssim_sum += s;
            m.emplace_back("ssim_sample_" + std::to_string(k), s);
        }
    }
    m.emplace_back("psnr_avg", psnr_sum / static_cast<double>(count));
    if (with_ssim) m.emplace_back("ssim_avg", ssim_sum / static_cast<double>(count));
    if (result.aggregate) m.emplace_back("psnr_mean_image", psnr(result.aggregate->mean, original));
    return result;
}

void write_restore_outputs(const RunConfig& config, const RestoreResult& result) {
    namespace fs = std::filesystem;
    const fs::path dir = config.outdir;
    const bool created = !fs::exists(dir);
    std::vector<fs::path> written;
    auto write_text = [&](const std::string& name, const std::string& text) {
        const fs::path path = dir / name;
        written.push_back(path);
        std::ofstream out(path, std::ios::binary);
        out << text;
        if (!out) throw Error("cannot write " + path.string());
    };
    auto write_png = [&](const std::string& name, const ImageTensor& image) {
        const fs::path path = dir / name;
        written.push_back(path);
        save_png(path, image);
    };
    try {
        fs::create_directories(dir);
        write_png("orig.png", result.original);
        write_png("degraded.png", result.degraded);
        for (std::size_t k = 0; k < result.samples.size(); ++k)
            write_png("sample_" + std::to_string(k) + ".png", result.samples[k]);
        if (result.aggregate) {
            write_png("mean.png", result.aggregate->mean);
            write_png("std.png", result.aggregate->std);
        }
        std::string text;
        nlohmann::ordered_json json = nlohmann::ordered_json::object();
        for (const auto& [name, value] : result.metrics) {
            text += name + "=" + metric_text(value) + "\n";
            json[name] = value;
        }
        write_text("metrics.txt", text);
        write_text("metrics.json", json.dump(2) + "\n");
        write_text("config.resolved.ini", config.to_text());
    } catch (...) {
        std::error_code ec;
        for (const auto& path : written)
            if (fs::is_regular_file(path, ec)) fs::remove(path, ec);
        if (created) fs::remove(dir, ec);
        throw;
    }
}

std::vector<SweepRow> sweep(const RunConfig& config, const ImageTensor& original, int threads) {
    config.validate();
    std::vector<SweepRow> rows;
    for (double eta : config.eta_grid) {
        for (const EtaB& eta_b : config.eta_b_grid) {
            RunConfig cfg = config;
            cfg.eta = eta;
            cfg.eta_b = eta_b;
            const RestoreResult r = restore(cfg, original, threads);
            double value = 0.0;
            for (const auto& [name, v] : r.metrics)
                if (name == "psnr_avg") value = v;
            rows.push_back({eta, eta_b, value});
        }
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "eta,etab,psnr\n";
    for (const auto& r : rows)
        out += format_double(r.eta) + "," + format_eta_b(r.eta_b) + "," + metric_text(r.psnr) + "\n";
    return out;
}

}  // namespace ddrm
