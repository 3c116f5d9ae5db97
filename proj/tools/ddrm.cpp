// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// ddrm restore | sweep | verify

#include "ddrm/config.hpp"
#include "ddrm/imaging.hpp"
#include "ddrm/pipeline.hpp"
#include "ddrm/verify/verify.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

namespace {

struct Flag {
    const char* name;
    const char* key;
    const char* help;
};

constexpr Flag kRunFlags[] = {
    {"--deg", "deg",
     "sr2|sr4|sr8|sr16|bicubic_sr4|deblur_uni|deblur_aniso|color|inpaint|inpaint_rand50|denoise"},
    {"--sigma-y", "sigma_y", "measurement noise std (default 0)"},
    {"--eta", "eta", "transition noise eta in (0, 1] (default 0.85)"},
    {"--etab", "etab", "measurement weight in [0, 2] or 'theorem' (default 1)"},
    {"--steps", "steps", "number of sampling steps (default 20)"},
    {"--seed", "seed", "base seed; sample k uses seed xor k (default 0)"},
    {"--samples", "samples", "restorations per run (default 1)"},
    {"--denoiser", "denoiser", "gaussian|gmm|external (default gaussian)"},
    {"--tau", "tau", "gaussian prior std (default 0.25)"},
    {"--mu", "mu", "gaussian prior mean (default 0.5)"},
    {"--gmm-file", "gmm_file", "mixture prior file, lines 'weight mean std'"},
    {"--bridge-cmd", "bridge_cmd", "shell command of an external denoiser server"},
    {"--class-label", "class_label", "class label forwarded to the denoiser"},
    {"--sv-threshold", "sv_threshold", "drop singular values below this fraction of the largest"},
    {"--mask", "mask", "mask image for inpaint (nonzero = dropped)"},
    {"--schedule-file", "schedule_file", "noise levels sigma_1..sigma_T, one per line"},
    {"--input", "input", "input image (PNG, PGM or PPM)"},
    {"--outdir", "outdir", "output directory (default out)"},
    {"--std-scale", "std_scale", "scale of the exported std image (default 4)"},
};

constexpr Flag kSweepFlags[] = {
    {"--eta-grid", "eta_grid", "comma-separated eta values (default 0.7,0.8,0.9,1.0)"},
    {"--etab-grid", "etab_grid", "comma-separated etab values (default 0.7,0.8,0.9,1.0)"},
};

struct RunOptions {
    std::string config_path;
    std::map<std::string, std::string> values;
};

void add_run_flags(CLI::App* app, RunOptions& opts, bool with_grid) {
    app->add_option("--config", opts.config_path, "key = value config file; flags override it");
    for (const auto& f : kRunFlags) app->add_option(f.name, opts.values[f.key], f.help);
    if (with_grid)
        for (const auto& f : kSweepFlags) app->add_option(f.name, opts.values[f.key], f.help);
}

ddrm::RunConfig resolve(const CLI::App* app, const RunOptions& opts, bool with_grid) {
    ddrm::RunConfig cfg;
    if (!opts.config_path.empty()) cfg = ddrm::RunConfig::load(opts.config_path, cfg);
    auto apply = [&](const Flag& f) {
        if (app->count(f.name) > 0) cfg.set(f.key, opts.values.at(f.key));
    };
    for (const auto& f : kRunFlags) apply(f);
    if (with_grid)
        for (const auto& f : kSweepFlags) apply(f);
    cfg.validate();
    ddrm::require(!cfg.input.empty(), "an input image is required (--input)");
    return cfg;
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

int fail(const std::string& category, const std::string& message) {
    std::cerr << "error=" << category << " message=" << one_line(message) << "\n";
    return category == "usage" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Posterior sampling for linear inverse problems with diffusion denoisers"};
    app.require_subcommand(1);

    RunOptions restore_opts;
    auto* restore = app.add_subcommand("restore", "degrade an image and sample restorations");
    add_run_flags(restore, restore_opts, false);

    RunOptions sweep_opts;
    auto* sweep = app.add_subcommand("sweep", "grid search over eta and etab, CSV output");
    add_run_flags(sweep, sweep_opts, true);

    bool quick = false;
    bool inject_fault = false;
    std::string report_path;
    auto* verify = app.add_subcommand("verify", "run the acceptance checks");
    verify->add_flag("--quick", quick, "skip the Monte Carlo checks");
    verify->add_option("--report", report_path, "write a JSON summary to this file");
    verify->add_flag("--inject-fault", inject_fault, "corrupt one operator's singular values")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    try {
        if (*restore) {
            const ddrm::RunConfig cfg = resolve(restore, restore_opts, false);
            const ddrm::ImageTensor image = ddrm::load_image(cfg.input);
            const auto result = ddrm::restore(cfg, image, ddrm::thread_count_from_env());
            ddrm::write_restore_outputs(cfg, result);
            for (const auto& [name, value] : result.metrics) std::cout << name << "=" << value << "\n";
            return 0;
        }
        if (*sweep) {
            const ddrm::RunConfig cfg = resolve(sweep, sweep_opts, true);
            const ddrm::ImageTensor image = ddrm::load_image(cfg.input);
            const auto rows = ddrm::sweep(cfg, image, ddrm::thread_count_from_env());
            const std::string csv = ddrm::sweep_csv(rows);
            std::filesystem::create_directories(cfg.outdir);
            const auto path = std::filesystem::path(cfg.outdir) / "sweep.csv";
            std::ofstream out(path);
            out << csv;
            if (!out) throw ddrm::Error("cannot write " + path.string());
            std::cout << csv;
            return 0;
        }
        ddrm::verify::Options options;
        options.quick = quick;
        options.corrupt_singulars = inject_fault;
        options.threads = std::max(2, ddrm::thread_count_from_env());
        const auto results = ddrm::verify::run_all(options);
        std::cout << ddrm::verify::format_report(results);
        if (!report_path.empty()) {
            std::ofstream out(report_path);
            out << ddrm::verify::report_json(results);
            if (!out) throw ddrm::Error("cannot write " + report_path);
        }
        return ddrm::verify::all_passed(results) ? 0 : 1;
    } catch (const ddrm::ContractError& e) {
        return fail("invalid", e.what());
    } catch (const std::exception& e) {
        return fail("runtime", e.what());
    }
}
