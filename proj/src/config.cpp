// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ddrm {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
    T v{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty())
        throw ContractError("invalid integer for " + key + ": '" + text + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty() || !std::isfinite(v))
        throw ContractError("invalid number for " + key + ": '" + text + "'");
    return v;
}

EtaB parse_eta_b(const std::string& text) {
    if (text == "theorem") return EtaB::theorem();
    return EtaB::fixed(parse_double("etab", text));
}

std::string format_eta_b(const EtaB& eta_b) {
    return eta_b.mode == EtaB::Mode::theorem ? "theorem" : format_double(eta_b.value);
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{
        "sr2",        "sr4",          "sr8",   "sr16",   "bicubic_sr4",    "deblur_uni",
        "deblur_aniso", "color",      "inpaint", "inpaint_rand50", "denoise"};
    return names;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "deg") {
        deg = value;
    } else if (key == "sigma_y") {
        sigma_y = parse_double(key, value);
    } else if (key == "eta") {
        eta = parse_double(key, value);
    } else if (key == "etab") {
        eta_b = parse_eta_b(value);
    } else if (key == "steps") {
        steps = parse_integer<int>(key, value);
    } else if (key == "seed") {
        seed = parse_integer<std::uint64_t>(key, value);
    } else if (key == "samples") {
        samples = parse_integer<int>(key, value);
    } else if (key == "denoiser") {
        denoiser = value;
    } else if (key == "tau") {
        tau = parse_double(key, value);
    } else if (key == "mu") {
        mu = parse_double(key, value);
    } else if (key == "gmm_file") {
        gmm_file = value;
    } else if (key == "bridge_cmd") {
        bridge_cmd = value;
    } else if (key == "class_label") {
        if (value.empty())
            class_label.reset();
        else
            class_label = parse_integer<std::int64_t>(key, value);
    } else if (key == "sv_threshold") {
        sv_threshold = parse_double(key, value);
    } else if (key == "mask") {
        mask = value;
    } else if (key == "schedule_file") {
        schedule_file = value;
    } else if (key == "input") {
        input = value;
    } else if (key == "outdir") {
        outdir = value;
    } else if (key == "std_scale") {
        std_scale = parse_double(key, value);
    } else if (key == "eta_grid") {
        eta_grid.clear();
        for (const auto& item : split_list(value)) eta_grid.push_back(parse_double(key, item));
    } else if (key == "etab_grid") {
        eta_b_grid.clear();
        for (const auto& item : split_list(value)) eta_b_grid.push_back(parse_eta_b(item));
    } else {
        throw ContractError("unknown config key '" + key + "'");
    }
}

std::string RunConfig::to_text() const {
    std::ostringstream out;
    auto kv = [&out](const char* key, const std::string& value) {
        out << key << " = " << value << '\n';
    };
    kv("deg", deg);
    kv("sigma_y", format_double(sigma_y));
    kv("eta", format_double(eta));
    kv("etab", format_eta_b(eta_b));
    kv("steps", std::to_string(steps));
    kv("seed", std::to_string(seed));
    kv("samples", std::to_string(samples));
    kv("denoiser", denoiser);
    kv("tau", format_double(tau));
    kv("mu", format_double(mu));
    kv("gmm_file", gmm_file);
    kv("bridge_cmd", bridge_cmd);
    kv("class_label", class_label ? std::to_string(*class_label) : std::string());
    kv("sv_threshold", format_double(sv_threshold));
    kv("mask", mask);
    kv("schedule_file", schedule_file);
    kv("input", input);
    kv("outdir", outdir);
    kv("std_scale", format_double(std_scale));
    std::string grid;
    for (std::size_t i = 0; i < eta_grid.size(); ++i)
        grid += (i ? "," : "") + format_double(eta_grid[i]);
    kv("eta_grid", grid);
    grid.clear();
    for (std::size_t i = 0; i < eta_b_grid.size(); ++i)
        grid += (i ? "," : "") + format_eta_b(eta_b_grid[i]);
    kv("etab_grid", grid);
    return out.str();
}

RunConfig RunConfig::parse(const std::string& text, RunConfig base) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ContractError("config line " + std::to_string(lineno) + ": expected key = value");
        base.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return base;
}

RunConfig RunConfig::parse(const std::string& text) { return parse(text, RunConfig{}); }

RunConfig RunConfig::load(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), std::move(base));
}

void RunConfig::validate() const {
    const auto& names = preset_names();
    require(std::find(names.begin(), names.end(), deg) != names.end(),
            "unknown degradation preset '" + deg + "'");
    require(sigma_y >= 0.0, "sigma_y must be >= 0");
    require(eta > 0.0 && eta <= 1.0, "eta must lie in (0, 1]");
    auto check_eta_b = [](const EtaB& e) {
        if (e.mode == EtaB::Mode::fixed)
            require(e.value >= 0.0 && e.value <= 2.0, "etab must lie in [0, 2] or be 'theorem'");
    };
    check_eta_b(eta_b);
    require(steps >= 1, "steps must be >= 1");
    require(samples >= 1, "samples must be >= 1");
    require(denoiser == "gaussian" || denoiser == "gmm" || denoiser == "external",
            "denoiser must be gaussian, gmm or external");
    if (denoiser == "gaussian") require(tau > 0.0, "tau must be > 0");
    if (denoiser == "gmm") require(!gmm_file.empty(), "denoiser gmm needs --gmm-file");
    if (denoiser == "external") require(!bridge_cmd.empty(), "denoiser external needs --bridge-cmd");
    require(sv_threshold >= 0.0 && sv_threshold < 1.0, "sv_threshold must lie in [0, 1)");
    if (deg == "inpaint") require(!mask.empty(), "preset inpaint needs --mask");
    require(std_scale > 0.0, "std_scale must be > 0");
    require(!eta_grid.empty() && !eta_b_grid.empty(), "sweep grids must be nonempty");
    for (double e : eta_grid) require(e > 0.0 && e <= 1.0, "eta grid values must lie in (0, 1]");
    for (const auto& e : eta_b_grid) check_eta_b(e);
    require(!outdir.empty(), "outdir must not be empty");
}

}  // namespace ddrm
