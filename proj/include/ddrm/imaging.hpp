// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ddrm/linops.hpp"
#include "ddrm/rng.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace ddrm {

/// Planar (C, H, W) image, row-major within a channel, values nominally in [0, 1].
struct ImageTensor {
    Index channels = 0;
    Index height = 0;
    Index width = 0;
    Vector data;

    ImageTensor() = default;
    ImageTensor(Index c, Index h, Index w);
    ImageTensor(Index c, Index h, Index w, Vector values);

    Index size() const { return channels * height * width; }
    double& at(Index c, Index y, Index x) { return data[(c * height + y) * width + x]; }
    double at(Index c, Index y, Index x) const { return data[(c * height + y) * width + x]; }
    bool same_shape(const ImageTensor& other) const {
        return channels == other.channels && height == other.height && width == other.width;
    }
};

/// PNG (gray, gray+alpha, RGB, RGBA, palette; 8 or 16 bit) or binary PGM/PPM.
/// Alpha is dropped. Values become byte / 255.
ImageTensor load_image(const std::filesystem::path& path);

/// 8-bit PNG, gray for one channel and RGB for three.
void save_png(const std::filesystem::path& path, const ImageTensor& image);

/// Encodes to PNG bytes in memory; identical input gives identical bytes.
std::vector<std::uint8_t> encode_png(const ImageTensor& image);

/// round(clamp(v, 0, 1) * 255), halves away from zero.
std::uint8_t to_byte(double v);

/// y = Hx + σ_y ε with ε drawn from the measurement domain of `noise`.
Vector degrade(const ImageTensor& x, const SvdOperator& op, double sigma_y,
               const NoiseStream& noise);

/// 10 log10(1 / MSE); 100 dB when MSE < 1e-10.
double psnr(const ImageTensor& x, const ImageTensor& ref);
double psnr(const Vector& x, const Vector& ref);

/// Gaussian-window SSIM (11x11, σ = 1.5, K1 = 0.01, K2 = 0.03, L = 1) over
/// valid window positions, averaged over channels.
double ssim(const ImageTensor& x, const ImageTensor& ref);

struct Aggregate {
    ImageTensor mean;
    ImageTensor std;  ///< sample std (N - 1), multiplied by the scale factor
};

Aggregate aggregate(std::span<const ImageTensor> samples, double std_scale = 4.0);

/// Scalars kept when a random half of the pixel locations is dropped.
std::vector<Index> random_half_mask(Index side, Index channels, const NoiseStream& noise);

/// Scalars kept by a mask image: nonzero mask pixels are dropped in every channel.
std::vector<Index> mask_from_image(const ImageTensor& mask, Index channels);

}  // namespace ddrm
