// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/imaging.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace ddrm {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractError("cannot open image " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ImageTensor decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw ContractError("cannot decode PNG " + name + ": " + image.message);
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const Index channels = color ? 3 : 1;
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw ContractError("cannot decode PNG " + name + ": " + msg);
    }
    ImageTensor out(channels, image.height, image.width);
    const Index plane = out.height * out.width;
    for (Index p = 0; p < plane; ++p)
        for (Index c = 0; c < channels; ++c)
            out.data[c * plane + p] = pixels[static_cast<std::size_t>(p * channels + c)] / 255.0;
    return out;
}

// Binary PGM (P5) / PPM (P6) with maxval <= 255.
ImageTensor decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    std::size_t pos = 2;
    auto next_int = [&]() -> long {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        long v = 0;
        bool any = false;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            any = true;
        }
        if (!any) throw ContractError("malformed PNM header in " + name);
        return v;
    };
    const Index channels = bytes[1] == '6' ? 3 : 1;
    const long width = next_int();
    const long height = next_int();
    const long maxval = next_int();
    ++pos;  // single whitespace before the raster
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
        throw ContractError("unsupported PNM geometry or maxval in " + name);
    ImageTensor out(channels, height, width);
    const Index plane = out.height * out.width;
    if (bytes.size() < pos + static_cast<std::size_t>(plane * channels))
        throw ContractError("truncated PNM raster in " + name);
    for (Index p = 0; p < plane; ++p)
        for (Index c = 0; c < channels; ++c)
            out.data[c * plane + p] =
                bytes[pos + static_cast<std::size_t>(p * channels + c)] / static_cast<double>(maxval);
    return out;
}

std::vector<double> gaussian_window_1d() {
    std::vector<double> w(11);
    double total = 0.0;
    for (int i = 0; i < 11; ++i) {
        const double d = i - 5;
        w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        total += w[static_cast<std::size_t>(i)];
    }
    for (double& v : w) v /= total;
    return w;
}

// Valid-region separable filtering of one h x w plane.
std::vector<double> filter_valid(const std::vector<double>& img, Index h, Index w,
                                 const std::vector<double>& k) {
    const auto taps = static_cast<Index>(k.size());
    const Index oh = h - taps + 1;
    const Index ow = w - taps + 1;
    std::vector<double> rows(static_cast<std::size_t>(h * ow));
    for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (Index t = 0; t < taps; ++t)
                acc += k[static_cast<std::size_t>(t)] * img[static_cast<std::size_t>(y * w + x + t)];
            rows[static_cast<std::size_t>(y * ow + x)] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(oh * ow));
    for (Index y = 0; y < oh; ++y)
        for (Index x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (Index t = 0; t < taps; ++t)
                acc += k[static_cast<std::size_t>(t)] * rows[static_cast<std::size_t>((y + t) * ow + x)];
            out[static_cast<std::size_t>(y * ow + x)] = acc;
        }
    return out;
}

}  // namespace

ImageTensor::ImageTensor(Index c, Index h, Index w) : ImageTensor(c, h, w, Vector::Zero(c * h * w)) {}

ImageTensor::ImageTensor(Index c, Index h, Index w, Vector values)
    : channels(c), height(h), width(w), data(std::move(values)) {
    require(c > 0 && h > 0 && w > 0, "image dimensions must be positive");
    require_size("image data", c * h * w, data.size());
}

ImageTensor load_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0)
        return decode_png(bytes, path.string());
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
        return decode_pnm(bytes, path.string());
    throw ContractError("unsupported image format: " + path.string());
}

std::uint8_t to_byte(double v) {
    const double c = std::clamp(v, 0.0, 1.0) * 255.0;
    return static_cast<std::uint8_t>(std::floor(c + 0.5));
}

std::vector<std::uint8_t> encode_png(const ImageTensor& img) {
    require(img.channels == 1 || img.channels == 3, "PNG export supports 1 or 3 channels");
    const Index plane = img.height * img.width;
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(img.size()));
    for (Index p = 0; p < plane; ++p)
        for (Index c = 0; c < img.channels; ++c)
            pixels[static_cast<std::size_t>(p * img.channels + c)] = to_byte(img.data[c * plane + p]);

    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr))
        throw Error(std::string("PNG encoding failed: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr))
        throw Error(std::string("PNG encoding failed: ") + image.message);
    out.resize(size);
    return out;
}

void save_png(const std::filesystem::path& path, const ImageTensor& image) {
    const auto bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write " + path.string());
}

Vector degrade(const ImageTensor& x, const SvdOperator& op, double sigma_y,
               const NoiseStream& noise) {
    require_size("degrade", op.n(), x.size());
    require(sigma_y >= 0.0, "sigma_y must be >= 0");
    Vector y = op.apply(x.data);
    if (sigma_y > 0.0) y += sigma_y * noise.normals(NoiseDomain::measurement, 0, y.size());
    return y;
}

double psnr(const Vector& x, const Vector& ref) {
    require_size("psnr", ref.size(), x.size());
    require(x.size() > 0, "psnr of empty images");
    const double mse = (x - ref).squaredNorm() / static_cast<double>(x.size());
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

double psnr(const ImageTensor& x, const ImageTensor& ref) {
    require(x.same_shape(ref), "psnr: image shapes differ");
    return psnr(x.data, ref.data);
}

double ssim(const ImageTensor& x, const ImageTensor& ref) {
    require(x.same_shape(ref), "ssim: image shapes differ");
    require(x.height >= 11 && x.width >= 11, "ssim needs images of at least 11x11");
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const auto k = gaussian_window_1d();
    const Index h = x.height, w = x.width, plane = h * w;
    double total = 0.0;
    for (Index c = 0; c < x.channels; ++c) {
        std::vector<double> a(static_cast<std::size_t>(plane)), b(a.size()), aa(a.size()),
            bb(a.size()), ab(a.size());
        for (Index p = 0; p < plane; ++p) {
            const double u = x.data[c * plane + p], v = ref.data[c * plane + p];
            const auto i = static_cast<std::size_t>(p);
            a[i] = u;
            b[i] = v;
            aa[i] = u * u;
            bb[i] = v * v;
            ab[i] = u * v;
        }
        const auto mu_a = filter_valid(a, h, w, k), mu_b = filter_valid(b, h, w, k);
        const auto e_aa = filter_valid(aa, h, w, k), e_bb = filter_valid(bb, h, w, k),
                   e_ab = filter_valid(ab, h, w, k);
        double sum = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double va = e_aa[i] - mu_a[i] * mu_a[i];
            const double vb = e_bb[i] - mu_b[i] * mu_b[i];
            const double cov = e_ab[i] - mu_a[i] * mu_b[i];
            sum += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
                   ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
        }
        total += sum / static_cast<double>(mu_a.size());
    }
    return total / static_cast<double>(x.channels);
}

Aggregate aggregate(std::span<const ImageTensor> samples, double std_scale) {
    require(samples.size() >= 2, "aggregate needs at least two samples");
    const ImageTensor& first = samples.front();
    for (const auto& s : samples) require(s.same_shape(first), "aggregate: sample shapes differ");
    const auto count = static_cast<double>(samples.size());
    Vector mean = Vector::Zero(first.size());
    for (const auto& s : samples) mean += s.data;
    mean /= count;
    Vector var = Vector::Zero(first.size());
    for (const auto& s : samples) var += (s.data - mean).cwiseAbs2();
    var /= count - 1.0;
    return {ImageTensor(first.channels, first.height, first.width, mean),
            ImageTensor(first.channels, first.height, first.width, std_scale * var.cwiseSqrt())};
}

std::vector<Index> random_half_mask(Index side, Index channels, const NoiseStream& noise) {
    require(side > 0 && channels > 0, "mask needs positive side and channels");
    const Index plane = side * side;
    require(plane < (Index{1} << 32), "mask too large");
    std::vector<Index> pixels(static_cast<std::size_t>(plane));
    std::iota(pixels.begin(), pixels.end(), Index{0});
    // Fisher-Yates driven by the counter-based stream.
    for (Index i = plane - 1; i > 0; --i) {
        const std::uint64_t r = noise.bits(NoiseDomain::selection, 0, static_cast<std::uint64_t>(i));
        // Multiply-shift range reduction on the top 32 bits; plane < 2^32.
        const auto j = static_cast<Index>(((r >> 32) * static_cast<std::uint64_t>(i + 1)) >> 32);
        std::swap(pixels[static_cast<std::size_t>(i)], pixels[static_cast<std::size_t>(j)]);
    }
    pixels.resize(static_cast<std::size_t>(plane / 2));
    std::sort(pixels.begin(), pixels.end());
    std::vector<Index> kept;
    kept.reserve(pixels.size() * static_cast<std::size_t>(channels));
    for (Index c = 0; c < channels; ++c)
        for (Index p : pixels) kept.push_back(c * plane + p);
    return kept;
}

std::vector<Index> mask_from_image(const ImageTensor& mask, Index channels) {
    require(channels > 0, "mask needs positive channel count");
    const Index plane = mask.height * mask.width;
    std::vector<Index> kept;
    for (Index c = 0; c < channels; ++c) {
        for (Index p = 0; p < plane; ++p) {
            bool dropped = false;
            for (Index mc = 0; mc < mask.channels; ++mc) dropped |= mask.data[mc * plane + p] > 0.0;
            if (!dropped) kept.push_back(c * plane + p);
        }
    }
    return kept;
}

}  // namespace ddrm
