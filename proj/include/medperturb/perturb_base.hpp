/*******************************************************************************
* Copyright 2026 The medperturb authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string_view>

#include <opencv2/imgcodecs.hpp>

#include "medperturb/filters.hpp"
#include "medperturb/image.hpp"
#include "medperturb/io.hpp"
#include "medperturb/rng.hpp"

namespace medperturb {

/// The twelve corruptions applicable to every imaging modality.
/// Order is canonical: noise first, then degradation, then geometric.
enum class BaseKind {
    gaussian_noise,
    salt_pepper,
    speckle,
    gaussian_blur,
    motion_blur,
    brightness,
    contrast,
    jpeg_compression,
    pixelate,
    rotation,
    scaling,
    translation,
};

inline constexpr int kBaseKindCount = 12;

inline constexpr std::array<BaseKind, kBaseKindCount> all_base_kinds() {
    return {BaseKind::gaussian_noise, BaseKind::salt_pepper,      BaseKind::speckle,
            BaseKind::gaussian_blur,  BaseKind::motion_blur,      BaseKind::brightness,
            BaseKind::contrast,       BaseKind::jpeg_compression, BaseKind::pixelate,
            BaseKind::rotation,       BaseKind::scaling,          BaseKind::translation};
}

enum class BaseGroup { noise, degradation, geometric };

inline BaseGroup group_of(BaseKind kind) {
    const int i = static_cast<int>(kind);
    if (i < 3) return BaseGroup::noise;
    if (i < 9) return BaseGroup::degradation;
    return BaseGroup::geometric;
}

inline bool is_geometric(BaseKind kind) {
    return group_of(kind) == BaseGroup::geometric;
}

/// Canonical snake_case identifier used in manifests, caches, and reports.
inline std::string_view to_string(BaseKind kind) {
    switch (kind) {
        case BaseKind::gaussian_noise: return "gaussian_noise";
        case BaseKind::salt_pepper: return "salt_pepper";
        case BaseKind::speckle: return "speckle";
        case BaseKind::gaussian_blur: return "gaussian_blur";
        case BaseKind::motion_blur: return "motion_blur";
        case BaseKind::brightness: return "brightness";
        case BaseKind::contrast: return "contrast";
        case BaseKind::jpeg_compression: return "jpeg_compression";
        case BaseKind::pixelate: return "pixelate";
        case BaseKind::rotation: return "rotation";
        case BaseKind::scaling: return "scaling";
        case BaseKind::translation: return "translation";
    }
    return "";
}

inline std::optional<BaseKind> base_kind_from_string(std::string_view name) {
    for (BaseKind k : all_base_kinds())
        if (to_string(k) == name) return k;
    return std::nullopt;
}

inline void check_intensity(double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("invalid intensity: must be in [0,1]");
}

/// Seeded forward transform of the three geometric kinds. Exposed so ground
/// truth (masks, boxes) can be co-transformed with exactly the same map.
inline Affine geometric_transform(BaseKind kind, int width, int height, double t,
                                  std::uint64_t seed) {
    SplitMix64 rng(seed);
    const double cx = (width - 1) / 2.0;
    const double cy = (height - 1) / 2.0;
    switch (kind) {
        case BaseKind::rotation: {
            const int sign = rng.next_sign();
            return Affine::rotation_about(sign * 30.0 * t, cx, cy);
        }
        case BaseKind::scaling: {
            const int sign = rng.next_sign();
            return Affine::rotation_about(0.0, cx, cy, 1.0 + sign * 0.4 * t);
        }
        case BaseKind::translation: {
            const int sx = rng.next_sign();
            const int sy = rng.next_sign();
            return Affine::translation(sx * 0.25 * t * width, sy * 0.25 * t * height);
        }
        default:
            throw std::invalid_argument("geometric_transform: kind is not geometric");
    }
}

namespace detail {

inline ImageBuffer base_gaussian_noise(const ImageBuffer& img, double t, SplitMix64& rng) {
    const double sigma = 0.5 * t;
    ImageBuffer out = img;
    for (double& v : out.data) v = clamp01(v + sigma * rng.next_gaussian());
    return out;
}

inline ImageBuffer base_salt_pepper(const ImageBuffer& img, double t, SplitMix64& rng) {
    const double p = 0.3 * t;
    ImageBuffer out = img;
    for (std::size_t pix = 0; pix < img.pixel_count(); ++pix) {
        const double u = rng.next_unit();
        const double v = rng.next_unit();
        if (u < p) {
            const double value = v < 0.5 ? 0.0 : 1.0;
            for (int c = 0; c < img.channels; ++c) out.data[pix * img.channels + c] = value;
        }
    }
    return out;
}

inline ImageBuffer base_speckle(const ImageBuffer& img, double t, SplitMix64& rng) {
    const double sigma = 0.7 * t;
    ImageBuffer out = img;
    for (double& v : out.data) v = clamp01(v * (1.0 + sigma * rng.next_gaussian()));
    return out;
}

inline ImageBuffer base_motion_blur(const ImageBuffer& img, double t, SplitMix64& rng,
                                    Warnings* warnings) {
    const double angle = rng.next_in(0.0, 180.0) * M_PI / 180.0;
    int length = 1 + static_cast<int>(std::floor(30.0 * t));
    const int min_dim = std::min(img.width, img.height);
    if (length > min_dim) {
        warn(warnings, "motion blur kernel clamped from " + std::to_string(length) +
                           " to " + std::to_string(min_dim));
        length = min_dim;
    }
    if (length <= 1) return img;

    // Rasterize the line with bilinear splatting so any angle integrates to 1.
    const int k = length % 2 == 1 ? length : length + 1;
    const double center = (k - 1) / 2.0;
    std::vector<double> kernel(static_cast<std::size_t>(k) * k, 0.0);
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);
    for (int i = 0; i < length; ++i) {
        const double off = i - (length - 1) / 2.0;
        const double px = center + off * dx;
        const double py = center + off * dy;
        const int x0 = static_cast<int>(std::floor(px));
        const int y0 = static_cast<int>(std::floor(py));
        const double fx = px - x0;
        const double fy = py - y0;
        const double w = 1.0 / length;
        auto splat = [&](int x, int y, double wgt) {
            if (x >= 0 && x < k && y >= 0 && y < k)
                kernel[static_cast<std::size_t>(y) * k + x] += wgt;
        };
        splat(x0, y0, w * (1 - fx) * (1 - fy));
        splat(x0 + 1, y0, w * fx * (1 - fy));
        splat(x0, y0 + 1, w * (1 - fx) * fy);
        splat(x0 + 1, y0 + 1, w * fx * fy);
    }
    double sum = 0.0;
    for (double v : kernel) sum += v;
    for (double& v : kernel) v /= sum;
    return convolve(img, kernel, k, k);
}

inline ImageBuffer base_jpeg(const ImageBuffer& img, double t) {
    const int quality = static_cast<int>(std::lround(95.0 - 90.0 * t));
    std::vector<std::uint8_t> bytes;
    cv::imencode(".jpg", to_mat8(img), bytes, {cv::IMWRITE_JPEG_QUALITY, quality});
    cv::Mat decoded = cv::imdecode(bytes, cv::IMREAD_UNCHANGED);
    if (decoded.empty()) throw std::runtime_error("jpeg round-trip failed");
    ImageBuffer out = from_mat8(decoded, img.source_depth);
    return out;
}

inline ImageBuffer base_pixelate(const ImageBuffer& img, double t) {
    const int block = 1 + static_cast<int>(std::floor(24.0 * t));
    if (block <= 1) return img;
    ImageBuffer out = img;
    for (int by = 0; by < img.height; by += block) {
        const int y1 = std::min(by + block, img.height);
        for (int bx = 0; bx < img.width; bx += block) {
            const int x1 = std::min(bx + block, img.width);
            for (int c = 0; c < img.channels; ++c) {
                double sum = 0.0;
                for (int y = by; y < y1; ++y)
                    for (int x = bx; x < x1; ++x) sum += img.at(x, y, c);
                const double mean = sum / ((y1 - by) * (x1 - bx));
                for (int y = by; y < y1; ++y)
                    for (int x = bx; x < x1; ++x) out.at(x, y, c) = mean;
            }
        }
    }
    return out;
}

} // namespace detail

/// Apply one base corruption at intensity t in [0,1]. t = 0 is the identity
/// for every kind; equal (kind, img, t, seed) gives bit-equal output.
inline ImageBuffer apply_base(BaseKind kind, const ImageBuffer& img, double t,
                              std::uint64_t seed, Warnings* warnings = nullptr) {
    check_intensity(t);
    if (t == 0.0) return img;
    SplitMix64 rng(seed);
    switch (kind) {
        case BaseKind::gaussian_noise:
            return detail::base_gaussian_noise(img, t, rng);
        case BaseKind::salt_pepper:
            return detail::base_salt_pepper(img, t, rng);
        case BaseKind::speckle:
            return detail::base_speckle(img, t, rng);
        case BaseKind::gaussian_blur: {
            const double sigma = 8.0 * t;
            if (sigma < 0.05) return img;
            return gaussian_blur(img, sigma, warnings);
        }
        case BaseKind::motion_blur:
            return detail::base_motion_blur(img, t, rng, warnings);
        case BaseKind::brightness: {
            const int sign = rng.next_sign();
            ImageBuffer out = img;
            for (double& v : out.data) v = clamp01(v + sign * 0.6 * t);
            return out;
        }
        case BaseKind::contrast: {
            const double factor = 1.0 - 0.9 * t;
            ImageBuffer out = img;
            for (double& v : out.data) v = clamp01(0.5 + (v - 0.5) * factor);
            return out;
        }
        case BaseKind::jpeg_compression:
            return detail::base_jpeg(img, t);
        case BaseKind::pixelate:
            return detail::base_pixelate(img, t);
        case BaseKind::rotation:
        case BaseKind::scaling:
        case BaseKind::translation:
            return warp_bilinear(img, geometric_transform(kind, img.width, img.height, t, seed)
                                          .inverse());
    }
    throw std::invalid_argument("unknown base kind");
}

} // namespace medperturb
