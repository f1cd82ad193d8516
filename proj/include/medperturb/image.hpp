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

#include <cstdint>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "medperturb/common.hpp"
#include "medperturb/rng.hpp"

namespace medperturb {

/// Canonical raster every perturbation transforms: row-major interleaved
/// real samples in [0,1], 1 (gray) or 3 (RGB) channels. All perturbation
/// math happens on these values; quantization occurs only at save time.
/// source_depth records the bits-per-sample of the decoded file (metadata).
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 1;
    int source_depth = 8;
    std::vector<double> data;

    static ImageBuffer filled(int w, int h, int c, double value = 0.0) {
        ImageBuffer img;
        img.width = w;
        img.height = h;
        img.channels = c;
        img.data.assign(static_cast<std::size_t>(w) * h * c, value);
        img.validate();
        return img;
    }

    double& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * height;
    }

    bool same_shape(const ImageBuffer& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }

    /// Throws on invariant violations. Calibration and the pipeline require
    /// width/height >= 8 on top of this (SSIM window); tiny buffers are still
    /// legal to hold so codec edge cases stay testable.
    void validate() const {
        if (width < 1 || height < 1)
            throw std::invalid_argument("ImageBuffer: zero-area image");
        if (channels != 1 && channels != 3)
            throw std::invalid_argument("ImageBuffer: channels must be 1 or 3");
        if (data.size() != static_cast<std::size_t>(width) * height * channels)
            throw std::invalid_argument("ImageBuffer: data length does not match dimensions");
        for (double v : data) {
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument("ImageBuffer: sample outside [0,1]");
        }
    }
};

/// Rec.601 luminance; 1-channel input passes through unchanged.
inline ImageBuffer to_luminance(const ImageBuffer& img) {
    if (img.channels == 1) return img;
    ImageBuffer out;
    out.width = img.width;
    out.height = img.height;
    out.channels = 1;
    out.source_depth = img.source_depth;
    out.data.resize(img.pixel_count());
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        const double* px = &img.data[p * 3];
        out.data[p] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
    return out;
}

/// Content hash over dimensions and raw sample bits, hex-encoded.
/// Used as the image key of calibration cache entries.
inline std::string content_hash(const ImageBuffer& img) {
    std::uint64_t h = fnv1a64(std::to_string(img.width) + "x" + std::to_string(img.height) +
                              "x" + std::to_string(img.channels));
    for (double v : img.data) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        char raw[8];
        std::memcpy(raw, &bits, 8);
        h = fnv1a64_append(h, std::string_view(raw, 8));
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

} // namespace medperturb
