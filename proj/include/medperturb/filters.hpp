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

#include <cmath>
#include <vector>

#include "medperturb/common.hpp"
#include "medperturb/image.hpp"

namespace medperturb {

/// Mirror an index into [0,n) without duplicating the edge sample.
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

/// 2x3 affine map dst = M * (x, y, 1). Used forward for annotations and
/// inverted for image resampling.
struct Affine {
    double m00 = 1, m01 = 0, m02 = 0;
    double m10 = 0, m11 = 1, m12 = 0;

    static Affine identity() { return {}; }

    static Affine translation(double dx, double dy) {
        Affine a;
        a.m02 = dx;
        a.m12 = dy;
        return a;
    }

    /// Rotation by `degrees` about (cx, cy), then uniform scale about the same point.
    static Affine rotation_about(double degrees, double cx, double cy, double scale = 1.0) {
        const double rad = degrees * M_PI / 180.0;
        const double c = std::cos(rad) * scale;
        const double s = std::sin(rad) * scale;
        Affine a;
        a.m00 = c;
        a.m01 = -s;
        a.m02 = cx - c * cx + s * cy;
        a.m10 = s;
        a.m11 = c;
        a.m12 = cy - s * cx - c * cy;
        return a;
    }

    void apply(double x, double y, double& ox, double& oy) const {
        ox = m00 * x + m01 * y + m02;
        oy = m10 * x + m11 * y + m12;
    }

    Affine inverse() const {
        const double det = m00 * m11 - m01 * m10;
        Affine r;
        r.m00 = m11 / det;
        r.m01 = -m01 / det;
        r.m10 = -m10 / det;
        r.m11 = m00 / det;
        r.m02 = -(r.m00 * m02 + r.m01 * m12);
        r.m12 = -(r.m10 * m02 + r.m11 * m12);
        return r;
    }
};

inline double bilinear_sample(const ImageBuffer& img, double sx, double sy, int c) {
    const int x0 = static_cast<int>(std::floor(sx));
    const int y0 = static_cast<int>(std::floor(sy));
    const double fx = sx - x0;
    const double fy = sy - y0;
    const int xa = reflect_index(x0, img.width);
    const int xb = reflect_index(x0 + 1, img.width);
    const int ya = reflect_index(y0, img.height);
    const int yb = reflect_index(y0 + 1, img.height);
    const double top = img.at(xa, ya, c) * (1 - fx) + img.at(xb, ya, c) * fx;
    const double bot = img.at(xa, yb, c) * (1 - fx) + img.at(xb, yb, c) * fx;
    return top * (1 - fy) + bot * fy;
}

/// Resample through the inverse map with bilinear interpolation, reflect padding.
inline ImageBuffer warp_bilinear(const ImageBuffer& img, const Affine& inverse_map) {
    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double sx, sy;
            inverse_map.apply(x, y, sx, sy);
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = clamp01(bilinear_sample(img, sx, sy, c));
        }
    }
    return out;
}

/// Nearest-neighbor variant for label rasters (keeps values binary).
inline ImageBuffer warp_nearest(const ImageBuffer& img, const Affine& inverse_map) {
    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double sx, sy;
            inverse_map.apply(x, y, sx, sy);
            const int xi = reflect_index(static_cast<int>(std::lround(sx)), img.width);
            const int yi = reflect_index(static_cast<int>(std::lround(sy)), img.height);
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(xi, yi, c);
        }
    }
    return out;
}

/// Separable Gaussian blur with reflect padding. The kernel radius is
/// ceil(3*sigma), clamped so the kernel fits the image (warning on clamp).
inline ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma, Warnings* warnings = nullptr) {
    if (sigma <= 0.0) return img;
    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    const int max_radius = (std::min(img.width, img.height) - 1) / 2;
    if (radius > max_radius) {
        warn(warnings, "gaussian kernel radius clamped from " + std::to_string(radius) +
                          " to " + std::to_string(max_radius));
        radius = std::max(1, max_radius);
    }
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;

    ImageBuffer tmp = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    s += k[i + radius] * img.at(reflect_index(x + i, img.width), y, c);
                tmp.at(x, y, c) = s;
            }
    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    s += k[i + radius] * tmp.at(x, reflect_index(y + i, img.height), c);
                out.at(x, y, c) = clamp01(s);
            }
    return out;
}

/// Dense 2-D convolution with reflect padding; `kernel` is kw x kh row-major
/// and must already be normalized.
inline ImageBuffer convolve(const ImageBuffer& img, const std::vector<double>& kernel,
                            int kw, int kh) {
    const int rx = kw / 2;
    const int ry = kh / 2;
    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double s = 0.0;
                for (int j = 0; j < kh; ++j) {
                    const int yy = reflect_index(y + j - ry, img.height);
                    for (int i = 0; i < kw; ++i)
                        s += kernel[static_cast<std::size_t>(j) * kw + i] *
                             img.at(reflect_index(x + i - rx, img.width), yy, c);
                }
                out.at(x, y, c) = clamp01(s);
            }
    return out;
}

} // namespace medperturb
