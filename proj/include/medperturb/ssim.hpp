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

#include "medperturb/image.hpp"

namespace medperturb {

namespace detail {

inline std::vector<double> gaussian_window_1d(int size, double sigma) {
    std::vector<double> w(size);
    const double half = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        w[i] = std::exp(-((i - half) * (i - half)) / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Separable weighted sum, valid region only: output is (w-win+1) x (h-win+1).
inline std::vector<double> valid_filter(const std::vector<double>& plane, int w, int h,
                                        const std::vector<double>& win) {
    const int k = static_cast<int>(win.size());
    const int ow = w - k + 1;
    const int oh = h - k + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += win[i] * plane[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += win[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    return out;
}

} // namespace detail

/// Structural similarity between two equally sized images, computed on
/// luminance with an 11x11 Gaussian window (sigma=1.5), K1=0.01, K2=0.03,
/// dynamic range 1. Windows are evaluated only where fully inside the image;
/// for images narrower than 11 the window shrinks to the largest odd fit.
inline double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("ssim: dimension mismatch");
    const ImageBuffer la = to_luminance(a);
    const ImageBuffer lb = to_luminance(b);

    const int min_dim = std::min(a.width, a.height);
    int win = std::min(11, min_dim);
    if (win % 2 == 0) --win;
    if (win < 1)
        throw std::invalid_argument("ssim: image too small");
    const std::vector<double> g = detail::gaussian_window_1d(win, 1.5);

    const std::size_t n = la.data.size();
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = la.data[i] * la.data[i];
        yy[i] = lb.data[i] * lb.data[i];
        xy[i] = la.data[i] * lb.data[i];
    }
    const int w = a.width, h = a.height;
    const auto mu_x = detail::valid_filter(la.data, w, h, g);
    const auto mu_y = detail::valid_filter(lb.data, w, h, g);
    const auto e_xx = detail::valid_filter(xx, w, h, g);
    const auto e_yy = detail::valid_filter(yy, w, h, g);
    const auto e_xy = detail::valid_filter(xy, w, h, g);

    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    double total = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double mx = mu_x[i], my = mu_y[i];
        const double var_x = e_xx[i] - mx * mx;
        const double var_y = e_yy[i] - my * my;
        const double cov = e_xy[i] - mx * my;
        const double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        const double den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        total += num / den;
    }
    return total / static_cast<double>(mu_x.size());
}

} // namespace medperturb
