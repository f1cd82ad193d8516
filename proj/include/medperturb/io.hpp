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
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "medperturb/image.hpp"

namespace medperturb {

/// Decode a PNG or JPEG file into the canonical [0,1] buffer.
/// Grayscale files yield channels=1, color files channels=3 (alpha dropped).
inline ImageBuffer load_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error("file not found: " + path.string());
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty())
        throw std::runtime_error("unsupported format or unreadable image: " + path.string());

    const int depth = m.depth();
    if (depth != CV_8U && depth != CV_16U)
        throw std::runtime_error("unsupported sample depth: " + path.string());
    const double scale = depth == CV_8U ? 255.0 : 65535.0;

    ImageBuffer img;
    img.width = m.cols;
    img.height = m.rows;
    img.channels = m.channels() >= 3 ? 3 : 1;
    img.source_depth = depth == CV_8U ? 8 : 16;
    img.data.resize(static_cast<std::size_t>(m.cols) * m.rows * img.channels);

    auto sample = [&](int y, int x, int c) -> double {
        if (depth == CV_8U) return m.ptr<std::uint8_t>(y)[x * m.channels() + c] / scale;
        return m.ptr<std::uint16_t>(y)[x * m.channels() + c] / scale;
    };
    for (int y = 0; y < m.rows; ++y) {
        for (int x = 0; x < m.cols; ++x) {
            if (img.channels == 1) {
                img.at(x, y, 0) = sample(y, x, 0);
            } else {
                // OpenCV stores BGR(A); canonical order is RGB.
                img.at(x, y, 0) = sample(y, x, 2);
                img.at(x, y, 1) = sample(y, x, 1);
                img.at(x, y, 2) = sample(y, x, 0);
            }
        }
    }
    img.validate();
    return img;
}

namespace detail {

inline cv::Mat to_mat8(const ImageBuffer& img) {
    cv::Mat m(img.height, img.width, img.channels == 1 ? CV_8UC1 : CV_8UC3);
    for (int y = 0; y < img.height; ++y) {
        auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.width; ++x) {
            if (img.channels == 1) {
                row[x] = static_cast<std::uint8_t>(std::lround(clamp01(img.at(x, y, 0)) * 255.0));
            } else {
                row[x * 3 + 0] = static_cast<std::uint8_t>(std::lround(clamp01(img.at(x, y, 2)) * 255.0));
                row[x * 3 + 1] = static_cast<std::uint8_t>(std::lround(clamp01(img.at(x, y, 1)) * 255.0));
                row[x * 3 + 2] = static_cast<std::uint8_t>(std::lround(clamp01(img.at(x, y, 0)) * 255.0));
            }
        }
    }
    return m;
}

inline ImageBuffer from_mat8(const cv::Mat& m, int source_depth = 8) {
    ImageBuffer img;
    img.width = m.cols;
    img.height = m.rows;
    img.channels = m.channels() >= 3 ? 3 : 1;
    img.source_depth = source_depth;
    img.data.resize(static_cast<std::size_t>(m.cols) * m.rows * img.channels);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) {
            if (img.channels == 1) {
                img.at(x, y, 0) = row[x * m.channels()] / 255.0;
            } else {
                img.at(x, y, 0) = row[x * m.channels() + 2] / 255.0;
                img.at(x, y, 1) = row[x * m.channels() + 1] / 255.0;
                img.at(x, y, 2) = row[x * m.channels() + 0] / 255.0;
            }
        }
    }
    return img;
}

} // namespace detail

/// Write a lossless 8-bit PNG regardless of the path's extension.
/// Round-tripping through save/load stays within 1/510 per sample.
inline void save_image(const ImageBuffer& img, const std::filesystem::path& path) {
    img.validate();
    std::vector<std::uint8_t> bytes;
    if (!cv::imencode(".png", detail::to_mat8(img), bytes))
        throw std::runtime_error("PNG encode failed for: " + path.string());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

} // namespace medperturb
