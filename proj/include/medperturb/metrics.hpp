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

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "medperturb/common.hpp"
#include "medperturb/image.hpp"

namespace medperturb {

/// Binary segmentation mask. One byte per pixel, strictly 0 or 1.
struct SegmentationMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    std::uint8_t at(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * width + x];
    }
};

/// Binarize an image into a mask: luminance above the threshold is
/// foreground.
inline SegmentationMask mask_from_image(const ImageBuffer& img, double threshold = 0.5) {
    const ImageBuffer lum = to_luminance(img);
    SegmentationMask mask;
    mask.width = lum.width;
    mask.height = lum.height;
    mask.bits.resize(lum.data.size());
    for (std::size_t i = 0; i < lum.data.size(); ++i)
        mask.bits[i] = lum.data[i] > threshold ? 1 : 0;
    return mask;
}

namespace detail {

struct MaskCounts {
    std::size_t intersection = 0;
    std::size_t p_area = 0;
    std::size_t g_area = 0;
};

inline MaskCounts mask_counts(const SegmentationMask& p, const SegmentationMask& g) {
    if (p.width != g.width || p.height != g.height)
        throw std::invalid_argument("mask dimensions differ");
    MaskCounts c;
    for (std::size_t i = 0; i < p.bits.size(); ++i) {
        c.p_area += p.bits[i] != 0;
        c.g_area += g.bits[i] != 0;
        c.intersection += (p.bits[i] != 0) && (g.bits[i] != 0);
    }
    return c;
}

} // namespace detail

/// |P∩G| / |P∪G|; both masks empty → 1.0 (predicting absence correctly).
inline double mask_iou(const SegmentationMask& p, const SegmentationMask& g) {
    const detail::MaskCounts c = detail::mask_counts(p, g);
    const std::size_t uni = c.p_area + c.g_area - c.intersection;
    if (uni == 0) return 1.0;
    return static_cast<double>(c.intersection) / static_cast<double>(uni);
}

/// 2|P∩G| / (|P|+|G|); both masks empty → 1.0.
inline double mask_dice(const SegmentationMask& p, const SegmentationMask& g) {
    const detail::MaskCounts c = detail::mask_counts(p, g);
    const std::size_t total = c.p_area + c.g_area;
    if (total == 0) return 1.0;
    return 2.0 * static_cast<double>(c.intersection) / static_cast<double>(total);
}

/// Axis-aligned box, real-valued corners, min strictly before max.
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    void validate() const {
        if (!(x_min < x_max) || !(y_min < y_max))
            throw std::invalid_argument("bounding box must satisfy x_min < x_max, y_min < y_max");
    }
    double area() const { return (x_max - x_min) * (y_max - y_min); }
};

inline double box_iou(const BoundingBox& a, const BoundingBox& b) {
    a.validate();
    b.validate();
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

/// Answer normalization shared by VQA matching: case-fold, trim, collapse
/// internal whitespace, strip terminal punctuation.
inline std::string normalize_answer(std::string_view raw) {
    std::string out;
    bool pending_space = false;
    for (char ch : raw) {
        const unsigned char u = static_cast<unsigned char>(ch);
        if (std::isspace(u)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(u));
    }
    const auto is_terminal = [](char c) {
        return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
    };
    while (!out.empty() && is_terminal(out.back())) out.pop_back();
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

struct VqaGold {
    std::string sample_id;
    std::string answer;                    // gold option letter (or free-form answer)
    std::optional<std::string> answer_text; // gold option text for multiple choice
};

struct VqaPrediction {
    std::string sample_id;
    std::string answer;
};

namespace detail {

template <typename Record>
std::map<std::string, const Record*> index_by_sample(const std::vector<Record>& records) {
    std::map<std::string, const Record*> index;
    for (const Record& r : records)
        if (!index.emplace(r.sample_id, &r).second)
            throw std::invalid_argument("duplicate sample_id: " + r.sample_id);
    return index;
}

} // namespace detail

/// Exact-match accuracy over the gold set. A prediction matches if its
/// normalized form equals the normalized gold answer or, when provided, the
/// normalized gold option text. Missing predictions count as wrong.
inline double vqa_accuracy(const std::vector<VqaPrediction>& preds,
                           const std::vector<VqaGold>& gts, Warnings* warnings = nullptr) {
    if (gts.empty()) throw std::invalid_argument("vqa_accuracy: empty ground truth");
    const auto pred_index = detail::index_by_sample(preds);
    detail::index_by_sample(gts); // duplicate check
    std::size_t correct = 0;
    std::size_t missing = 0;
    for (const VqaGold& gt : gts) {
        const auto it = pred_index.find(gt.sample_id);
        if (it == pred_index.end()) {
            ++missing;
            continue;
        }
        const std::string norm = normalize_answer(it->second->answer);
        if (norm == normalize_answer(gt.answer) ||
            (gt.answer_text && norm == normalize_answer(*gt.answer_text)))
            ++correct;
    }
    if (missing > 0)
        warn(warnings, "vqa_accuracy: " + std::to_string(missing) + " of " +
                           std::to_string(gts.size()) + " samples missing predictions (scored wrong)");
    return static_cast<double>(correct) / static_cast<double>(gts.size());
}

struct BoxGold {
    std::string sample_id;
    BoundingBox box;
};

struct BoxPrediction {
    std::string sample_id;
    BoundingBox box;
};

/// Fraction of gold boxes whose prediction overlaps with IoU ≥ threshold
/// (inclusive). Missing predictions count as incorrect.
inline double grounding_accuracy(const std::vector<BoxPrediction>& preds,
                                 const std::vector<BoxGold>& gts, double threshold = 0.5,
                                 Warnings* warnings = nullptr) {
    if (gts.empty()) throw std::invalid_argument("grounding_accuracy: empty ground truth");
    const auto pred_index = detail::index_by_sample(preds);
    detail::index_by_sample(gts); // duplicate check
    std::size_t correct = 0;
    std::size_t missing = 0;
    for (const BoxGold& gt : gts) {
        const auto it = pred_index.find(gt.sample_id);
        if (it == pred_index.end()) {
            ++missing;
            continue;
        }
        if (box_iou(it->second->box, gt.box) >= threshold) ++correct;
    }
    if (missing > 0)
        warn(warnings, "grounding_accuracy: " + std::to_string(missing) + " of " +
                           std::to_string(gts.size()) +
                           " samples missing predictions (scored wrong)");
    return static_cast<double>(correct) / static_cast<double>(gts.size());
}

} // namespace medperturb
