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
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "medperturb/common.hpp"
#include "medperturb/perturb_medical.hpp"

namespace medperturb {

/// One dataset sample: the image plus whichever ground-truth payloads the
/// dataset's tasks need. Paths are stored resolved (absolute or relative to
/// the process working directory).
struct SampleEntry {
    std::string sample_id;
    std::filesystem::path image_path;
    std::optional<std::filesystem::path> mask_path; // segmentation
    std::optional<std::array<double, 4>> box;       // grounding: x_min,y_min,x_max,y_max
    std::optional<std::string> answer;              // vqa: gold option letter
    std::optional<std::string> answer_text;         // vqa: gold option text
    std::optional<std::string> caption;             // captioning reference
};

struct DatasetManifest {
    std::string dataset_id;
    Modality modality = Modality::CT;
    std::vector<SampleEntry> samples;
};

struct RunConfig {
    std::uint64_t master_seed = 0;
    std::vector<int> levels = {1, 2, 3, 4, 5};
    std::vector<std::string> perturbation_filter; // empty = all applicable
    int workers = 1;
    std::filesystem::path cache_path;
    std::filesystem::path output_root;
    bool include_unconverged = true;
    bool dataset_level_calibration = false;
    int max_iterations = 30;
};

namespace detail {

inline std::filesystem::path resolve_relative(const std::filesystem::path& base,
                                              const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace detail

/// Parse a manifest document. Relative sample paths resolve against the
/// manifest file's own directory. Structural problems raise ValidationError;
/// image readability is checked separately by validate_manifest.
inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open manifest: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("manifest is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw ValidationError("manifest root must be an object");

    DatasetManifest manifest;
    if (!doc.contains("dataset_id") || !doc["dataset_id"].is_string() ||
        doc["dataset_id"].get<std::string>().empty())
        throw ValidationError("manifest requires a non-empty string dataset_id");
    manifest.dataset_id = doc["dataset_id"].get<std::string>();

    if (!doc.contains("modality") || !doc["modality"].is_string())
        throw ValidationError("manifest requires a modality string");
    const std::string modality_name = doc["modality"].get<std::string>();
    const auto modality = modality_from_string(modality_name);
    if (!modality) throw ValidationError("unknown modality: " + modality_name);
    manifest.modality = *modality;

    if (!doc.contains("samples") || !doc["samples"].is_array())
        throw ValidationError("manifest requires a samples array");

    const std::filesystem::path base = path.has_parent_path() ? path.parent_path()
                                                              : std::filesystem::path(".");
    std::set<std::string> seen_ids;
    for (const nlohmann::json& s : doc["samples"]) {
        if (!s.is_object()) throw ValidationError("each sample must be an object");
        SampleEntry entry;
        if (!s.contains("sample_id") || !s["sample_id"].is_string() ||
            s["sample_id"].get<std::string>().empty())
            throw ValidationError("each sample requires a non-empty sample_id");
        entry.sample_id = s["sample_id"].get<std::string>();
        if (!seen_ids.insert(entry.sample_id).second)
            throw ValidationError("duplicate sample_id: " + entry.sample_id);
        if (!s.contains("image_path") || !s["image_path"].is_string())
            throw ValidationError("sample " + entry.sample_id + " requires an image_path");
        entry.image_path = detail::resolve_relative(base, s["image_path"].get<std::string>());
        if (s.contains("mask_path"))
            entry.mask_path = detail::resolve_relative(base, s["mask_path"].get<std::string>());
        if (s.contains("box")) {
            if (!s["box"].is_array() || s["box"].size() != 4)
                throw ValidationError("sample " + entry.sample_id +
                                      " box must be [x_min, y_min, x_max, y_max]");
            std::array<double, 4> box{};
            for (int i = 0; i < 4; ++i) box[static_cast<std::size_t>(i)] = s["box"][i].get<double>();
            if (box[0] >= box[2] || box[1] >= box[3])
                throw ValidationError("sample " + entry.sample_id + " box is degenerate");
            entry.box = box;
        }
        if (s.contains("answer")) entry.answer = s["answer"].get<std::string>();
        if (s.contains("answer_text")) entry.answer_text = s["answer_text"].get<std::string>();
        if (s.contains("caption")) entry.caption = s["caption"].get<std::string>();
        manifest.samples.push_back(std::move(entry));
    }
    return manifest;
}

/// Existence/readability pass over the manifest's referenced files. Returns
/// human-readable problem descriptions; empty means valid.
inline std::vector<std::string> validate_manifest(const DatasetManifest& manifest) {
    std::vector<std::string> problems;
    for (const SampleEntry& s : manifest.samples) {
        if (!std::filesystem::exists(s.image_path))
            problems.push_back("sample " + s.sample_id + ": missing image " +
                               s.image_path.string());
        if (s.mask_path && !std::filesystem::exists(*s.mask_path))
            problems.push_back("sample " + s.sample_id + ": missing mask " +
                               s.mask_path->string());
    }
    return problems;
}

} // namespace medperturb
