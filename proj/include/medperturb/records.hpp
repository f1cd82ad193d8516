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
#include <string>
#include <vector>

#include <json.hpp>

#include "medperturb/common.hpp"
#include "medperturb/metrics.hpp"

namespace medperturb {

enum class Task { segmentation, vqa, grounding, captioning };

inline std::string_view to_string(Task task) {
    switch (task) {
        case Task::segmentation: return "segmentation";
        case Task::vqa: return "vqa";
        case Task::grounding: return "grounding";
        case Task::captioning: return "captioning";
    }
    return "";
}

inline std::optional<Task> task_from_string(std::string_view name) {
    for (Task t : {Task::segmentation, Task::vqa, Task::grounding, Task::captioning})
        if (to_string(t) == name) return t;
    return std::nullopt;
}

/// One line of a prediction or ground-truth file. The payload field set for
/// the record's task must be present; condition fields are absent on clean
/// records and on plain ground truth.
struct Record {
    std::string sample_id;
    Task task = Task::segmentation;
    std::optional<std::string> perturbation_id; // condition; absent = clean
    std::optional<int> level;
    std::optional<std::filesystem::path> mask; // segmentation payload (mask image path)
    std::optional<std::array<double, 4>> box;  // grounding payload
    std::optional<std::string> answer;         // vqa payload
    std::optional<std::string> answer_text;    // vqa gold option text (ground truth only)
    std::optional<std::string> caption;        // captioning payload
};

namespace detail {

inline void require_payload(const Record& r, std::size_t line_no) {
    const auto fail = [&](const char* what) {
        throw ValidationError("record line " + std::to_string(line_no) + " (sample " +
                              r.sample_id + "): " + what);
    };
    switch (r.task) {
        case Task::segmentation:
            if (!r.mask) fail("segmentation record requires a mask path");
            break;
        case Task::vqa:
            if (!r.answer) fail("vqa record requires an answer");
            break;
        case Task::grounding:
            if (!r.box) fail("grounding record requires a box");
            break;
        case Task::captioning:
            if (!r.caption) fail("captioning record requires a caption");
            break;
    }
}

} // namespace detail

/// Parse a line-delimited record file. Mask paths resolve relative to the
/// record file's directory. Blank lines are ignored.
inline std::vector<Record> load_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open record file: " + path.string());
    const std::filesystem::path base =
        path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

    std::vector<Record> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("record line " + std::to_string(line_no) +
                                  " is not valid JSON: " + e.what());
        }
        Record r;
        if (!doc.contains("sample_id") || !doc["sample_id"].is_string())
            throw ValidationError("record line " + std::to_string(line_no) +
                                  " requires a sample_id string");
        r.sample_id = doc["sample_id"].get<std::string>();
        if (!doc.contains("task") || !doc["task"].is_string())
            throw ValidationError("record line " + std::to_string(line_no) +
                                  " requires a task string");
        const auto task = task_from_string(doc["task"].get<std::string>());
        if (!task)
            throw ValidationError("record line " + std::to_string(line_no) + " has unknown task " +
                                  doc["task"].get<std::string>());
        r.task = *task;
        if (doc.contains("perturbation_id"))
            r.perturbation_id = doc["perturbation_id"].get<std::string>();
        if (doc.contains("level")) r.level = doc["level"].get<int>();
        if (r.perturbation_id.has_value() != r.level.has_value())
            throw ValidationError("record line " + std::to_string(line_no) +
                                  ": perturbation_id and level must appear together");
        if (doc.contains("mask")) {
            std::filesystem::path mask_path(doc["mask"].get<std::string>());
            r.mask = mask_path.is_absolute() ? mask_path : base / mask_path;
        }
        if (doc.contains("box")) {
            if (!doc["box"].is_array() || doc["box"].size() != 4)
                throw ValidationError("record line " + std::to_string(line_no) +
                                      ": box must be [x_min, y_min, x_max, y_max]");
            std::array<double, 4> b{};
            for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = doc["box"][i].get<double>();
            r.box = b;
        }
        if (doc.contains("answer")) r.answer = doc["answer"].get<std::string>();
        if (doc.contains("answer_text")) r.answer_text = doc["answer_text"].get<std::string>();
        if (doc.contains("caption")) r.caption = doc["caption"].get<std::string>();
        detail::require_payload(r, line_no);
        records.push_back(std::move(r));
    }
    return records;
}

/// Serialize one record as a JSON line (inverse of load_records, with mask
/// paths written as given).
inline std::string record_to_json_line(const Record& r) {
    nlohmann::json doc;
    doc["sample_id"] = r.sample_id;
    doc["task"] = std::string(to_string(r.task));
    if (r.perturbation_id) doc["perturbation_id"] = *r.perturbation_id;
    if (r.level) doc["level"] = *r.level;
    if (r.mask) doc["mask"] = r.mask->generic_string();
    if (r.box) doc["box"] = *r.box;
    if (r.answer) doc["answer"] = *r.answer;
    if (r.answer_text) doc["answer_text"] = *r.answer_text;
    if (r.caption) doc["caption"] = *r.caption;
    return doc.dump();
}

inline BoundingBox to_bounding_box(const std::array<double, 4>& b) {
    BoundingBox box{b[0], b[1], b[2], b[3]};
    box.validate();
    return box;
}

} // namespace medperturb
