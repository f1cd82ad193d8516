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

#include <atomic>
#include <iostream>
#include <mutex>
#include <thread>

#include "medperturb/aggregate.hpp"
#include "medperturb/calibrate.hpp"
#include "medperturb/caption_metrics.hpp"
#include "medperturb/records.hpp"

namespace medperturb {

/// Calibrate every (sample, applicable perturbation, level) triple and print
/// the convergence summary.
inline CalibrationCache cmd_calibrate(const PerturbationRegistry& registry,
                                      const DatasetManifest& manifest, const RunConfig& config,
                                      std::ostream& summary = std::cout,
                                      Warnings* warnings = nullptr) {
    CalibrateStats stats;
    CalibrationCache cache = calibrate_dataset(registry, manifest, config, &stats, warnings);

    std::size_t converged = 0;
    std::map<int, std::pair<std::size_t, std::size_t>> per_level; // level → (converged, total)
    for (const auto& [key, entry] : cache.entries()) {
        converged += entry.converged;
        auto& [c, n] = per_level[entry.level];
        c += entry.converged;
        ++n;
    }
    summary << "calibration for " << manifest.dataset_id << ": " << cache.size() << " entries ("
            << stats.computed << " computed, " << stats.reused << " reused, " << stats.failed
            << " failed images)\n";
    if (!cache.entries().empty()) {
        summary << "converged: " << converged << "/" << cache.size() << " ("
                << format_fixed3(static_cast<double>(converged) /
                                 static_cast<double>(cache.size()))
                << ")\n";
        for (const auto& [level, cn] : per_level)
            summary << "  level " << level << ": " << cn.first << "/" << cn.second
                    << " converged\n";
    }
    return cache;
}

/// One row of the perturb run ledger.
struct LedgerRow {
    std::string dataset_id;
    std::string sample_id;
    std::string perturbation_id;
    std::string category;
    int level = 0;
    double t = 0.0;
    double achieved_ssim = 1.0;
    bool converged = false;
    std::uint64_t seed = 0;
    std::string output_path; // relative to the output root
};

inline constexpr const char* kLedgerHeader =
    "dataset_id,sample_id,perturbation_id,category,level,t,achieved_ssim,converged,seed,"
    "output_path";

struct PerturbOutcome {
    std::size_t written = 0;
    std::size_t skipped_unconverged = 0;
    std::vector<LedgerRow> ledger;
    std::filesystem::path ledger_path;
};

namespace detail {

/// Forward-transform a box through an affine and re-fit an axis-aligned box,
/// clamped to the image unless clamping would degenerate it.
inline std::array<double, 4> transform_box(const std::array<double, 4>& box, const Affine& fwd,
                                           int width, int height) {
    double xs[4], ys[4];
    const double cx[4] = {box[0], box[2], box[0], box[2]};
    const double cy[4] = {box[1], box[1], box[3], box[3]};
    for (int i = 0; i < 4; ++i) fwd.apply(cx[i], cy[i], xs[i], ys[i]);
    double x_min = *std::min_element(xs, xs + 4);
    double x_max = *std::max_element(xs, xs + 4);
    double y_min = *std::min_element(ys, ys + 4);
    double y_max = *std::max_element(ys, ys + 4);
    const double cl_x_min = std::clamp(x_min, 0.0, static_cast<double>(width));
    const double cl_x_max = std::clamp(x_max, 0.0, static_cast<double>(width));
    const double cl_y_min = std::clamp(y_min, 0.0, static_cast<double>(height));
    const double cl_y_max = std::clamp(y_max, 0.0, static_cast<double>(height));
    if (cl_x_min < cl_x_max && cl_y_min < cl_y_max)
        return {cl_x_min, cl_y_min, cl_x_max, cl_y_max};
    return {x_min, y_min, x_max, y_max}; // fully outside: keep unclamped
}

struct WorkItem {
    const LoadedSample* sample = nullptr;
    const Perturbation* perturbation = nullptr;
    SeverityLevel band;
};

} // namespace detail

/// Apply every calibrated (sample, perturbation, level) triple and write the
/// output tree `<out>/<dataset>/<perturbation>/<level>/<sample_id>.png`, the
/// co-transformed ground truth for geometric perturbations (mask PNGs under
/// a parallel gt/ subtree plus a gt_records.jsonl join file), and the sorted
/// run ledger. Missing cache entries are calibrated on the fly.
inline PerturbOutcome cmd_perturb(const PerturbationRegistry& registry,
                                  const DatasetManifest& manifest, CalibrationCache& cache,
                                  const RunConfig& config, Warnings* warnings = nullptr) {
    if (config.output_root.empty()) throw ValidationError("perturb requires an output root");
    const std::filesystem::path dataset_root = config.output_root / manifest.dataset_id;
    std::error_code ec;
    std::filesystem::create_directories(dataset_root, ec);
    if (ec)
        throw std::runtime_error("cannot create output root " + dataset_root.string() + ": " +
                                 ec.message());

    CalibrateStats stats;
    const std::vector<const Perturbation*> perturbations =
        detail::selected_perturbations(registry, manifest, config);
    const std::vector<SeverityLevel> levels = detail::selected_levels(config);
    const std::vector<detail::LoadedSample> samples =
        detail::load_samples(manifest, cache, stats, warnings);

    std::vector<detail::WorkItem> items;
    for (const detail::LoadedSample& s : samples)
        for (const Perturbation* p : perturbations)
            for (const SeverityLevel& band : levels) items.push_back({&s, p, band});

    struct ItemResult {
        bool written = false;
        LedgerRow row;
        std::optional<Record> gt_mask_record;
        std::optional<Record> gt_box_record;
    };
    std::vector<ItemResult> results(items.size());

    std::mutex cache_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    const auto run_item = [&](std::size_t index) {
        const detail::WorkItem& item = items[index];
        const detail::LoadedSample& s = *item.sample;
        const Perturbation& p = *item.perturbation;
        const std::uint64_t seed = derive_seed(config.master_seed, manifest.dataset_id,
                                               s.entry->sample_id, p.id, item.band.level);

        CalibrationEntry entry;
        {
            std::lock_guard<std::mutex> lock(cache_mutex);
            const CalibrationEntry* found = cache.find(s.image_key, p.id, item.band.level, seed);
            if (found) entry = *found;
        }
        if (entry.image_key.empty()) {
            entry = calibrate(s.image, p, item.band, seed, config.max_iterations, warnings);
            std::lock_guard<std::mutex> lock(cache_mutex);
            cache.put(entry);
        }

        ItemResult& result = results[index];
        if (!entry.converged && !config.include_unconverged) return;

        const std::filesystem::path level_dir =
            dataset_root / p.id / std::to_string(item.band.level);
        std::filesystem::create_directories(level_dir);
        const std::filesystem::path out_path = level_dir / (s.entry->sample_id + ".png");
        const ImageBuffer perturbed = p.apply(s.image, entry.t, seed, warnings);
        save_image(perturbed, out_path);

        if (p.is_geometric() && (s.entry->mask_path || s.entry->box)) {
            const Affine fwd =
                p.transform(s.image.width, s.image.height, entry.t, seed);
            if (s.entry->mask_path) {
                const ImageBuffer mask_img = load_image(*s.entry->mask_path);
                if (mask_img.width != s.image.width || mask_img.height != s.image.height)
                    throw std::runtime_error("mask dimensions differ from image for sample " +
                                             s.entry->sample_id);
                const std::filesystem::path gt_dir = level_dir / "gt";
                std::filesystem::create_directories(gt_dir);
                const std::filesystem::path mask_out =
                    gt_dir / (s.entry->sample_id + "_mask.png");
                save_image(warp_nearest(mask_img, fwd.inverse()), mask_out);
                Record r;
                r.sample_id = s.entry->sample_id;
                r.task = Task::segmentation;
                r.perturbation_id = p.id;
                r.level = item.band.level;
                r.mask = std::filesystem::relative(mask_out, dataset_root);
                result.gt_mask_record = std::move(r);
            }
            if (s.entry->box) {
                Record r;
                r.sample_id = s.entry->sample_id;
                r.task = Task::grounding;
                r.perturbation_id = p.id;
                r.level = item.band.level;
                r.box = detail::transform_box(*s.entry->box, fwd, s.image.width, s.image.height);
                result.gt_box_record = std::move(r);
            }
        }

        result.written = true;
        result.row = {manifest.dataset_id,
                      s.entry->sample_id,
                      p.id,
                      std::string(to_string(p.category)),
                      item.band.level,
                      entry.t,
                      entry.achieved_ssim,
                      entry.converged,
                      seed,
                      std::filesystem::relative(out_path, config.output_root).generic_string()};
    };

    const auto worker = [&] {
        while (!failed.load()) {
            const std::size_t index = next.fetch_add(1);
            if (index >= items.size()) return;
            try {
                run_item(index);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    const int worker_count = std::max(1, config.workers);
    if (worker_count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < worker_count; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    if (!config.cache_path.empty()) cache.save(config.cache_path);

    PerturbOutcome outcome;
    for (const ItemResult& r : results) {
        if (!r.written) {
            ++outcome.skipped_unconverged;
            continue;
        }
        ++outcome.written;
        outcome.ledger.push_back(r.row);
    }
    // Canonical ledger order, independent of worker scheduling.
    std::sort(outcome.ledger.begin(), outcome.ledger.end(),
              [](const LedgerRow& a, const LedgerRow& b) {
                  if (a.dataset_id != b.dataset_id) return a.dataset_id < b.dataset_id;
                  if (a.perturbation_id != b.perturbation_id)
                      return a.perturbation_id < b.perturbation_id;
                  if (a.level != b.level) return a.level < b.level;
                  return a.sample_id < b.sample_id;
              });

    outcome.ledger_path = dataset_root / "ledger.csv";
    {
        std::ofstream out(outcome.ledger_path);
        if (!out) throw std::runtime_error("cannot write ledger: " + outcome.ledger_path.string());
        out << kLedgerHeader << '\n';
        for (const LedgerRow& row : outcome.ledger)
            out << row.dataset_id << ',' << row.sample_id << ',' << row.perturbation_id << ','
                << row.category << ',' << row.level << ',' << format_exact(row.t) << ','
                << format_exact(row.achieved_ssim) << ',' << (row.converged ? "true" : "false")
                << ',' << row.seed << ',' << row.output_path << '\n';
    }

    // Ground-truth join file: the manifest's clean annotations plus every
    // co-transformed condition, in canonical order.
    {
        std::ofstream out(dataset_root / "gt_records.jsonl");
        if (!out) throw std::runtime_error("cannot write gt_records.jsonl");
        for (const SampleEntry& s : manifest.samples) {
            if (s.mask_path) {
                Record r;
                r.sample_id = s.sample_id;
                r.task = Task::segmentation;
                r.mask = std::filesystem::relative(*s.mask_path, dataset_root);
                out << record_to_json_line(r) << '\n';
            }
            if (s.box) {
                Record r;
                r.sample_id = s.sample_id;
                r.task = Task::grounding;
                r.box = s.box;
                out << record_to_json_line(r) << '\n';
            }
            if (s.answer) {
                Record r;
                r.sample_id = s.sample_id;
                r.task = Task::vqa;
                r.answer = s.answer;
                r.answer_text = s.answer_text;
                out << record_to_json_line(r) << '\n';
            }
            if (s.caption) {
                Record r;
                r.sample_id = s.sample_id;
                r.task = Task::captioning;
                r.caption = s.caption;
                out << record_to_json_line(r) << '\n';
            }
        }
        std::vector<const Record*> transformed;
        for (const ItemResult& r : results) {
            if (r.gt_mask_record) transformed.push_back(&*r.gt_mask_record);
            if (r.gt_box_record) transformed.push_back(&*r.gt_box_record);
        }
        std::sort(transformed.begin(), transformed.end(), [](const Record* a, const Record* b) {
            if (*a->perturbation_id != *b->perturbation_id)
                return *a->perturbation_id < *b->perturbation_id;
            if (*a->level != *b->level) return *a->level < *b->level;
            if (a->sample_id != b->sample_id) return a->sample_id < b->sample_id;
            return to_string(a->task) < to_string(b->task);
        });
        for (const Record* r : transformed) out << record_to_json_line(*r) << '\n';
    }
    return outcome;
}

struct ScoreConfig {
    std::filesystem::path predictions;
    std::filesystem::path ground_truth;
    Task task = Task::segmentation;
    std::string model = "model";
    std::string strategy = "default";
    std::string dataset;
    std::filesystem::path out_csv; // empty = don't write
};

namespace detail {

using Condition = std::pair<std::string, int>; // (perturbation_id, level); ("clean", 0) baseline

inline Condition condition_of(const Record& r) {
    return r.perturbation_id ? Condition{*r.perturbation_id, *r.level} : Condition{kCleanId, 0};
}

inline SegmentationMask load_mask(const std::filesystem::path& path) {
    return mask_from_image(load_image(path));
}

} // namespace detail

/// Score prediction records against ground truth, one MetricRecord per
/// (perturbation, level) condition per metric of the task. Ground-truth
/// records carrying a condition (the co-transformed annotations emitted by
/// cmd_perturb) override the clean annotation for that condition.
inline std::vector<MetricRecord> cmd_score(const PerturbationRegistry& registry,
                                           const ScoreConfig& config,
                                           Warnings* warnings = nullptr) {
    if (config.dataset.empty()) throw ValidationError("score requires a dataset name");
    const std::vector<Record> preds = load_records(config.predictions);
    const std::vector<Record> gts = load_records(config.ground_truth);

    for (const Record& r : preds)
        if (r.task != config.task)
            throw ValidationError("prediction record for sample " + r.sample_id +
                                  " has a different task than requested");

    // Clean ground truth per sample, plus condition-specific overrides.
    std::map<std::string, const Record*> gt_clean;
    std::map<detail::Condition, std::map<std::string, const Record*>> gt_override;
    for (const Record& r : gts) {
        if (r.task != config.task) continue;
        auto& slot = r.perturbation_id ? gt_override[detail::condition_of(r)][r.sample_id]
                                       : gt_clean[r.sample_id];
        if (slot != nullptr) throw ValidationError("duplicate ground truth for sample " + r.sample_id);
        slot = &r;
    }
    if (gt_clean.empty()) throw ValidationError("no ground-truth records for the requested task");

    std::map<detail::Condition, std::map<std::string, const Record*>> pred_by_condition;
    for (const Record& r : preds) {
        auto& slot = pred_by_condition[detail::condition_of(r)][r.sample_id];
        if (slot != nullptr)
            throw ValidationError("duplicate prediction for sample " + r.sample_id);
        slot = &r;
    }
    if (!pred_by_condition.count({kCleanId, 0}))
        warn(warnings, "no clean predictions present; reports will lack a baseline");

    // CIDEr document-frequency corpus: every clean reference set.
    std::vector<std::vector<std::string>> cider_corpus;
    if (config.task == Task::captioning)
        for (const auto& [sample_id, gt] : gt_clean) cider_corpus.push_back({*gt->caption});

    std::vector<MetricRecord> out;
    const auto emit = [&](const detail::Condition& condition, const std::string& metric,
                          double value) {
        MetricRecord r;
        r.model = config.model;
        r.strategy = config.strategy;
        r.dataset = config.dataset;
        r.task = std::string(to_string(config.task));
        r.perturbation_id = condition.first;
        if (condition.first == kCleanId) {
            r.category = kCleanId;
            r.level = 0;
        } else {
            r.category = std::string(
                to_string(registry.require(condition.first).category));
            r.level = condition.second;
        }
        r.value = value;
        r.metric_name = metric;
        r.validate();
        out.push_back(std::move(r));
    };

    for (const auto& [condition, cond_preds] : pred_by_condition) {
        if (condition.first != kCleanId) registry.require(condition.first); // validate id
        const auto gt_for = [&](const std::string& sample_id) -> const Record* {
            const auto ov = gt_override.find(condition);
            if (ov != gt_override.end()) {
                const auto it = ov->second.find(sample_id);
                if (it != ov->second.end()) return it->second;
            }
            const auto it = gt_clean.find(sample_id);
            return it == gt_clean.end() ? nullptr : it->second;
        };

        switch (config.task) {
            case Task::segmentation: {
                double iou_sum = 0.0, dice_sum = 0.0;
                std::size_t n = 0, missing = 0;
                for (const auto& [sample_id, gt] : gt_clean) {
                    const Record* gtr = gt_for(sample_id);
                    ++n;
                    const auto it = cond_preds.find(sample_id);
                    if (it == cond_preds.end()) {
                        ++missing;
                        continue; // scored 0
                    }
                    const SegmentationMask pm = detail::load_mask(*it->second->mask);
                    const SegmentationMask gm = detail::load_mask(*gtr->mask);
                    iou_sum += mask_iou(pm, gm);
                    dice_sum += mask_dice(pm, gm);
                }
                if (missing > 0)
                    warn(warnings, "segmentation condition " + condition.first + "/" +
                                       std::to_string(condition.second) + ": " +
                                       std::to_string(missing) + " of " + std::to_string(n) +
                                       " predictions missing (scored 0)");
                emit(condition, "mask_iou", iou_sum / static_cast<double>(n));
                emit(condition, "mask_dice", dice_sum / static_cast<double>(n));
                break;
            }
            case Task::vqa: {
                std::vector<VqaGold> gold;
                std::vector<VqaPrediction> vp;
                for (const auto& [sample_id, gt] : gt_clean) {
                    const Record* gtr = gt_for(sample_id);
                    gold.push_back({sample_id, *gtr->answer, gtr->answer_text});
                    const auto it = cond_preds.find(sample_id);
                    if (it != cond_preds.end()) vp.push_back({sample_id, *it->second->answer});
                }
                emit(condition, "vqa_accuracy", vqa_accuracy(vp, gold, warnings));
                break;
            }
            case Task::grounding: {
                std::vector<BoxGold> gold;
                std::vector<BoxPrediction> bp;
                for (const auto& [sample_id, gt] : gt_clean) {
                    const Record* gtr = gt_for(sample_id);
                    gold.push_back({sample_id, to_bounding_box(*gtr->box)});
                    const auto it = cond_preds.find(sample_id);
                    if (it != cond_preds.end())
                        bp.push_back({sample_id, to_bounding_box(*it->second->box)});
                }
                emit(condition, "grounding_accuracy", grounding_accuracy(bp, gold, 0.5, warnings));
                break;
            }
            case Task::captioning: {
                std::vector<std::string> candidates;
                std::vector<std::vector<std::string>> references;
                std::size_t missing = 0;
                for (const auto& [sample_id, gt] : gt_clean) {
                    const Record* gtr = gt_for(sample_id);
                    references.push_back({*gtr->caption});
                    const auto it = cond_preds.find(sample_id);
                    if (it == cond_preds.end()) {
                        ++missing;
                        candidates.emplace_back(); // empty candidate scores 0
                    } else candidates.push_back(*it->second->caption);
                }
                if (missing > 0)
                    warn(warnings, "captioning condition " + condition.first + "/" +
                                       std::to_string(condition.second) + ": " +
                                       std::to_string(missing) +
                                       " predictions missing (scored empty)");
                std::vector<std::string> flat_refs;
                for (const auto& rs : references) flat_refs.push_back(rs.front());
                emit(condition, "bleu", bleu(candidates, flat_refs));
                emit(condition, "rouge_l", rouge_l(candidates, flat_refs));
                const CiderScore cs = cider(candidates, references, cider_corpus);
                emit(condition, "cider", cs.value);
                emit(condition, "cider_scaled", cs.scaled);
                break;
            }
        }
    }

    if (!config.out_csv.empty()) write_records_csv(out, config.out_csv);
    return out;
}

/// Merge one or more records tables and emit the full report set.
inline void cmd_report(const std::vector<std::filesystem::path>& record_files,
                       const std::filesystem::path& out_dir, const ReportOptions& options = {},
                       Warnings* warnings = nullptr) {
    if (record_files.empty()) throw ValidationError("report requires at least one records file");
    std::vector<MetricRecord> records;
    for (const std::filesystem::path& path : record_files) {
        std::vector<MetricRecord> part = read_records_csv(path);
        records.insert(records.end(), part.begin(), part.end());
    }
    if (records.empty()) throw ValidationError("no records to report");
    try {
        emit_report(records, out_dir, options, warnings);
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what()); // missing baselines etc. are input defects
    }
}

} // namespace medperturb
