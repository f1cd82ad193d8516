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
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "medperturb/common.hpp"

namespace medperturb {

inline constexpr const char* kCleanId = "clean";

/// One scored condition: the value of one metric for one (model, strategy,
/// dataset, task) under one perturbation condition. level 0 together with
/// perturbation_id "clean" and category "clean" marks the baseline.
struct MetricRecord {
    std::string model;
    std::string strategy;
    std::string dataset;
    std::string task;
    std::string perturbation_id; // "clean" for the baseline
    std::string category;        // "base", "med_specific", or "clean"
    int level = 0;               // 0 = clean, else 1..5
    double value = 0.0;
    std::string metric_name;

    bool is_clean() const { return perturbation_id == kCleanId; }

    void validate() const {
        const bool clean_id = perturbation_id == kCleanId;
        const bool clean_cat = category == kCleanId;
        const bool clean_level = level == 0;
        if (clean_id != clean_cat || clean_id != clean_level)
            throw std::invalid_argument(
                "record must be fully clean or fully perturbed (perturbation_id/category/level)");
        if (!clean_id && (level < 1 || level > 5))
            throw std::invalid_argument("perturbed record level must be 1..5");
        if (!clean_id && category != "base" && category != "med_specific")
            throw std::invalid_argument("perturbed record category must be base or med_specific");
    }
};

namespace detail {

/// Key shared by a clean baseline and the perturbed records it baselines.
inline std::string group_key(const MetricRecord& r) {
    std::string k = r.model;
    for (const std::string* part : {&r.strategy, &r.dataset, &r.task, &r.metric_name}) {
        k += '\x1f';
        k += *part;
    }
    return k;
}

/// Map group key → mean clean value. Duplicated clean records average.
inline std::map<std::string, double> clean_index(const std::vector<MetricRecord>& records) {
    std::map<std::string, std::pair<double, int>> sums;
    for (const MetricRecord& r : records)
        if (r.is_clean()) {
            auto& [sum, count] = sums[group_key(r)];
            sum += r.value;
            ++count;
        }
    std::map<std::string, double> index;
    for (const auto& [key, sc] : sums) index[key] = sc.first / sc.second;
    return index;
}

inline double require_clean(const std::map<std::string, double>& index, const MetricRecord& r) {
    const auto it = index.find(group_key(r));
    if (it == index.end())
        throw std::invalid_argument("no clean baseline for model=" + r.model + " strategy=" +
                                    r.strategy + " dataset=" + r.dataset + " task=" + r.task +
                                    " metric=" + r.metric_name);
    return it->second;
}

inline double mean(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

} // namespace detail

/// Absolute performance drop, clean minus perturbed. Negative when the
/// perturbation helps; the sign is preserved.
inline double drop(const MetricRecord& clean, const MetricRecord& perturbed) {
    if (!clean.is_clean() || clean.level != 0)
        throw std::invalid_argument("drop: first record must be the clean baseline");
    if (detail::group_key(clean) != detail::group_key(perturbed))
        throw std::invalid_argument("drop: records disagree on model/strategy/dataset/task/metric");
    return clean.value - perturbed.value;
}

/// Mean drop over the records in one category at one severity level,
/// baselined per grouping key. Pass level 0 to marginalize over severities
/// (category mean) or an empty category to marginalize over categories
/// (severity mean).
inline double mean_drop(const std::vector<MetricRecord>& records, std::string_view category,
                        int level) {
    const auto clean = detail::clean_index(records);
    std::vector<double> drops;
    for (const MetricRecord& r : records) {
        if (r.is_clean()) continue;
        if (!category.empty() && r.category != category) continue;
        if (level != 0 && r.level != level) continue;
        drops.push_back(detail::require_clean(clean, r) - r.value);
    }
    if (drops.empty())
        throw std::invalid_argument("mean_drop: no records in category '" + std::string(category) +
                                    "' at level " + std::to_string(level));
    return detail::mean(drops);
}

struct RankedPerturbation {
    std::string perturbation_id;
    std::string category;
    double mean_drop = 0.0;
};

/// Top-k perturbations by mean drop across all severities/datasets,
/// descending; equal drops order lexicographically by id. Requesting more
/// than exist returns all with a warning.
inline std::vector<RankedPerturbation> rank_perturbations(const std::vector<MetricRecord>& records,
                                                          std::size_t k,
                                                          Warnings* warnings = nullptr) {
    const auto clean = detail::clean_index(records);
    std::map<std::string, std::pair<std::vector<double>, std::string>> by_id; // id → (drops, cat)
    for (const MetricRecord& r : records) {
        if (r.is_clean()) continue;
        auto& [drops, category] = by_id[r.perturbation_id];
        drops.push_back(detail::require_clean(clean, r) - r.value);
        category = r.category;
    }
    std::vector<RankedPerturbation> ranked;
    for (const auto& [id, dc] : by_id)
        ranked.push_back({id, dc.second, detail::mean(dc.first)});
    std::sort(ranked.begin(), ranked.end(), [](const RankedPerturbation& a,
                                               const RankedPerturbation& b) {
        if (a.mean_drop != b.mean_drop) return a.mean_drop > b.mean_drop;
        return a.perturbation_id < b.perturbation_id;
    });
    if (k < ranked.size()) ranked.resize(k);
    else if (k > ranked.size())
        warn(warnings, "rank_perturbations: requested " + std::to_string(k) + " but only " +
                           std::to_string(ranked.size()) + " perturbations present");
    return ranked;
}

/// Mean drop per severity level 1..5 over the given records. Levels with no
/// records are reported absent (nullopt), never zero.
inline std::map<int, std::optional<double>> severity_curve(
    const std::vector<MetricRecord>& records) {
    const auto clean = detail::clean_index(records);
    std::map<int, std::vector<double>> drops;
    for (const MetricRecord& r : records) {
        if (r.is_clean()) continue;
        drops[r.level].push_back(detail::require_clean(clean, r) - r.value);
    }
    std::map<int, std::optional<double>> curve;
    for (int level = 1; level <= 5; ++level) {
        const auto it = drops.find(level);
        curve[level] = it == drops.end() ? std::optional<double>() : detail::mean(it->second);
    }
    return curve;
}

/// Format with 3 decimals, ties to even, for emitted tables. Scaling before,
/// llrint (FE_TONEAREST = round-half-even) does the rounding.
inline std::string format_fixed3(double v) {
    long long scaled = std::llrint(v * 1000.0);
    if (scaled == 0) scaled = 0; // normalize -0
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3f", static_cast<double>(scaled) / 1000.0);
    return buf;
}

/// Format preserving the exact double (records echo; %.17g round-trips).
inline std::string format_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

/// Per-(model, strategy) summary for one metric: the Table-style row plus
/// grid and curve data.
struct StrategySummary {
    std::string model;
    std::string strategy;
    double avg_delta_base = 0.0;
    // dataset → (clean, delta_base, optional delta_med)
    std::map<std::string, std::tuple<double, double, std::optional<double>>> datasets;
    // category → level → mean drop (absent level = gap)
    std::map<std::string, std::map<int, std::optional<double>>> grid;
    std::map<std::string, double> category_means;
    std::map<int, std::optional<double>> curve;
};

inline std::vector<MetricRecord> filter(const std::vector<MetricRecord>& records,
                                        const std::string& model, const std::string& strategy,
                                        const std::string& dataset = "") {
    std::vector<MetricRecord> out;
    for (const MetricRecord& r : records)
        if (r.model == model && r.strategy == strategy &&
            (dataset.empty() || r.dataset == dataset))
            out.push_back(r);
    return out;
}

inline std::map<int, std::optional<double>> category_level_curve(
    const std::vector<MetricRecord>& records, const std::string& category) {
    std::vector<MetricRecord> subset;
    for (const MetricRecord& r : records)
        if (r.is_clean() || r.category == category) subset.push_back(r);
    return severity_curve(subset);
}

inline StrategySummary summarize_strategy(const std::vector<MetricRecord>& all,
                                          const std::string& model, const std::string& strategy) {
    StrategySummary s;
    s.model = model;
    s.strategy = strategy;
    const std::vector<MetricRecord> mine = filter(all, model, strategy);

    std::set<std::string> datasets, categories;
    for (const MetricRecord& r : mine) {
        datasets.insert(r.dataset);
        if (!r.is_clean()) categories.insert(r.category);
    }

    std::vector<double> per_dataset_base;
    for (const std::string& dataset : datasets) {
        const std::vector<MetricRecord> ds = filter(all, model, strategy, dataset);
        double clean_sum = 0.0;
        int clean_count = 0;
        for (const MetricRecord& r : ds)
            if (r.is_clean()) {
                clean_sum += r.value;
                ++clean_count;
            }
        if (clean_count == 0)
            throw std::invalid_argument("no clean baseline for dataset " + dataset);
        const double clean_value = clean_sum / clean_count;
        double delta_base = 0.0;
        bool has_base = false;
        std::optional<double> delta_med;
        for (const std::string& category : categories) {
            bool any = false;
            for (const MetricRecord& r : ds)
                if (!r.is_clean() && r.category == category) any = true;
            if (!any) continue;
            const double d = mean_drop(ds, category, 0);
            if (category == "base") {
                delta_base = d;
                has_base = true;
            } else delta_med = d;
        }
        if (has_base) per_dataset_base.push_back(delta_base);
        s.datasets[dataset] = {clean_value, delta_base, delta_med};
    }
    if (!per_dataset_base.empty()) s.avg_delta_base = mean(per_dataset_base);

    for (const std::string& category : categories) {
        s.grid[category] = category_level_curve(mine, category);
        s.category_means[category] = mean_drop(mine, category, 0);
    }
    s.curve = severity_curve(mine);
    return s;
}

} // namespace detail

struct ReportOptions {
    std::size_t ranking_size = 15;
};

/// Write the full report for one metric's records into out_dir:
/// robustness_table_<metric>.csv (per-strategy row: clean / base drop /
/// med-specific drop per dataset) and report_<metric>.json (drop grid,
/// severity curves with explicit gaps, rankings). Records must all share
/// metric_name.
inline void emit_metric_report(const std::vector<MetricRecord>& records,
                               const std::filesystem::path& out_dir,
                               const ReportOptions& options = {}, Warnings* warnings = nullptr) {
    if (records.empty()) throw std::invalid_argument("emit_metric_report: no records");
    const std::string metric = records.front().metric_name;
    for (const MetricRecord& r : records) {
        r.validate();
        if (r.metric_name != metric)
            throw std::invalid_argument("emit_metric_report: mixed metric names");
    }

    std::set<std::pair<std::string, std::string>> model_strategies;
    std::set<std::string> datasets;
    bool any_perturbed = false;
    for (const MetricRecord& r : records) {
        model_strategies.insert({r.model, r.strategy});
        datasets.insert(r.dataset);
        any_perturbed |= !r.is_clean();
    }

    std::vector<detail::StrategySummary> summaries;
    if (any_perturbed)
        for (const auto& [model, strategy] : model_strategies)
            summaries.push_back(detail::summarize_strategy(records, model, strategy));

    std::filesystem::create_directories(out_dir);

    // Table: one row per (model, strategy), Table-1 column shape.
    {
        std::ofstream out(out_dir / ("robustness_table_" + metric + ".csv"));
        if (!out) throw std::runtime_error("cannot write robustness table");
        out << "model,strategy,avg_delta_base";
        for (const std::string& dataset : datasets)
            out << ',' << dataset << ":clean," << dataset << ":delta_base," << dataset
                << ":delta_med";
        out << '\n';
        for (const detail::StrategySummary& s : summaries) {
            out << s.model << ',' << s.strategy << ',' << format_fixed3(s.avg_delta_base);
            for (const std::string& dataset : datasets) {
                const auto it = s.datasets.find(dataset);
                if (it == s.datasets.end()) {
                    out << ",,,";
                    continue;
                }
                const auto& [clean_value, delta_base, delta_med] = it->second;
                out << ',' << format_fixed3(clean_value) << ',' << format_fixed3(delta_base) << ','
                    << (delta_med ? format_fixed3(*delta_med) : std::string());
            }
            out << '\n';
        }
        if (summaries.empty())
            out << "# no perturbed records; drop sections empty\n";
    }

    // Structured report with the full drop grid and rankings.
    {
        nlohmann::json doc;
        doc["metric_name"] = metric;
        nlohmann::json rows = nlohmann::json::array();
        const auto curve_json = [](const std::map<int, std::optional<double>>& curve) {
            nlohmann::json j = nlohmann::json::object();
            for (const auto& [level, value] : curve)
                j[std::to_string(level)] =
                    value ? nlohmann::json(*value) : nlohmann::json(nullptr);
            return j;
        };
        for (const detail::StrategySummary& s : summaries) {
            nlohmann::json row;
            row["model"] = s.model;
            row["strategy"] = s.strategy;
            row["avg_delta_base"] = s.avg_delta_base;
            nlohmann::json ds = nlohmann::json::object();
            for (const auto& [dataset, triple] : s.datasets) {
                const auto& [clean_value, delta_base, delta_med] = triple;
                ds[dataset] = {{"clean", clean_value},
                               {"delta_base", delta_base},
                               {"delta_med",
                                delta_med ? nlohmann::json(*delta_med) : nlohmann::json(nullptr)}};
            }
            row["datasets"] = ds;
            nlohmann::json grid = nlohmann::json::object();
            for (const auto& [category, curve] : s.grid) grid[category] = curve_json(curve);
            row["drop_grid"] = grid;
            row["category_means"] = s.category_means;
            row["severity_curve"] = curve_json(s.curve);
            rows.push_back(row);
        }
        doc["strategies"] = rows;
        if (summaries.empty())
            doc["notice"] = "no perturbed records; drop sections empty";

        if (any_perturbed) {
            const std::vector<RankedPerturbation> ranked =
                rank_perturbations(records, options.ranking_size, warnings);
            nlohmann::json ranking = nlohmann::json::array();
            std::size_t med_specific = 0;
            for (const RankedPerturbation& r : ranked) {
                ranking.push_back({{"perturbation_id", r.perturbation_id},
                                   {"category", r.category},
                                   {"mean_drop", r.mean_drop}});
                med_specific += r.category == "med_specific";
            }
            doc["perturbation_ranking"] = ranking;
            doc["med_specific_in_ranking"] =
                std::to_string(med_specific) + "/" + std::to_string(ranked.size()) +
                " med-specific";

            // Strategies ranked like perturbations: largest drop first.
            std::vector<const detail::StrategySummary*> order;
            for (const detail::StrategySummary& s : summaries) order.push_back(&s);
            std::sort(order.begin(), order.end(),
                      [](const detail::StrategySummary* a, const detail::StrategySummary* b) {
                          if (a->avg_delta_base != b->avg_delta_base)
                              return a->avg_delta_base > b->avg_delta_base;
                          if (a->model != b->model) return a->model < b->model;
                          return a->strategy < b->strategy;
                      });
            nlohmann::json strategy_ranking = nlohmann::json::array();
            for (const detail::StrategySummary* s : order)
                strategy_ranking.push_back({{"model", s->model},
                                            {"strategy", s->strategy},
                                            {"avg_delta_base", s->avg_delta_base}});
            doc["strategy_ranking"] = strategy_ranking;
        }

        std::ofstream out(out_dir / ("report_" + metric + ".json"));
        if (!out) throw std::runtime_error("cannot write report json");
        out << doc.dump(2) << '\n';
    }
}

inline constexpr const char* kRecordsCsvHeader =
    "model,strategy,dataset,task,perturbation_id,category,level,value,metric_name";

/// Echo every record with a round-trippable value so the report can be
/// recomputed bit-for-bit from its own output.
inline void write_records_csv(const std::vector<MetricRecord>& records,
                              const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write records csv: " + path.string());
    out << kRecordsCsvHeader << '\n';
    for (const MetricRecord& r : records)
        out << r.model << ',' << r.strategy << ',' << r.dataset << ',' << r.task << ','
            << r.perturbation_id << ',' << r.category << ',' << r.level << ','
            << format_exact(r.value) << ',' << r.metric_name << '\n';
}

inline std::vector<MetricRecord> read_records_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open records csv: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty records csv: " + path.string());
    if (line != kRecordsCsvHeader)
        throw ValidationError("unexpected records csv header in " + path.string());
    std::vector<MetricRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 9)
            throw ValidationError("records csv line " + std::to_string(line_no) +
                                  ": expected 9 fields");
        MetricRecord r;
        r.model = fields[0];
        r.strategy = fields[1];
        r.dataset = fields[2];
        r.task = fields[3];
        r.perturbation_id = fields[4];
        r.category = fields[5];
        r.level = std::stoi(fields[6]);
        r.value = std::stod(fields[7]);
        r.metric_name = fields[8];
        r.validate();
        records.push_back(std::move(r));
    }
    return records;
}

/// Split by metric and emit every per-metric report plus the records echo.
inline void emit_report(const std::vector<MetricRecord>& records,
                        const std::filesystem::path& out_dir, const ReportOptions& options = {},
                        Warnings* warnings = nullptr) {
    if (records.empty()) throw std::invalid_argument("emit_report: no records");
    std::filesystem::create_directories(out_dir);
    write_records_csv(records, out_dir / "records.csv");
    std::map<std::string, std::vector<MetricRecord>> by_metric;
    for (const MetricRecord& r : records) by_metric[r.metric_name].push_back(r);
    for (const auto& [metric, subset] : by_metric)
        emit_metric_report(subset, out_dir, options, warnings);
}

} // namespace medperturb
