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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "medperturb/io.hpp"
#include "medperturb/manifest.hpp"
#include "medperturb/registry.hpp"
#include "medperturb/ssim.hpp"

namespace medperturb {

/// One of the five SSIM severity bands. Level 1 is the mildest.
struct SeverityLevel {
    int level = 1;
    double band_low = 0.90;
    double band_high = 0.98;
};

inline SeverityLevel severity_level(int level) {
    switch (level) {
        case 1: return {1, 0.90, 0.98};
        case 2: return {2, 0.80, 0.89};
        case 3: return {3, 0.70, 0.79};
        case 4: return {4, 0.60, 0.69};
        case 5: return {5, 0.50, 0.59};
    }
    throw std::invalid_argument("severity level must be in 1..5, got " + std::to_string(level));
}

inline std::array<SeverityLevel, 5> all_severity_levels() {
    return {severity_level(1), severity_level(2), severity_level(3), severity_level(4),
            severity_level(5)};
}

/// Result of one severity search, also the cache record.
struct CalibrationEntry {
    std::string image_key;
    std::string perturbation_id;
    int level = 1;
    double t = 0.0;
    double achieved_ssim = 1.0;
    bool converged = false;
    int iterations = 0;
    std::uint64_t seed = 0;
};

/// Core search over an arbitrary intensity→SSIM function, assumed
/// non-increasing. Every SSIM evaluation counts as one iteration. Fills
/// t / achieved_ssim / converged / iterations of the returned entry.
///
/// The endpoint t=1 is probed first: if even full intensity stays above the
/// band, the band is unreachable and the search stops immediately. When the
/// iteration budget runs out without landing in the band (a non-monotone
/// schedule can cause this), the probe whose SSIM came closest to the band
/// midpoint is returned with converged=false.
inline CalibrationEntry calibrate_with(const std::function<double(double)>& ssim_of_t,
                                       const SeverityLevel& band, int max_iterations = 30) {
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    CalibrationEntry entry;
    entry.level = band.level;

    const double band_mid = (band.band_low + band.band_high) / 2.0;
    double best_t = 1.0;
    double best_ssim = 0.0;
    double best_dist = std::numeric_limits<double>::infinity();
    int evals = 0;
    const auto probe = [&](double t) {
        const double s = ssim_of_t(t);
        ++evals;
        const double dist = std::abs(s - band_mid);
        if (dist < best_dist) {
            best_dist = dist;
            best_t = t;
            best_ssim = s;
        }
        return s;
    };
    const auto in_band = [&](double s) { return s >= band.band_low && s <= band.band_high; };
    const auto finish = [&](double t, double s, bool converged) {
        entry.t = t;
        entry.achieved_ssim = s;
        entry.converged = converged;
        entry.iterations = evals;
        return entry;
    };

    const double s_full = probe(1.0);
    if (in_band(s_full)) return finish(1.0, s_full, true);
    if (s_full > band.band_high) return finish(1.0, s_full, false); // band unreachable

    double lo = 0.0; // ssim(0) = 1, above the band
    double hi = 1.0; // ssim(1) below the band
    while (evals < max_iterations && hi - lo > 1e-12) {
        const double mid = (lo + hi) / 2.0;
        const double s = probe(mid);
        if (in_band(s)) return finish(mid, s, true);
        if (s > band.band_high) lo = mid;
        else hi = mid;
    }
    return finish(best_t, best_ssim, false);
}

/// Search for the intensity that lands this (image, perturbation) pair in
/// the band. The seed is fixed for the whole search so every probed t sees
/// the same random realization.
inline CalibrationEntry calibrate(const ImageBuffer& img, const Perturbation& perturbation,
                                  const SeverityLevel& band, std::uint64_t seed,
                                  int max_iterations = 30, Warnings* warnings = nullptr) {
    CalibrationEntry entry = calibrate_with(
        [&](double t) { return ssim(img, perturbation.apply(img, t, seed, warnings)); }, band,
        max_iterations);
    entry.image_key = content_hash(img);
    entry.perturbation_id = perturbation.id;
    entry.seed = seed;
    return entry;
}

inline CalibrationEntry calibrate(const PerturbationRegistry& registry, const ImageBuffer& img,
                                  std::string_view perturbation_id, const SeverityLevel& band,
                                  std::uint64_t seed, int max_iterations = 30,
                                  Warnings* warnings = nullptr) {
    return calibrate(img, registry.require(perturbation_id), band, seed, max_iterations, warnings);
}

/// Persistent calibration store. Entries are keyed by
/// image_key|perturbation_id|level|seed, so any change to the image bytes,
/// the perturbation, the band, or the seeding invalidates naturally. The
/// serialized form is fully ordered: rerunning an unchanged dataset writes
/// byte-identical files.
class CalibrationCache {
  public:
    static std::string make_key(std::string_view image_key, std::string_view perturbation_id,
                                int level, std::uint64_t seed) {
        std::string k(image_key);
        k += '|';
        k += perturbation_id;
        k += '|';
        k += std::to_string(level);
        k += '|';
        k += std::to_string(seed);
        return k;
    }

    const CalibrationEntry* find(std::string_view image_key, std::string_view perturbation_id,
                                 int level, std::uint64_t seed) const {
        const auto it = entries_.find(make_key(image_key, perturbation_id, level, seed));
        return it == entries_.end() ? nullptr : &it->second;
    }

    void put(const CalibrationEntry& entry) {
        entries_[make_key(entry.image_key, entry.perturbation_id, entry.level, entry.seed)] = entry;
    }

    /// Images that could not be processed (unreadable, undersized). Keyed by
    /// path so repeated runs converge to one record per image.
    void record_failure(const std::string& image_path, const std::string& error) {
        failures_[image_path] = error;
    }

    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, CalibrationEntry>& entries() const { return entries_; }
    const std::map<std::string, std::string>& failures() const { return failures_; }

    static CalibrationCache load(const std::filesystem::path& path) {
        CalibrationCache cache;
        if (!std::filesystem::exists(path)) return cache;
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open calibration cache: " + path.string());
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("corrupt calibration cache " + path.string() + ": " +
                                     e.what());
        }
        const nlohmann::json entries = doc.value("entries", nlohmann::json::object());
        for (const auto& [key, v] : entries.items()) {
            CalibrationEntry entry;
            entry.image_key = v.at("image_key").get<std::string>();
            entry.perturbation_id = v.at("perturbation_id").get<std::string>();
            entry.level = v.at("level").get<int>();
            entry.t = v.at("t").get<double>();
            entry.achieved_ssim = v.at("achieved_ssim").get<double>();
            entry.converged = v.at("converged").get<bool>();
            entry.iterations = v.at("iterations").get<int>();
            entry.seed = v.at("seed").get<std::uint64_t>();
            cache.entries_[key] = entry;
        }
        const nlohmann::json failures = doc.value("failures", nlohmann::json::object());
        for (const auto& [path_key, error] : failures.items())
            cache.failures_[path_key] = error.get<std::string>();
        return cache;
    }

    /// Atomic persist: write a sibling temp file, then rename over the target.
    void save(const std::filesystem::path& path) const {
        nlohmann::json entries = nlohmann::json::object();
        for (const auto& [key, e] : entries_)
            entries[key] = {{"image_key", e.image_key},
                            {"perturbation_id", e.perturbation_id},
                            {"level", e.level},
                            {"t", e.t},
                            {"achieved_ssim", e.achieved_ssim},
                            {"converged", e.converged},
                            {"iterations", e.iterations},
                            {"seed", e.seed}};
        nlohmann::json failures = nlohmann::json::object();
        for (const auto& [path_key, error] : failures_) failures[path_key] = error;
        const nlohmann::json doc = {{"entries", entries}, {"failures", failures}};

        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        const std::filesystem::path tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp);
            if (!out) throw std::runtime_error("cannot write calibration cache: " + tmp.string());
            out << doc.dump(2) << '\n';
            if (!out) throw std::runtime_error("write failed: " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    }

  private:
    std::map<std::string, CalibrationEntry> entries_;
    std::map<std::string, std::string> failures_;
};

struct CalibrateStats {
    std::size_t computed = 0;
    std::size_t reused = 0;
    std::size_t failed = 0; // images skipped, not triples
};

namespace detail {

/// The perturbations this run applies to the manifest: all applicable to the
/// modality, narrowed by the config filter. Unknown or inapplicable filter
/// ids are validation errors.
inline std::vector<const Perturbation*> selected_perturbations(const PerturbationRegistry& registry,
                                                               const DatasetManifest& manifest,
                                                               const RunConfig& config) {
    std::vector<const Perturbation*> applicable = registry.applicable_to(manifest.modality);
    if (config.perturbation_filter.empty()) return applicable;
    std::vector<const Perturbation*> selected;
    for (const std::string& id : config.perturbation_filter) {
        const auto it = std::find_if(applicable.begin(), applicable.end(),
                                     [&](const Perturbation* p) { return p->id == id; });
        if (it == applicable.end())
            throw ValidationError("perturbation " + id + " is unknown or not applicable to " +
                                  std::string(to_string(manifest.modality)));
        selected.push_back(*it);
    }
    return selected;
}

inline std::vector<SeverityLevel> selected_levels(const RunConfig& config) {
    std::vector<SeverityLevel> levels;
    for (int level : config.levels) levels.push_back(severity_level(level));
    return levels;
}

/// Minimum image side for meaningful windowed SSIM; smaller inputs are
/// recorded as failures rather than calibrated.
inline constexpr int kMinCalibrationDim = 8;

struct LoadedSample {
    const SampleEntry* entry = nullptr;
    ImageBuffer image;
    std::string image_key;
};

/// Load every readable, adequately sized sample; record the rest as cache
/// failures.
inline std::vector<LoadedSample> load_samples(const DatasetManifest& manifest,
                                              CalibrationCache& cache, CalibrateStats& stats,
                                              Warnings* warnings) {
    std::vector<LoadedSample> loaded;
    for (const SampleEntry& sample : manifest.samples) {
        LoadedSample ls;
        ls.entry = &sample;
        try {
            ls.image = load_image(sample.image_path);
        } catch (const std::exception& e) {
            cache.record_failure(sample.image_path.string(), e.what());
            warn(warnings, "skipping sample " + sample.sample_id + ": " + e.what());
            ++stats.failed;
            continue;
        }
        if (ls.image.width < kMinCalibrationDim || ls.image.height < kMinCalibrationDim) {
            cache.record_failure(sample.image_path.string(),
                                 "image smaller than " + std::to_string(kMinCalibrationDim) + "x" +
                                     std::to_string(kMinCalibrationDim));
            warn(warnings, "skipping sample " + sample.sample_id + ": image too small");
            ++stats.failed;
            continue;
        }
        ls.image_key = content_hash(ls.image);
        loaded.push_back(std::move(ls));
    }
    return loaded;
}

/// Indices of an evenly spaced subsample of size ≤ limit.
inline std::vector<std::size_t> spaced_indices(std::size_t n, std::size_t limit) {
    std::vector<std::size_t> idx;
    if (n == 0) return idx;
    const std::size_t k = std::min(n, limit);
    for (std::size_t i = 0; i < k; ++i)
        idx.push_back(k == 1 ? 0 : i * (n - 1) / (k - 1));
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

inline double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

} // namespace detail

/// Populate the cache with one CalibrationEntry per (sample, applicable
/// perturbation, level). Entries already present (same image bytes,
/// perturbation, level, seed) are reused untouched. With
/// config.dataset_level_calibration, a ≤32-image evenly spaced subsample is
/// searched per (perturbation, level) and the median converged intensity is
/// applied to every image (each entry still records its own achieved SSIM
/// and band containment); datasets where no subsample search converges fall
/// back to per-image search for that pair.
inline CalibrationCache calibrate_dataset(const PerturbationRegistry& registry,
                                          const DatasetManifest& manifest, const RunConfig& config,
                                          CalibrateStats* stats_out = nullptr,
                                          Warnings* warnings = nullptr) {
    CalibrationCache cache = config.cache_path.empty() ? CalibrationCache()
                                                       : CalibrationCache::load(config.cache_path);
    CalibrateStats stats;
    const std::vector<const Perturbation*> perturbations =
        detail::selected_perturbations(registry, manifest, config);
    const std::vector<SeverityLevel> levels = detail::selected_levels(config);
    const std::vector<detail::LoadedSample> samples =
        detail::load_samples(manifest, cache, stats, warnings);

    const auto seed_for = [&](const detail::LoadedSample& s, const Perturbation& p, int level) {
        return derive_seed(config.master_seed, manifest.dataset_id, s.entry->sample_id, p.id,
                           level);
    };

    for (const Perturbation* p : perturbations) {
        for (const SeverityLevel& band : levels) {
            // Partition into cached and pending work for this (p, band).
            std::vector<const detail::LoadedSample*> pending;
            for (const detail::LoadedSample& s : samples) {
                if (cache.find(s.image_key, p->id, band.level, seed_for(s, *p, band.level)))
                    ++stats.reused;
                else pending.push_back(&s);
            }
            if (pending.empty()) continue;

            double shared_t = -1.0;
            if (config.dataset_level_calibration) {
                std::vector<double> converged_t;
                for (std::size_t i : detail::spaced_indices(pending.size(), 32)) {
                    const detail::LoadedSample& s = *pending[i];
                    const CalibrationEntry probe =
                        calibrate(s.image, *p, band, seed_for(s, *p, band.level),
                                  config.max_iterations, warnings);
                    if (probe.converged) converged_t.push_back(probe.t);
                }
                if (!converged_t.empty()) shared_t = detail::median(std::move(converged_t));
                else
                    warn(warnings, "dataset-level calibration found no converged intensity for " +
                                       p->id + " level " + std::to_string(band.level) +
                                       "; falling back to per-image search");
            }

            for (const detail::LoadedSample* s : pending) {
                const std::uint64_t seed = seed_for(*s, *p, band.level);
                CalibrationEntry entry;
                if (shared_t >= 0.0) {
                    entry.image_key = s->image_key;
                    entry.perturbation_id = p->id;
                    entry.level = band.level;
                    entry.t = shared_t;
                    entry.seed = seed;
                    entry.iterations = 0;
                    entry.achieved_ssim =
                        ssim(s->image, p->apply(s->image, shared_t, seed, warnings));
                    entry.converged = entry.achieved_ssim >= band.band_low &&
                                      entry.achieved_ssim <= band.band_high;
                } else {
                    entry = calibrate(s->image, *p, band, seed, config.max_iterations, warnings);
                }
                cache.put(entry);
                ++stats.computed;
            }
        }
    }

    if (!config.cache_path.empty()) cache.save(config.cache_path);
    if (stats_out) *stats_out = stats;
    return cache;
}

} // namespace medperturb
