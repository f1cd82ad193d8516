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

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "medperturb/perturb_base.hpp"
#include "medperturb/perturb_medical.hpp"

namespace medperturb {

enum class Category { base, med_specific };

inline std::string_view to_string(Category c) {
    return c == Category::base ? "base" : "med_specific";
}

/// One registered corruption: a canonical snake_case id, its category, and
/// the intensity-parameterized image transform.
struct Perturbation {
    std::string id;
    Category category = Category::base;
    /// Primary modality for med_specific kinds; empty for base kinds, which
    /// apply everywhere.
    std::optional<Modality> modality;
    std::function<ImageBuffer(const ImageBuffer&, double, std::uint64_t, Warnings*)> apply;
    /// Set for the geometric base kinds, whose ground truth must be moved
    /// with the image. Maps (width, height, t, seed) to the forward affine.
    std::function<Affine(int, int, double, std::uint64_t)> transform;

    bool is_geometric() const { return static_cast<bool>(transform); }
};

/// Ordered collection of perturbations. The standard registry holds the 12
/// cross-modality base kinds followed by the 17 clinical simulators; tests
/// and extensions may add further entries without format changes.
class PerturbationRegistry {
  public:
    static PerturbationRegistry standard() {
        PerturbationRegistry reg;
        for (BaseKind kind : all_base_kinds()) {
            Perturbation p;
            p.id = std::string(to_string(kind));
            p.category = Category::base;
            p.apply = [kind](const ImageBuffer& img, double t, std::uint64_t seed,
                             Warnings* warnings) { return apply_base(kind, img, t, seed, warnings); };
            if (is_geometric(kind))
                p.transform = [kind](int w, int h, double t, std::uint64_t seed) {
                    return geometric_transform(kind, w, h, t, seed);
                };
            reg.add(std::move(p));
        }
        for (MedicalKind kind : all_medical_kinds()) {
            Perturbation p;
            p.id = std::string(to_string(kind));
            p.category = Category::med_specific;
            p.modality = primary_modality(kind);
            p.apply = [kind](const ImageBuffer& img, double t, std::uint64_t seed,
                             Warnings* warnings) {
                return apply_medical(kind, img, t, seed, warnings);
            };
            reg.add(std::move(p));
        }
        return reg;
    }

    void add(Perturbation p) {
        if (find(p.id) != nullptr)
            throw std::invalid_argument("duplicate perturbation id: " + p.id);
        entries_.push_back(std::move(p));
    }

    const Perturbation* find(std::string_view id) const {
        for (const Perturbation& p : entries_)
            if (p.id == id) return &p;
        return nullptr;
    }

    const Perturbation& require(std::string_view id) const {
        const Perturbation* p = find(id);
        if (p == nullptr) throw std::invalid_argument("unknown perturbation: " + std::string(id));
        return *p;
    }

    /// All base kinds (registry order) followed by the med_specific kinds
    /// registered for the modality (registry order).
    std::vector<const Perturbation*> applicable_to(Modality modality) const {
        std::vector<const Perturbation*> out;
        for (const Perturbation& p : entries_)
            if (p.category == Category::base) out.push_back(&p);
        for (const Perturbation& p : entries_)
            if (p.category == Category::med_specific && p.modality == modality) out.push_back(&p);
        return out;
    }

    const std::vector<Perturbation>& entries() const { return entries_; }

  private:
    std::vector<Perturbation> entries_;
};

} // namespace medperturb
