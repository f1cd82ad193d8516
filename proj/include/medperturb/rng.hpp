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
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace medperturb {

/// Deterministic stream generator (splitmix64). The whole stream is a pure
/// function of the seed, so a perturbation evaluated at different intensities
/// sees the same realization as long as draws never depend on the intensity.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1), 53-bit resolution.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0,1]; safe as a log() argument.
    double next_unit_open() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double next_in(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    int next_sign() {
        return (next_u64() & 1ull) ? 1 : -1;
    }

    /// Standard normal via Box-Muller; pairs are cached.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_unit_open();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// FNV-1a over raw bytes; stable across platforms and runs.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64_append(std::uint64_t h, std::string_view bytes) {
    return fnv1a64(bytes, h);
}

/// Per-application seed. Derived from identifiers only, never from pixel
/// content, so adding samples to a manifest does not disturb existing outputs.
inline std::uint64_t derive_seed(std::uint64_t master_seed,
                                 const std::string& dataset_id,
                                 const std::string& sample_id,
                                 const std::string& perturbation_id,
                                 int level) {
    std::uint64_t h = fnv1a64(std::to_string(master_seed));
    h = fnv1a64_append(h, "\x1f");
    h = fnv1a64_append(h, dataset_id);
    h = fnv1a64_append(h, "\x1f");
    h = fnv1a64_append(h, sample_id);
    h = fnv1a64_append(h, "\x1f");
    h = fnv1a64_append(h, perturbation_id);
    h = fnv1a64_append(h, "\x1f");
    h = fnv1a64_append(h, std::to_string(level));
    return h;
}

} // namespace medperturb
