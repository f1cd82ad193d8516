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
#include <cmath>
#include <optional>
#include <string_view>

#include "medperturb/filters.hpp"
#include "medperturb/image.hpp"
#include "medperturb/perturb_base.hpp"
#include "medperturb/rng.hpp"

namespace medperturb {

enum class Modality { CT, MRI, Ultrasound, Pathology, Endoscopy, OCT, XRay, Dermoscopy };

inline constexpr std::array<Modality, 8> all_modalities() {
    return {Modality::CT,        Modality::MRI, Modality::Ultrasound, Modality::Pathology,
            Modality::Endoscopy, Modality::OCT, Modality::XRay,       Modality::Dermoscopy};
}

inline std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::CT: return "CT";
        case Modality::MRI: return "MRI";
        case Modality::Ultrasound: return "Ultrasound";
        case Modality::Pathology: return "Pathology";
        case Modality::Endoscopy: return "Endoscopy";
        case Modality::OCT: return "OCT";
        case Modality::XRay: return "XRay";
        case Modality::Dermoscopy: return "Dermoscopy";
    }
    return "";
}

inline std::optional<Modality> modality_from_string(std::string_view name) {
    for (Modality m : all_modalities())
        if (to_string(m) == name) return m;
    return std::nullopt;
}

/// Clinical artifact simulators, one primary modality each. The two
/// reflection kinds share an implementation.
enum class MedicalKind {
    ct_metal_streak,
    ct_beam_hardening,
    ct_window_level,
    mri_bias_field,
    mri_ghosting,
    us_acoustic_shadow,
    us_reverberation,
    path_stain_shift,
    endo_specular_reflection,
    endo_bubbles,
    oct_shadow,
    oct_blink,
    oct_defocus,
    xray_scatter,
    xray_exposure,
    xray_grid,
    derm_light_reflection,
};

inline constexpr int kMedicalKindCount = 17;

inline constexpr std::array<MedicalKind, kMedicalKindCount> all_medical_kinds() {
    return {MedicalKind::ct_metal_streak,
            MedicalKind::ct_beam_hardening,
            MedicalKind::ct_window_level,
            MedicalKind::mri_bias_field,
            MedicalKind::mri_ghosting,
            MedicalKind::us_acoustic_shadow,
            MedicalKind::us_reverberation,
            MedicalKind::path_stain_shift,
            MedicalKind::endo_specular_reflection,
            MedicalKind::endo_bubbles,
            MedicalKind::oct_shadow,
            MedicalKind::oct_blink,
            MedicalKind::oct_defocus,
            MedicalKind::xray_scatter,
            MedicalKind::xray_exposure,
            MedicalKind::xray_grid,
            MedicalKind::derm_light_reflection};
}

inline std::string_view to_string(MedicalKind kind) {
    switch (kind) {
        case MedicalKind::ct_metal_streak: return "ct_metal_streak";
        case MedicalKind::ct_beam_hardening: return "ct_beam_hardening";
        case MedicalKind::ct_window_level: return "ct_window_level";
        case MedicalKind::mri_bias_field: return "mri_bias_field";
        case MedicalKind::mri_ghosting: return "mri_ghosting";
        case MedicalKind::us_acoustic_shadow: return "us_acoustic_shadow";
        case MedicalKind::us_reverberation: return "us_reverberation";
        case MedicalKind::path_stain_shift: return "path_stain_shift";
        case MedicalKind::endo_specular_reflection: return "endo_specular_reflection";
        case MedicalKind::endo_bubbles: return "endo_bubbles";
        case MedicalKind::oct_shadow: return "oct_shadow";
        case MedicalKind::oct_blink: return "oct_blink";
        case MedicalKind::oct_defocus: return "oct_defocus";
        case MedicalKind::xray_scatter: return "xray_scatter";
        case MedicalKind::xray_exposure: return "xray_exposure";
        case MedicalKind::xray_grid: return "xray_grid";
        case MedicalKind::derm_light_reflection: return "derm_light_reflection";
    }
    return "";
}

inline std::optional<MedicalKind> medical_kind_from_string(std::string_view name) {
    for (MedicalKind k : all_medical_kinds())
        if (to_string(k) == name) return k;
    return std::nullopt;
}

inline Modality primary_modality(MedicalKind kind) {
    switch (kind) {
        case MedicalKind::ct_metal_streak:
        case MedicalKind::ct_beam_hardening:
        case MedicalKind::ct_window_level: return Modality::CT;
        case MedicalKind::mri_bias_field:
        case MedicalKind::mri_ghosting: return Modality::MRI;
        case MedicalKind::us_acoustic_shadow:
        case MedicalKind::us_reverberation: return Modality::Ultrasound;
        case MedicalKind::path_stain_shift: return Modality::Pathology;
        case MedicalKind::endo_specular_reflection:
        case MedicalKind::endo_bubbles: return Modality::Endoscopy;
        case MedicalKind::oct_shadow:
        case MedicalKind::oct_blink:
        case MedicalKind::oct_defocus: return Modality::OCT;
        case MedicalKind::xray_scatter:
        case MedicalKind::xray_exposure:
        case MedicalKind::xray_grid: return Modality::XRay;
        case MedicalKind::derm_light_reflection: return Modality::Dermoscopy;
    }
    throw std::invalid_argument("unknown medical kind");
}

namespace detail {

// All simulators draw their random geometry up front, independent of t, so
// the calibration search evaluates the same realization at every intensity.

inline ImageBuffer med_metal_streak(const ImageBuffer& img, double t, SplitMix64& rng) {
    const double fx = img.width * rng.next_in(0.3, 0.7);
    const double fy = img.height * rng.next_in(0.3, 0.7);
    std::array<double, 16> ray_angle{};
    for (double& a : ray_angle) a = rng.next_in(0.0, 2.0 * M_PI);
    const int count = std::min<int>(16, 4 + static_cast<int>(std::floor(12.0 * t)));
    const double amplitude = 0.5 * t;
    const double ang_sigma = 0.015; // radians; narrow streaks

    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double alpha = std::atan2(y - fy, x - fx);
            double add = 0.0;
            for (int k = 0; k < count; ++k) {
                double d = std::fmod(alpha - ray_angle[k], 2.0 * M_PI);
                if (d > M_PI) d -= 2.0 * M_PI;
                if (d < -M_PI) d += 2.0 * M_PI;
                const double g = std::exp(-d * d / (2.0 * ang_sigma * ang_sigma));
                add += (k % 2 == 0 ? amplitude : -amplitude) * g;
            }
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = clamp01(img.at(x, y, c) + add);
        }
    }
    return out;
}

inline ImageBuffer med_beam_hardening(const ImageBuffer& img, double t) {
    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;
    const double radius_max = std::hypot(cx, cy);
    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double r = std::hypot(x - cx, y - cy) / radius_max;
            const double factor = 1.0 - 0.6 * t * (1.0 - r * r);
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = clamp01(img.at(x, y, c) * factor);
        }
    return out;
}

inline ImageBuffer med_window_level(const ImageBuffer& img, double t, SplitMix64& rng) {
    const int sign = rng.next_sign();
    const double level = 0.5 + sign * 0.3 * t;
    const double window = 1.0 - 0.5 * t;
    ImageBuffer out = img;
    for (double& v : out.data) v = clamp01((v - (level - window / 2.0)) / window);
    return out;
}

inline ImageBuffer med_bias_field(const ImageBuffer& img, double t, SplitMix64& rng) {
    const double bx = img.width * rng.next_in(0.2, 0.8);
    const double by = img.height * rng.next_in(0.2, 0.8);
    const double sigma = std::min(img.width, img.height) * rng.next_in(0.25, 0.45);
    const int sign = rng.next_sign();
    const double peak = sign * 0.8 * t;
    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double d2 = (x - bx) * (x - bx) + (y - by) * (y - by);
            const double field = std::exp(peak * std::exp(-d2 / (2.0 * sigma * sigma)));
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = clamp01(img.at(x, y, c) * field);
        }
    return out;
}

inline ImageBuffer med_ghosting(const ImageBuffer& img, double t, SplitMix64& rng) {
    const bool along_x = (rng.next_u64() & 1ull) != 0;
    const double alpha = 0.5 * t;
    const int n = along_x ? img.width : img.height;
    const std::array<int, 4> offsets = {n / 4, -n / 4, n / 2, -n / 2};
    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double ghost = 0.0;
                for (int off : offsets) {
                    // Circular shift, matching the aliasing origin of ghosting.
                    int sx = x, sy = y;
                    if (along_x) sx = ((x + off) % img.width + img.width) % img.width;
                    else sy = ((y + off) % img.height + img.height) % img.height;
                    ghost += img.at(sx, sy, c);
                }
                ghost /= offsets.size();
                out.at(x, y, c) = clamp01((1.0 - alpha) * img.at(x, y, c) + alpha * ghost);
            }
    return out;
}

inline ImageBuffer med_acoustic_shadow(const ImageBuffer& img, double t, SplitMix64& rng) {
    const double ax = img.width * rng.next_in(0.2, 0.8);
    const double ay = img.height * rng.next_in(0.05, 0.3);
    const double tilt = rng.next_in(-15.0, 15.0) * M_PI / 180.0;
    const double half_angle = rng.next_in(10.0, 20.0) * M_PI / 180.0;
    const double dx = std::sin(tilt);
    const double dy = std::cos(tilt);
    const double cos_half = std::cos(half_angle);
    const double attenuation = 1.0 - 0.85 * t;
    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double vx = x - ax;
            const double vy = y - ay;
            const double len = std::hypot(vx, vy);
            if (len <= 0.0) continue;
            if ((vx * dx + vy * dy) / len > cos_half)
                for (int c = 0; c < img.channels; ++c)
                    out.at(x, y, c) = clamp01(img.at(x, y, c) * attenuation);
        }
    return out;
}

inline ImageBuffer med_reverberation(const ImageBuffer& img, double t, SplitMix64& rng) {
    const double depth = img.height * rng.next_in(0.2, 0.6);
    const double period = rng.next_in(8.0, 16.0);
    const double amplitude = 0.4 * t;
    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y) {
        if (y < depth) continue;
        const double add = amplitude * std::sin(2.0 * M_PI * (y - depth) / period);
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = clamp01(img.at(x, y, c) + add);
    }
    return out;
}

inline void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    v = mx;
    s = mx > 0.0 ? d / mx : 0.0;
    if (d <= 0.0) {
        h = 0.0;
        return;
    }
    if (mx == r) h = std::fmod((g - b) / d, 6.0);
    else if (mx == g) h = (b - r) / d + 2.0;
    else h = (r - g) / d + 4.0;
    h /= 6.0;
    if (h < 0.0) h += 1.0;
}

inline void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    const double hh = h * 6.0;
    const int sector = static_cast<int>(std::floor(hh)) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double u = v * (1.0 - s * (1.0 - f));
    switch (sector) {
        case 0: r = v; g = u; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = u; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = u; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

inline ImageBuffer med_stain_shift(const ImageBuffer& img, double t, SplitMix64& rng) {
    const int hue_sign = rng.next_sign();
    const int sat_sign = rng.next_sign();
    if (img.channels != 3) return img; // stain chromaticity is undefined on grayscale
    const double hue_shift = hue_sign * 0.12 * t;
    const double sat_scale = 1.0 + sat_sign * 0.6 * t;
    ImageBuffer out = img;
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        double h, s, v;
        rgb_to_hsv(img.data[p * 3], img.data[p * 3 + 1], img.data[p * 3 + 2], h, s, v);
        h = h + hue_shift;
        h -= std::floor(h); // wrap to [0,1)
        s = clamp01(s * sat_scale);
        hsv_to_rgb(h, s, v, out.data[p * 3], out.data[p * 3 + 1], out.data[p * 3 + 2]);
    }
    return out;
}

// Shared by endo_specular_reflection and derm_light_reflection: soft-edged
// elliptical highlights whose count and total area grow with t. Candidate
// geometry is drawn for the maximum count so positions are stable in t.
inline ImageBuffer med_light_reflection(const ImageBuffer& img, double t, SplitMix64& rng) {
    constexpr int max_spots = 8;
    struct Spot {
        double cx, cy, theta, aspect, weight;
    };
    std::array<Spot, max_spots> spots{};
    double weight_sum = 0.0;
    for (Spot& sp : spots) {
        sp.cx = img.width * rng.next_unit();
        sp.cy = img.height * rng.next_unit();
        sp.theta = rng.next_in(0.0, M_PI);
        sp.aspect = rng.next_in(1.0, 2.5);
        sp.weight = rng.next_in(0.5, 1.5);
        weight_sum += sp.weight;
    }
    const int count = std::min(max_spots, 2 + static_cast<int>(std::floor(6.0 * t)));
    const double area_budget = 0.12 * t * img.width * img.height;

    ImageBuffer out = img;
    for (int k = 0; k < count; ++k) {
        const Spot& sp = spots[k];
        const double area = area_budget * sp.weight / weight_sum;
        if (area <= 0.0) continue;
        const double a = std::sqrt(area * sp.aspect / M_PI);
        const double b = a / sp.aspect;
        const double ct = std::cos(sp.theta);
        const double st = std::sin(sp.theta);
        const int reach_x = static_cast<int>(std::ceil(3.0 * a));
        const int reach_y = static_cast<int>(std::ceil(3.0 * a));
        const int x0 = std::max(0, static_cast<int>(sp.cx) - reach_x);
        const int x1 = std::min(img.width - 1, static_cast<int>(sp.cx) + reach_x);
        const int y0 = std::max(0, static_cast<int>(sp.cy) - reach_y);
        const int y1 = std::min(img.height - 1, static_cast<int>(sp.cy) + reach_y);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double rx = x - sp.cx;
                const double ry = y - sp.cy;
                const double u = rx * ct + ry * st;
                const double v = -rx * st + ry * ct;
                const double e2 = (u * u) / (a * a) + (v * v) / (b * b);
                const double m = std::exp(-e2 / 2.0);
                for (int c = 0; c < img.channels; ++c)
                    out.at(x, y, c) = clamp01(out.at(x, y, c) * (1.0 - m) + m);
            }
    }
    return out;
}

inline ImageBuffer med_bubbles(const ImageBuffer& img, double t, SplitMix64& rng) {
    constexpr int max_bubbles = 13;
    struct Bubble {
        double cx, cy, radius;
    };
    std::array<Bubble, max_bubbles> bubbles{};
    const double min_dim = std::min(img.width, img.height);
    for (Bubble& b : bubbles) {
        b.cx = img.width * rng.next_unit();
        b.cy = img.height * rng.next_unit();
        b.radius = min_dim * rng.next_in(0.02, 0.08);
    }
    const int count = std::min(max_bubbles, 3 + static_cast<int>(std::floor(10.0 * t)));
    const double rim_gain = 0.5 * t;
    const double interior_loss = 0.2 * t;

    ImageBuffer out = img;
    for (int k = 0; k < count; ++k) {
        const Bubble& b = bubbles[k];
        const double rim_sigma = std::max(0.75, 0.15 * b.radius);
        const int reach = static_cast<int>(std::ceil(b.radius + 3.0 * rim_sigma));
        const int x0 = std::max(0, static_cast<int>(b.cx) - reach);
        const int x1 = std::min(img.width - 1, static_cast<int>(b.cx) + reach);
        const int y0 = std::max(0, static_cast<int>(b.cy) - reach);
        const int y1 = std::min(img.height - 1, static_cast<int>(b.cy) + reach);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double rho = std::hypot(x - b.cx, y - b.cy);
                const double rim = rim_gain *
                    std::exp(-(rho - b.radius) * (rho - b.radius) / (2.0 * rim_sigma * rim_sigma));
                const double interior =
                    interior_loss * std::exp(-rho * rho / (2.0 * 0.6 * b.radius * 0.6 * b.radius));
                for (int c = 0; c < img.channels; ++c)
                    out.at(x, y, c) = clamp01(out.at(x, y, c) + rim - interior);
            }
    }
    return out;
}

inline ImageBuffer med_oct_shadow(const ImageBuffer& img, double t, SplitMix64& rng) {
    constexpr int max_bands = 4;
    struct Band {
        double center, width;
    };
    std::array<Band, max_bands> bands{};
    for (Band& b : bands) {
        b.center = img.width * rng.next_unit();
        b.width = std::max(1.0, img.width * rng.next_in(0.02, 0.06));
    }
    const int count = std::min(max_bands, 1 + static_cast<int>(std::floor(3.0 * t)));
    const double attenuation = 1.0 - 0.8 * t;
    ImageBuffer out = img;
    for (int k = 0; k < count; ++k) {
        const int x0 = std::max(0, static_cast<int>(std::floor(bands[k].center - bands[k].width / 2)));
        const int x1 = std::min(img.width - 1,
                                static_cast<int>(std::floor(bands[k].center + bands[k].width / 2)));
        for (int x = x0; x <= x1; ++x)
            for (int y = 0; y < img.height; ++y)
                for (int c = 0; c < img.channels; ++c)
                    out.at(x, y, c) = clamp01(out.at(x, y, c) * attenuation);
    }
    return out;
}

inline ImageBuffer med_oct_blink(const ImageBuffer& img, double t, SplitMix64& rng) {
    // Height grows about a fixed center so the zeroed band nests as t rises.
    const double center = img.height * rng.next_unit();
    const int band_h = std::min(img.height, 2 + static_cast<int>(std::floor(0.15 * t * img.height)));
    int start = static_cast<int>(std::lround(center - band_h / 2.0));
    start = std::clamp(start, 0, img.height - band_h);
    ImageBuffer out = img;
    for (int y = start; y < start + band_h; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = 0.0;
    return out;
}

inline ImageBuffer med_oct_defocus(const ImageBuffer& img, double t, Warnings* warnings) {
    double radius = 6.0 * t;
    const double max_radius = (std::min(img.width, img.height) - 1) / 2.0;
    if (radius > max_radius) {
        warn(warnings, "defocus kernel radius clamped");
        radius = max_radius;
    }
    if (radius < 0.5) return img;
    const int r = static_cast<int>(std::ceil(radius));
    const int k = 2 * r + 1;
    std::vector<double> kernel(static_cast<std::size_t>(k) * k, 0.0);
    double sum = 0.0;
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < k; ++i) {
            const double d = std::hypot(i - r, j - r);
            const double cover = std::clamp(radius + 0.5 - d, 0.0, 1.0); // anti-aliased disc
            kernel[static_cast<std::size_t>(j) * k + i] = cover;
            sum += cover;
        }
    for (double& v : kernel) v /= sum;
    return convolve(img, kernel, k, k);
}

inline ImageBuffer med_xray_scatter(const ImageBuffer& img, double t, Warnings* warnings) {
    const double beta = 0.7 * t;
    const ImageBuffer haze = gaussian_blur(img, 0.1 * std::min(img.width, img.height), warnings);
    ImageBuffer out = img;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = clamp01((1.0 - beta) * img.data[i] + beta * (haze.data[i] + 0.1));
    return out;
}

inline ImageBuffer med_xray_exposure(const ImageBuffer& img, double t, SplitMix64& rng) {
    const int sign = rng.next_sign();
    // Overexposure uses the reciprocal exponent; 1 - 1.5t would go negative.
    const double gamma = sign > 0 ? 1.0 + 1.5 * t : 1.0 / (1.0 + 1.5 * t);
    ImageBuffer out = img;
    for (double& v : out.data) v = clamp01(std::pow(v, gamma));
    return out;
}

inline ImageBuffer med_xray_grid(const ImageBuffer& img, double t, SplitMix64& rng) {
    const bool vertical = (rng.next_u64() & 1ull) != 0;
    const double period = rng.next_in(4.0, 8.0);
    const double phase = rng.next_in(0.0, 2.0 * M_PI);
    const double amplitude = 0.25 * t;
    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double coord = vertical ? x : y;
            const double add = amplitude * std::sin(2.0 * M_PI * coord / period + phase);
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = clamp01(img.at(x, y, c) + add);
        }
    return out;
}

} // namespace detail

/// Apply one clinical artifact simulator at intensity t in [0,1]. Same
/// contract as apply_base: identity at t = 0, deterministic in (kind, img,
/// t, seed), output clamped to [0,1].
inline ImageBuffer apply_medical(MedicalKind kind, const ImageBuffer& img, double t,
                                 std::uint64_t seed, Warnings* warnings = nullptr) {
    check_intensity(t);
    if (t == 0.0) return img;
    SplitMix64 rng(seed);
    switch (kind) {
        case MedicalKind::ct_metal_streak: return detail::med_metal_streak(img, t, rng);
        case MedicalKind::ct_beam_hardening: return detail::med_beam_hardening(img, t);
        case MedicalKind::ct_window_level: return detail::med_window_level(img, t, rng);
        case MedicalKind::mri_bias_field: return detail::med_bias_field(img, t, rng);
        case MedicalKind::mri_ghosting: return detail::med_ghosting(img, t, rng);
        case MedicalKind::us_acoustic_shadow: return detail::med_acoustic_shadow(img, t, rng);
        case MedicalKind::us_reverberation: return detail::med_reverberation(img, t, rng);
        case MedicalKind::path_stain_shift: return detail::med_stain_shift(img, t, rng);
        case MedicalKind::endo_specular_reflection:
        case MedicalKind::derm_light_reflection: return detail::med_light_reflection(img, t, rng);
        case MedicalKind::endo_bubbles: return detail::med_bubbles(img, t, rng);
        case MedicalKind::oct_shadow: return detail::med_oct_shadow(img, t, rng);
        case MedicalKind::oct_blink: return detail::med_oct_blink(img, t, rng);
        case MedicalKind::oct_defocus: return detail::med_oct_defocus(img, t, warnings);
        case MedicalKind::xray_scatter: return detail::med_xray_scatter(img, t, warnings);
        case MedicalKind::xray_exposure: return detail::med_xray_exposure(img, t, rng);
        case MedicalKind::xray_grid: return detail::med_xray_grid(img, t, rng);
    }
    throw std::invalid_argument("unknown medical kind");
}

} // namespace medperturb
