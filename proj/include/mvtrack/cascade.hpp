#pragma once

#include "mvtrack/errors.hpp"
#include "mvtrack/geometry/box.hpp"

#include <cmath>
#include <random>
#include <span>
#include <vector>

namespace mvtrack::cascade {

using geometry::BoxState;

/// Per-stage refinement cue. Offsets are scaled by the current box size,
/// dimension terms are log-ratios, and heading/velocity are replacements.
struct BoxDelta {
    double d_x = 0.0, d_y = 0.0, d_z = 0.0;
    double d_w = 0.0, d_l = 0.0, d_h = 0.0;
    double cos_yaw = 1.0, sin_yaw = 0.0;
    double vx = 0.0, vy = 0.0;

    /// Zero offsets that keep heading and velocity of `box` unchanged.
    [[nodiscard]] static BoxDelta identity_for(const BoxState& box) {
        BoxDelta d;
        d.cos_yaw = box.cos_yaw;
        d.sin_yaw = box.sin_yaw;
        d.vx = box.vx;
        d.vy = box.vy;
        return d;
    }

    [[nodiscard]] bool all_finite() const {
        for (double v : {d_x, d_y, d_z, d_w, d_l, d_h, cos_yaw, sin_yaw, vx, vy})
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Axis-aligned detection volume in meters.
struct DetectionRegion {
    double x_min = -61.2, x_max = 61.2;
    double y_min = -61.2, y_max = 61.2;
    double z_min = -5.0, z_max = 3.0;

    void validate() const {
        if (!(x_min < x_max && y_min < y_max && z_min < z_max))
            throw InvalidInput("detection region needs min < max on every axis");
    }
    [[nodiscard]] double volume() const {
        return (x_max - x_min) * (y_max - y_min) * (z_max - z_min);
    }
};

/// Below this norm a (cos, sin) pair carries no heading and falls back to yaw 0.
inline constexpr double kDegenerateHeading = 1e-12;
/// A (cos, sin) pair within this of unit norm is not renormalized.
inline constexpr double kUnitTolerance = 1e-12;

[[nodiscard]] inline BoxState apply_adjustment(const BoxState& box, const BoxDelta& delta) {
    if (!delta.all_finite()) throw AdjustmentError("box delta has a non-finite field");
    BoxState out = box;
    out.cx = delta.d_x * box.w + box.cx;
    out.cy = delta.d_y * box.l + box.cy;
    out.cz = delta.d_z * box.h + box.cz;
    out.w = std::exp(delta.d_w) * box.w;
    out.l = std::exp(delta.d_l) * box.l;
    out.h = std::exp(delta.d_h) * box.h;

    const double norm = std::hypot(delta.cos_yaw, delta.sin_yaw);
    if (std::abs(norm - 1.0) <= kUnitTolerance) {
        // already unit: copied verbatim so an identity delta is exact
        out.cos_yaw = delta.cos_yaw;
        out.sin_yaw = delta.sin_yaw;
    } else if (norm > kDegenerateHeading) {
        out.cos_yaw = delta.cos_yaw / norm;
        out.sin_yaw = delta.sin_yaw / norm;
    } else {
        out.cos_yaw = 1.0;
        out.sin_yaw = 0.0;
    }
    out.vx = delta.vx;
    out.vy = delta.vy;

    if (!out.all_finite() || !(out.w > 0.0 && out.l > 0.0 && out.h > 0.0))
        throw AdjustmentError("box adjustment produced a non-finite or degenerate box");
    return out;
}

/// Maps the centre affinely onto [0, 1]^3 over the region; other fields untouched.
[[nodiscard]] inline BoxState normalize_box(const BoxState& box, const DetectionRegion& region = {}) {
    region.validate();
    BoxState out = box;
    out.cx = (box.cx - region.x_min) / (region.x_max - region.x_min);
    out.cy = (box.cy - region.y_min) / (region.y_max - region.y_min);
    out.cz = (box.cz - region.z_min) / (region.z_max - region.z_min);
    return out;
}

[[nodiscard]] inline BoxState denormalize_box(const BoxState& box, const DetectionRegion& region = {}) {
    region.validate();
    BoxState out = box;
    out.cx = box.cx * (region.x_max - region.x_min) + region.x_min;
    out.cy = box.cy * (region.y_max - region.y_min) + region.y_min;
    out.cz = box.cz * (region.z_max - region.z_min) + region.z_min;
    return out;
}

inline constexpr int kMaxStages = 6;
inline constexpr int kDefaultStages = 6;

/// Applies stage t's delta i to box i, for t = 0..stages-1, and returns the
/// last stage's boxes. `deltas[t]` must have one entry per box.
[[nodiscard]] inline std::vector<BoxState> run_cascade(std::span<const BoxState> initial,
                                                       std::span<const std::vector<BoxDelta>> deltas) {
    if (deltas.empty() || deltas.size() > static_cast<std::size_t>(kMaxStages))
        throw InvalidInput("run_cascade: stage count must be in [1, 6]");
    std::vector<BoxState> boxes(initial.begin(), initial.end());
    for (std::size_t t = 0; t < deltas.size(); ++t) {
        if (deltas[t].size() != boxes.size())
            throw InvalidInput("run_cascade: stage " + std::to_string(t) + " has " +
                               std::to_string(deltas[t].size()) + " deltas for " +
                               std::to_string(boxes.size()) + " boxes");
        for (std::size_t i = 0; i < boxes.size(); ++i) boxes[i] = apply_adjustment(boxes[i], deltas[t][i]);
    }
    return boxes;
}

/// Random query boxes: uniform centres in the region, 4.0 x 2.0 x 1.5 m
/// (l, w, h), yaw 0 and zero velocity.
template <typename Rng>
[[nodiscard]] std::vector<BoxState> random_query_boxes(std::size_t n, Rng& rng,
                                                       const DetectionRegion& region = {}) {
    region.validate();
    std::uniform_real_distribution<double> ux(region.x_min, region.x_max);
    std::uniform_real_distribution<double> uy(region.y_min, region.y_max);
    std::uniform_real_distribution<double> uz(region.z_min, region.z_max);
    std::vector<BoxState> out(n);
    for (auto& b : out) {
        b.cx = ux(rng);
        b.cy = uy(rng);
        b.cz = uz(rng);
        b.l = 4.0;
        b.w = 2.0;
        b.h = 1.5;
    }
    return out;
}

} // namespace mvtrack::cascade
