#pragma once

#include "mvtrack/errors.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <numbers>
#include <span>

namespace mvtrack::geometry {

/// Wrap an angle to (-pi, pi].
[[nodiscard]] inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    else if (a > std::numbers::pi) a -= two_pi;
    return a;
}

/// 3D bounding box with heading encoded as (cos, sin) and planar velocity.
///
/// Width is lateral, length is along the heading, height is vertical. The
/// serialized layout is [cx, cy, h, w, cz, l, cos, sin, vx, vy].
struct BoxState {
    double cx = 0.0, cy = 0.0, cz = 0.0;
    double w = 1.0, l = 1.0, h = 1.0;
    double cos_yaw = 1.0, sin_yaw = 0.0;
    double vx = 0.0, vy = 0.0;

    static constexpr std::size_t kSerializedSize = 10;

    [[nodiscard]] static BoxState from_yaw(double cx, double cy, double cz, double w, double l,
                                           double h, double yaw, double vx = 0.0, double vy = 0.0) {
        return {cx, cy, cz, w, l, h, std::cos(yaw), std::sin(yaw), vx, vy};
    }

    [[nodiscard]] double yaw() const { return std::atan2(sin_yaw, cos_yaw); }
    [[nodiscard]] Eigen::Vector3d center() const { return {cx, cy, cz}; }

    [[nodiscard]] std::array<double, kSerializedSize> serialize() const {
        return {cx, cy, h, w, cz, l, cos_yaw, sin_yaw, vx, vy};
    }

    [[nodiscard]] static BoxState deserialize(std::span<const double> v) {
        if (v.size() != kSerializedSize)
            throw InvalidInput("box must have 10 values, got " + std::to_string(v.size()));
        BoxState b;
        b.cx = v[0]; b.cy = v[1]; b.h = v[2]; b.w = v[3]; b.cz = v[4];
        b.l = v[5]; b.cos_yaw = v[6]; b.sin_yaw = v[7]; b.vx = v[8]; b.vy = v[9];
        return b;
    }

    [[nodiscard]] bool all_finite() const {
        for (double x : serialize())
            if (!std::isfinite(x)) return false;
        return true;
    }

    /// Throws InvalidInput when a field is non-finite or a dimension is not positive.
    void validate() const {
        if (!all_finite()) throw InvalidInput("box has a non-finite field");
        if (!(w > 0.0 && l > 0.0 && h > 0.0)) throw InvalidInput("box dimensions must be positive");
    }

    bool operator==(const BoxState&) const = default;
};

/// Eight box corners. Corner k uses the bits of k, (b2 b1 b0), to pick the
/// signs of (l/2, w/2, h/2) in the box frame: bit set means +, clear means -.
using Corners = std::array<Eigen::Vector3d, 8>;

[[nodiscard]] inline Corners decode_corners(const BoxState& box) {
    if (!box.all_finite()) throw InvalidInput("decode_corners: non-finite box field");
    const double norm = std::hypot(box.cos_yaw, box.sin_yaw);
    const double c = norm > 0.0 ? box.cos_yaw / norm : 1.0;
    const double s = norm > 0.0 ? box.sin_yaw / norm : 0.0;

    Corners out;
    for (int k = 0; k < 8; ++k) {
        const double dx = ((k >> 2) & 1 ? 0.5 : -0.5) * box.l;
        const double dy = ((k >> 1) & 1 ? 0.5 : -0.5) * box.w;
        const double dz = (k & 1 ? 0.5 : -0.5) * box.h;
        out[k] = {box.cx + c * dx - s * dy, box.cy + s * dx + c * dy, box.cz + dz};
    }
    return out;
}

} // namespace mvtrack::geometry
