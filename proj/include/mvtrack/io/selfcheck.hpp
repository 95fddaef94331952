#pragma once

#include "mvtrack/cascade.hpp"
#include "mvtrack/geometry/box.hpp"
#include "mvtrack/geometry/camera.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace mvtrack::io {

struct CheckResult {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct SelfcheckReport {
    std::vector<CheckResult> checks;

    [[nodiscard]] bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }

    [[nodiscard]] std::string to_text() const {
        std::ostringstream os;
        for (const auto& c : checks) {
            os << (c.passed ? "PASS " : "FAIL ") << c.name;
            if (!c.detail.empty()) os << ": " << c.detail;
            os << "\n";
        }
        os << (passed() ? "selfcheck passed" : "selfcheck FAILED") << "\n";
        return os.str();
    }
};

namespace oracle {

/// Corners written out directly from the box-frame convention.
[[nodiscard]] inline std::array<Eigen::Vector3d, 8> corners(const geometry::BoxState& b) {
    std::array<Eigen::Vector3d, 8> out;
    const double yaw = std::atan2(b.sin_yaw, b.cos_yaw);
    const double c = std::cos(yaw), s = std::sin(yaw);
    for (int k = 0; k < 8; ++k) {
        const double x = ((k >> 2) & 1 ? 0.5 : -0.5) * b.l;
        const double y = ((k >> 1) & 1 ? 0.5 : -0.5) * b.w;
        const double z = (k & 1 ? 0.5 : -0.5) * b.h;
        out[k] = {b.cx + c * x - s * y, b.cy + s * x + c * y, b.cz + z};
    }
    return out;
}

/// Min/max of the pixel coordinates of the eight corners, or nothing when a
/// corner is not in front of the camera.
[[nodiscard]] inline std::optional<geometry::Rect> projected_extent(const geometry::BoxState& b,
                                                                   const geometry::CameraModel& cam) {
    geometry::Rect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& p : corners(b)) {
        const Eigen::Vector4d h(p.x(), p.y(), p.z(), 1.0);
        const Eigen::Vector3d q = cam.intrinsic * (cam.extrinsic * h).head<3>();
        if (!(q.z() > geometry::kMinDepth)) return std::nullopt;
        const double u = q.x() / q.z(), v = q.y() / q.z();
        r.x0 = std::min(r.x0, u);
        r.y0 = std::min(r.y0, v);
        r.x1 = std::max(r.x1, u);
        r.y1 = std::max(r.y1, v);
    }
    return r;
}

} // namespace oracle

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

} // namespace detail

/// Random boxes around the rig: centres within 60 m, heading anywhere.
template <typename Rng>
[[nodiscard]] geometry::BoxState random_box(Rng& rng) {
    std::uniform_real_distribution<double> pos(-60.0, 60.0), height(-1.0, 3.0), dim(0.5, 6.0),
        yaw(-std::numbers::pi, std::numbers::pi), vel(-15.0, 15.0);
    const double x = pos(rng), y = pos(rng), z = height(rng);
    const double w = dim(rng), l = dim(rng), h = dim(rng);
    const double th = yaw(rng), vx = vel(rng), vy = vel(rng);
    return geometry::BoxState::from_yaw(x, y, z, w, l, h, th, vx, vy);
}

template <typename Rng>
[[nodiscard]] cascade::BoxDelta random_delta(Rng& rng) {
    std::uniform_real_distribution<double> off(-1.0, 1.0), logd(-2.0, 2.0), head(-1.0, 1.0), vel(-15.0, 15.0);
    cascade::BoxDelta d;
    d.d_x = off(rng);
    d.d_y = off(rng);
    d.d_z = off(rng);
    d.d_w = logd(rng);
    d.d_l = logd(rng);
    d.d_h = logd(rng);
    d.cos_yaw = head(rng);
    d.sin_yaw = head(rng);
    d.vx = vel(rng);
    d.vy = vel(rng);
    return d;
}

/// Geometry and cascade invariants on random inputs, compared against the
/// direct formulas above.
[[nodiscard]] inline SelfcheckReport run_geometry_selfcheck(const std::vector<geometry::CameraModel>& rig,
                                                            std::uint64_t seed, int trials = 1000) {
    using detail::fmt;
    SelfcheckReport report;
    auto add = [&report](std::string name, bool ok, std::string detail) {
        report.checks.push_back({std::move(name), ok, std::move(detail)});
    };

    {
        std::string bad;
        for (const auto& cam : rig) {
            try {
                cam.validate();
            } catch (const InvalidInput& e) {
                bad += (bad.empty() ? "" : "; ") + std::string(e.what());
            }
        }
        add("rig_valid", bad.empty() && !rig.empty(), rig.empty() ? "no cameras" : bad);
        if (!bad.empty() || rig.empty()) return report;
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, rig.size() - 1);

    {
        double worst_centroid = 0.0, worst_corner = 0.0, worst_yaw = 0.0;
        for (int i = 0; i < trials; ++i) {
            const auto box = random_box(rng);
            const auto got = geometry::decode_corners(box);
            const auto want = oracle::corners(box);
            Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
            for (int k = 0; k < 8; ++k) {
                centroid += got[k] / 8.0;
                worst_corner = std::max(worst_corner, (got[k] - want[k]).norm());
            }
            worst_centroid = std::max(worst_centroid, (centroid - box.center()).norm());
            auto turned = box;
            turned.cos_yaw = 1.0;
            turned.sin_yaw = 0.0;
            const auto ref = geometry::decode_corners(turned);
            for (int a = 0; a < 8; ++a)
                for (int b = a + 1; b < 8; ++b)
                    worst_yaw = std::max(worst_yaw,
                                         std::abs((got[a] - got[b]).norm() - (ref[a] - ref[b]).norm()));
        }
        add("corner_centroid", worst_centroid <= 1e-9, "max error " + fmt(worst_centroid));
        add("corner_oracle", worst_corner <= 1e-9, "max error " + fmt(worst_corner));
        add("corner_yaw_invariance", worst_yaw <= 1e-9, "max error " + fmt(worst_yaw));
    }

    {
        double worst = 0.0;
        int mismatched = 0;
        for (int i = 0; i < trials; ++i) {
            const auto box = random_box(rng);
            const std::size_t c = pick(rng);
            const auto roi = geometry::roi_from_projection(
                geometry::project_corners(geometry::decode_corners(box), rig[c]), rig[c], static_cast<int>(c));
            const auto extent = oracle::projected_extent(box, rig[c]);
            if (!extent) {
                if (geometry::is_sampled(roi.visibility)) ++mismatched;
                continue;
            }
            if (roi.visibility == geometry::Visibility::BehindCamera) {
                ++mismatched;
                continue;
            }
            worst = std::max({worst, std::abs(roi.box.x0 - extent->x0), std::abs(roi.box.y0 - extent->y0),
                              std::abs(roi.box.x1 - extent->x1), std::abs(roi.box.y1 - extent->y1)});
        }
        add("roi_oracle", worst <= 1e-6 && mismatched == 0,
            "max error " + fmt(worst) + " px, " + std::to_string(mismatched) + " visibility mismatches");
    }

    {
        int identity_failures = 0, invariant_failures = 0;
        double worst_round_trip = 0.0;
        const cascade::DetectionRegion region;
        for (int i = 0; i < trials; ++i) {
            const auto box = random_box(rng);
            if (!(cascade::apply_adjustment(box, cascade::BoxDelta::identity_for(box)) == box)) ++identity_failures;
            const auto out = cascade::apply_adjustment(box, random_delta(rng));
            const double norm = std::hypot(out.cos_yaw, out.sin_yaw);
            if (!(out.w > 0 && out.l > 0 && out.h > 0) || std::abs(norm - 1.0) > 1e-9) ++invariant_failures;
            const auto back = cascade::denormalize_box(cascade::normalize_box(box, region), region);
            worst_round_trip = std::max({worst_round_trip, std::abs(back.cx - box.cx), std::abs(back.cy - box.cy),
                                         std::abs(back.cz - box.cz)});
        }
        add("cascade_identity", identity_failures == 0, std::to_string(identity_failures) + " failures");
        add("cascade_invariants", invariant_failures == 0, std::to_string(invariant_failures) + " failures");
        add("normalize_round_trip", worst_round_trip <= 1e-9, "max error " + fmt(worst_round_trip));
    }
    return report;
}

} // namespace mvtrack::io
