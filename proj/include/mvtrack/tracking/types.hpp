#pragma once

#include "mvtrack/geometry/box.hpp"
#include "mvtrack/tracking/config.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

namespace mvtrack::tracking {

struct KinematicState {
    Vector6d mean = Vector6d::Zero();
    Matrix6d cov = Matrix6d::Identity();
};

/// One detection prepared for association.
struct Measurement {
    Vector6d z = Vector6d::Zero();
    Eigen::Vector3d dims{1.0, 1.0, 1.0};  // w, l, h
    int class_id = 0;
    double score = 1.0;
    std::optional<Eigen::VectorXd> roi_feature;
    std::optional<Eigen::VectorXd> query_feature;

    [[nodiscard]] static Measurement from_box(const geometry::BoxState& box, int class_id = 0, double score = 1.0) {
        Measurement m;
        m.z << box.cx, box.cy, box.cz, geometry::wrap_angle(box.yaw()), box.vx, box.vy;
        m.dims = {box.w, box.l, box.h};
        m.class_id = class_id;
        m.score = score;
        return m;
    }
};

/// A potential object: existence probability plus its kinematic density.
struct BernoulliComponent {
    double r = 0.0;
    KinematicState state;
    std::int64_t label = -1;
    Eigen::Vector3d dims{1.0, 1.0, 1.0};
    std::optional<Eigen::VectorXd> roi_memory;
    std::optional<Eigen::VectorXd> query_memory;
    int hits = 0;
    int misses = 0;
    int class_id = 0;
    double score = 0.0;

    [[nodiscard]] geometry::BoxState box() const {
        const auto& m = state.mean;
        return geometry::BoxState::from_yaw(m[kX], m[kY], m[kZ], dims[0], dims[1], dims[2], m[kYaw], m[kVx],
                                            m[kVy]);
    }
};

/// One reported object for one frame.
struct TrackOutput {
    std::int64_t label = -1;
    geometry::BoxState box;
    int class_id = 0;
    double score = 0.0;
};

} // namespace mvtrack::tracking
