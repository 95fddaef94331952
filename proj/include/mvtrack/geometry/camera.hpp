#pragma once

#include "mvtrack/errors.hpp"
#include "mvtrack/geometry/box.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace mvtrack::geometry {

/// Depth below which a point is treated as not projectable (meters).
inline constexpr double kMinDepth = 1e-6;

/// Pinhole camera: 3x3 intrinsics, 4x4 world-to-camera rigid transform and
/// image size in pixels. Camera frame is x right, y down, z forward.
struct CameraModel {
    std::string name;
    Eigen::Matrix3d intrinsic = Eigen::Matrix3d::Identity();
    Eigen::Matrix4d extrinsic = Eigen::Matrix4d::Identity();
    int width = 1;
    int height = 1;

    /// Composed 3x4 projection K [R | t].
    [[nodiscard]] Eigen::Matrix<double, 3, 4> projection() const {
        return intrinsic * extrinsic.topRows<3>();
    }

    /// Throws InvalidInput naming the camera when an invariant is broken.
    void validate() const {
        const std::string who = "camera '" + name + "': ";
        if (!intrinsic.allFinite() || !extrinsic.allFinite())
            throw InvalidInput(who + "non-finite calibration");
        if (width <= 0 || height <= 0) throw InvalidInput(who + "image size must be positive");
        if (!(intrinsic(0, 0) > 0.0 && intrinsic(1, 1) > 0.0))
            throw InvalidInput(who + "focal lengths must be positive");
        if ((intrinsic.row(2) - Eigen::RowVector3d(0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12)
            throw InvalidInput(who + "intrinsic last row must be (0, 0, 1)");
        if ((extrinsic.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12)
            throw InvalidInput(who + "extrinsic last row must be (0, 0, 0, 1)");
        const Eigen::Matrix3d r = extrinsic.topLeftCorner<3, 3>();
        if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6)
            throw InvalidInput(who + "rotation is not orthonormal");
        if (std::abs(r.determinant() - 1.0) > 1e-6)
            throw InvalidInput(who + "rotation determinant is not +1");
    }
};

/// Camera with heading `yaw` (radians, world z-up frame) mounted at `position`.
[[nodiscard]] inline CameraModel make_camera(std::string name, double yaw,
                                             const Eigen::Vector3d& position, double focal,
                                             int width, int height) {
    CameraModel cam;
    cam.name = std::move(name);
    cam.width = width;
    cam.height = height;
    cam.intrinsic << focal, 0, width / 2.0, 0, focal, height / 2.0, 0, 0, 1;

    Eigen::Matrix3d cam_to_world;
    cam_to_world.col(0) = Eigen::Vector3d(std::sin(yaw), -std::cos(yaw), 0.0);
    cam_to_world.col(1) = Eigen::Vector3d(0.0, 0.0, -1.0);
    cam_to_world.col(2) = Eigen::Vector3d(std::cos(yaw), std::sin(yaw), 0.0);
    const Eigen::Matrix3d r = cam_to_world.transpose();
    cam.extrinsic.setIdentity();
    cam.extrinsic.topLeftCorner<3, 3>() = r;
    cam.extrinsic.topRightCorner<3, 1>() = -r * position;
    return cam;
}

/// Six cameras spaced 60 degrees apart around a vehicle origin, 1600x900,
/// focal 1266 px (about 65 degrees horizontal field of view).
[[nodiscard]] inline std::vector<CameraModel> synthetic_rig() {
    static constexpr std::array<const char*, 6> names = {
        "CAM_FRONT", "CAM_FRONT_LEFT", "CAM_BACK_LEFT", "CAM_BACK", "CAM_BACK_RIGHT", "CAM_FRONT_RIGHT"};
    std::vector<CameraModel> rig;
    for (int i = 0; i < 6; ++i) {
        const double yaw = i * std::numbers::pi / 3.0;
        rig.push_back(make_camera(names[i], yaw, {0.0, 0.0, 1.5}, 1266.0, 1600, 900));
    }
    return rig;
}

struct ProjectedPoint {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
    bool projectable = false;
};

using ProjectedCorners = std::array<ProjectedPoint, 8>;

[[nodiscard]] inline ProjectedPoint project_point(const Eigen::Vector3d& p, const CameraModel& cam) {
    const Eigen::Vector3d hom = cam.projection() * p.homogeneous();
    ProjectedPoint out;
    // depth is the camera-frame z; K's last row is (0, 0, 1)
    out.depth = hom.z();
    out.projectable = out.depth > kMinDepth;
    if (out.projectable) {
        out.u = hom.x() / out.depth;
        out.v = hom.y() / out.depth;
    }
    return out;
}

[[nodiscard]] inline ProjectedCorners project_corners(const Corners& corners, const CameraModel& cam) {
    ProjectedCorners out;
    for (std::size_t k = 0; k < corners.size(); ++k) out[k] = project_point(corners[k], cam);
    return out;
}

enum class Visibility { Visible, PartiallyVisible, BehindCamera, OutOfFrame };

[[nodiscard]] inline const char* to_string(Visibility v) {
    switch (v) {
        case Visibility::Visible: return "visible";
        case Visibility::PartiallyVisible: return "partially_visible";
        case Visibility::BehindCamera: return "behind_camera";
        case Visibility::OutOfFrame: return "out_of_frame";
    }
    return "unknown";
}

[[nodiscard]] inline bool is_sampled(Visibility v) {
    return v == Visibility::Visible || v == Visibility::PartiallyVisible;
}

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    [[nodiscard]] bool empty() const { return !(x1 > x0 && y1 > y0); }
    [[nodiscard]] double width() const { return x1 - x0; }
    [[nodiscard]] double height() const { return y1 - y0; }
    bool operator==(const Rect&) const = default;
};

/// Image-plane RoI of one box in one camera. `box` is the unclipped extent of
/// the projected corners; `clipped` is its intersection with the image and is
/// empty unless the RoI is sampled.
struct ProjectedRoI {
    int camera_index = 0;
    Rect box;
    Visibility visibility = Visibility::BehindCamera;
    Rect clipped;
};

[[nodiscard]] inline ProjectedRoI roi_from_projection(const ProjectedCorners& projected,
                                                      const CameraModel& cam, int camera_index = 0) {
    ProjectedRoI roi;
    roi.camera_index = camera_index;

    const auto n_front = std::count_if(projected.begin(), projected.end(),
                                       [](const ProjectedPoint& p) { return p.projectable; });
    if (n_front == 0) {
        roi.visibility = Visibility::BehindCamera;
        return roi;
    }

    constexpr double inf = std::numeric_limits<double>::infinity();
    Rect b{inf, inf, -inf, -inf};
    for (const auto& p : projected) {
        if (!p.projectable) continue;
        b.x0 = std::min(b.x0, p.u);
        b.y0 = std::min(b.y0, p.v);
        b.x1 = std::max(b.x1, p.u);
        b.y1 = std::max(b.y1, p.v);
    }
    roi.box = b;

    // Straddling the camera plane: the extent of the front corners is not the
    // image of the box.
    if (n_front < static_cast<long>(projected.size())) {
        roi.visibility = Visibility::OutOfFrame;
        return roi;
    }

    const double w = cam.width, h = cam.height;
    const Rect clip{std::max(b.x0, 0.0), std::max(b.y0, 0.0), std::min(b.x1, w), std::min(b.y1, h)};
    if (b.x0 >= 0.0 && b.y0 >= 0.0 && b.x1 <= w && b.y1 <= h) {
        roi.visibility = Visibility::Visible;
        roi.clipped = b;
    } else if (clip.empty()) {
        roi.visibility = Visibility::OutOfFrame;
    } else {
        roi.visibility = Visibility::PartiallyVisible;
        roi.clipped = clip;
    }
    return roi;
}

} // namespace mvtrack::geometry
