#pragma once

#include "mvtrack/errors.hpp"
#include "mvtrack/geometry/box.hpp"
#include "mvtrack/geometry/camera.hpp"
#include "mvtrack/geometry/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace mvtrack::geometry {

struct RoiAlignParams {
    int out_h = 7;
    int out_w = 7;
    int sampling_ratio = 2;
    /// Feature-map units per image pixel along x and y.
    double scale_x = 1.0;
    double scale_y = 1.0;
};

namespace detail {

/// Bilinear read at a continuous feature-map point. Cell (y, x) is centred on
/// (x + 0.5, y + 0.5); points outside [0, W] x [0, H] read as zero.
inline void bilinear_accumulate(const FeatureMap& fm, double x, double y, std::span<double> acc) {
    if (x < 0.0 || y < 0.0 || x > fm.width || y > fm.height) return;
    const double xi = std::clamp(x - 0.5, 0.0, static_cast<double>(fm.width - 1));
    const double yi = std::clamp(y - 0.5, 0.0, static_cast<double>(fm.height - 1));
    const int x_lo = static_cast<int>(xi);
    const int y_lo = static_cast<int>(yi);
    const int x_hi = std::min(x_lo + 1, fm.width - 1);
    const int y_hi = std::min(y_lo + 1, fm.height - 1);
    const double lx = xi - x_lo, ly = yi - y_lo;
    const double w00 = (1 - ly) * (1 - lx), w01 = (1 - ly) * lx;
    const double w10 = ly * (1 - lx), w11 = ly * lx;
    for (int c = 0; c < fm.channels; ++c) {
        acc[c] += w00 * fm.at(y_lo, x_lo, c) + w01 * fm.at(y_lo, x_hi, c) +
                  w10 * fm.at(y_hi, x_lo, c) + w11 * fm.at(y_hi, x_hi, c);
    }
}

} // namespace detail

/// RoI Align over the clipped RoI. Each of the out_h x out_w bins averages
/// sampling_ratio^2 bilinear samples placed at regular sub-bin centres.
/// RoIs that are behind the camera or out of frame pool to all zeros.
[[nodiscard]] inline PooledGrid roi_align(const FeatureMap& fm, const ProjectedRoI& roi,
                                          const RoiAlignParams& params = {}) {
    if (params.out_h < 1 || params.out_w < 1 || params.sampling_ratio < 1)
        throw InvalidInput("roi_align: output size and sampling ratio must be >= 1");
    PooledGrid out(params.out_h, params.out_w, fm.channels);
    if (!is_sampled(roi.visibility) || roi.clipped.empty()) return out;

    const double x0 = roi.clipped.x0 * params.scale_x;
    const double y0 = roi.clipped.y0 * params.scale_y;
    const double bin_w = roi.clipped.width() * params.scale_x / params.out_w;
    const double bin_h = roi.clipped.height() * params.scale_y / params.out_h;
    const int sr = params.sampling_ratio;
    const double inv_count = 1.0 / (sr * sr);

    std::vector<double> acc(fm.channels);
    for (int by = 0; by < params.out_h; ++by) {
        for (int bx = 0; bx < params.out_w; ++bx) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int iy = 0; iy < sr; ++iy) {
                const double y = y0 + bin_h * (by + (iy + 0.5) / sr);
                for (int ix = 0; ix < sr; ++ix) {
                    const double x = x0 + bin_w * (bx + (ix + 0.5) / sr);
                    detail::bilinear_accumulate(fm, x, y, acc);
                }
            }
            for (int c = 0; c < fm.channels; ++c)
                out.data[out.index(by, bx, c)] = static_cast<float>(acc[c] * inv_count);
        }
    }
    return out;
}

struct ViewFeatures {
    int camera_index = 0;
    Visibility visibility = Visibility::BehindCamera;
    PooledGrid grid;
};

/// Element-wise mean over the sampled views; all zeros when none is sampled.
/// The output shape does not depend on how many views contribute.
[[nodiscard]] inline PooledGrid aggregate_views(std::span<const ViewFeatures> views) {
    if (views.empty()) throw InvalidInput("aggregate_views: no views given");
    const PooledGrid& ref = views.front().grid;
    for (const auto& v : views)
        if (!v.grid.same_shape(ref)) throw InvalidInput("aggregate_views: pooled grid shapes differ");

    PooledGrid out(ref.out_h, ref.out_w, ref.channels);
    std::vector<double> sum(out.data.size(), 0.0);
    int n = 0;
    for (const auto& v : views) {
        if (!is_sampled(v.visibility)) continue;
        ++n;
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v.grid.data[i];
    }
    if (n == 0) return out;
    for (std::size_t i = 0; i < sum.size(); ++i) out.data[i] = static_cast<float>(sum[i] / n);
    return out;
}

struct BoxFeatures {
    PooledGrid fused;
    std::vector<ProjectedRoI> rois;
};

/// Box -> corners -> per-camera RoI -> RoI Align -> cross-view mean. One
/// feature map per camera; the map-to-image scale is derived per camera.
[[nodiscard]] inline BoxFeatures sample_box_features(const BoxState& box,
                                                     std::span<const CameraModel> rig,
                                                     std::span<const FeatureMap> maps,
                                                     RoiAlignParams params = {}) {
    if (rig.empty()) throw InvalidInput("sample_box_features: empty camera rig");
    if (rig.size() != maps.size())
        throw InvalidInput("sample_box_features: need exactly one feature map per camera");
    box.validate();

    const Corners corners = decode_corners(box);
    BoxFeatures out;
    std::vector<ViewFeatures> views;
    for (std::size_t m = 0; m < rig.size(); ++m) {
        const auto& cam = rig[m];
        auto roi = roi_from_projection(project_corners(corners, cam), cam, static_cast<int>(m));
        params.scale_x = static_cast<double>(maps[m].width) / cam.width;
        params.scale_y = static_cast<double>(maps[m].height) / cam.height;
        views.push_back({static_cast<int>(m), roi.visibility, roi_align(maps[m], roi, params)});
        out.rois.push_back(roi);
    }
    out.fused = aggregate_views(views);
    return out;
}

} // namespace mvtrack::geometry
