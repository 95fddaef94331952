#pragma once

#include "mvtrack/assignment/hungarian.hpp"
#include "mvtrack/cascade.hpp"
#include "mvtrack/geometry/box.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace mvtrack::assignment {

using geometry::BoxState;

struct LossWeights {
    double w_cls = 2.0;
    double w_reg = 0.25;
    double focal_alpha = 0.25;
    double focal_gamma = 2.0;

    void validate() const {
        if (!(w_cls >= 0 && w_reg >= 0 && focal_alpha >= 0 && focal_gamma >= 0))
            throw InvalidInput("loss weights must be non-negative");
    }
};

inline constexpr double kProbClamp = 1e-7;

/// Sigmoid focal loss of one probability against a binary target.
[[nodiscard]] inline double focal_loss(double p, bool is_positive, double alpha = 0.25, double gamma = 2.0) {
    p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    const double p_t = is_positive ? p : 1.0 - p;
    const double alpha_t = is_positive ? alpha : 1.0 - alpha;
    return -alpha_t * std::pow(1.0 - p_t, gamma) * std::log(p_t);
}

/// Sum of absolute differences over the serialized 10-vector, with centres
/// normalized to the detection region first.
[[nodiscard]] inline double l1_box_cost(const BoxState& pred, const BoxState& gt,
                                        const cascade::DetectionRegion& region = {}) {
    const auto a = cascade::normalize_box(pred, region).serialize();
    const auto b = cascade::normalize_box(gt, region).serialize();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return sum;
}

/// A prediction with one independent (sigmoid) probability per class.
struct Prediction {
    BoxState box;
    std::vector<double> class_scores;
};

struct GroundTruth {
    BoxState box;
    int class_id = 0;
};

/// cell(i, j) = w_cls * focal(p_i[class_j], positive) + w_reg * l1(pred_i, gt_j).
[[nodiscard]] inline CostMatrix build_cost_matrix(std::span<const Prediction> preds,
                                                  std::span<const GroundTruth> gts,
                                                  const LossWeights& weights = {},
                                                  const cascade::DetectionRegion& region = {}) {
    if (preds.empty()) throw InvalidInput("build_cost_matrix: no predictions");
    weights.validate();
    CostMatrix costs(static_cast<Eigen::Index>(preds.size()), static_cast<Eigen::Index>(gts.size()));
    for (std::size_t i = 0; i < preds.size(); ++i) {
        for (std::size_t j = 0; j < gts.size(); ++j) {
            const int cls = gts[j].class_id;
            if (cls < 0 || cls >= static_cast<int>(preds[i].class_scores.size()))
                throw InvalidInput("ground-truth class id has no matching prediction score");
            const double cls_cost =
                focal_loss(preds[i].class_scores[cls], true, weights.focal_alpha, weights.focal_gamma);
            costs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                weights.w_cls * cls_cost + weights.w_reg * l1_box_cost(preds[i].box, gts[j].box, region);
        }
    }
    return costs;
}

struct SetLoss {
    double total = 0.0;
    double classification = 0.0;
    double regression = 0.0;
    Assignment matching;
};

/// Matches predictions to ground truth with the Hungarian solver, then sums
/// focal loss over every class score of every prediction (positive only for a
/// matched prediction's ground-truth class) and L1 over matched pairs.
[[nodiscard]] inline SetLoss set_prediction_loss(std::span<const Prediction> preds,
                                                 std::span<const GroundTruth> gts,
                                                 const LossWeights& weights = {},
                                                 const cascade::DetectionRegion& region = {}) {
    SetLoss out;
    out.matching = hungarian(build_cost_matrix(preds, gts, weights, region));
    const auto col_of = out.matching.row_to_col(static_cast<int>(preds.size()));

    for (std::size_t i = 0; i < preds.size(); ++i) {
        const int gt = col_of[i];
        const int positive_class = gt >= 0 ? gts[gt].class_id : -1;
        for (int c = 0; c < static_cast<int>(preds[i].class_scores.size()); ++c)
            out.classification += focal_loss(preds[i].class_scores[c], c == positive_class,
                                             weights.focal_alpha, weights.focal_gamma);
        if (gt >= 0) out.regression += l1_box_cost(preds[i].box, gts[gt].box, region);
    }
    out.total = weights.w_cls * out.classification + weights.w_reg * out.regression;
    return out;
}

} // namespace mvtrack::assignment
