#pragma once

#include "mvtrack/errors.hpp"
#include "mvtrack/tracking/config.hpp"
#include "mvtrack/tracking/types.hpp"
#include "mvtrack/tracking/ukf.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <optional>

namespace mvtrack::tracking {

/// sqrt(nu^T S^-1 nu) for a symmetric positive definite S.
[[nodiscard]] inline double mahalanobis(const Eigen::VectorXd& nu, const Eigen::MatrixXd& S) {
    if (S.rows() != S.cols() || S.rows() != nu.size()) throw InvalidInput("mahalanobis: dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) throw NumericalError("mahalanobis: covariance is not positive definite");
    const double d2 = nu.dot(llt.solve(nu));
    return std::sqrt(std::max(d2, 0.0));
}

[[nodiscard]] inline double mahalanobis(const MeasurementPrediction& mp, const Vector6d& z) {
    const Vector6d nu = innovation(mp, z);
    return std::sqrt(std::max(nu.dot(mp.S_llt.solve(nu)), 0.0));
}

/// Cosine similarity, or nullopt when either vector is zero (or sizes differ).
[[nodiscard]] inline std::optional<double> try_cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size() || a.size() == 0) return std::nullopt;
    const double na = a.norm(), nb = b.norm();
    if (!(na > 0.0) || !(nb > 0.0)) return std::nullopt;
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

[[nodiscard]] inline double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw InvalidInput("cosine_similarity: dimension mismatch");
    auto s = try_cosine_similarity(a, b);
    if (!s) throw InvalidInput("cosine_similarity: undefined for a zero vector");
    return *s;
}

/// l = l_box + roi_weight * l_roi + query_weight * l_query; absent terms add nothing.
[[nodiscard]] inline double hybrid_likelihood(double l_box, std::optional<double> l_roi,
                                              std::optional<double> l_query, const TrackerConfig& cfg) {
    double l = l_box;
    if (l_roi && cfg.use_roi_feature && cfg.roi_weight != 0.0) l += cfg.roi_weight * *l_roi;
    if (l_query && cfg.use_query_feature && cfg.query_weight != 0.0) l += cfg.query_weight * *l_query;
    return l;
}

/// Appearance terms of a measurement against a component's feature memory.
[[nodiscard]] inline std::pair<std::optional<double>, std::optional<double>> feature_similarities(
    const BernoulliComponent& comp, const Measurement& meas) {
    std::optional<double> roi, query;
    if (comp.roi_memory && meas.roi_feature) roi = try_cosine_similarity(*comp.roi_memory, *meas.roi_feature);
    if (comp.query_memory && meas.query_feature)
        query = try_cosine_similarity(*comp.query_memory, *meas.query_feature);
    return {roi, query};
}

/// Closed gate: feasible iff Mahalanobis distance <= sqrt(chi-square quantile).
[[nodiscard]] inline bool gate(double distance, const TrackerConfig& cfg) {
    return distance <= std::sqrt(cfg.gate_chi2());
}

[[nodiscard]] inline bool gate(const BernoulliComponent& comp, const Measurement& meas, const TrackerConfig& cfg) {
    return gate(mahalanobis(predict_measurement(comp.state, cfg), meas.z), cfg);
}

} // namespace mvtrack::tracking
