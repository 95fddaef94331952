#pragma once

#include "mvtrack/errors.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

namespace mvtrack::tracking {

inline constexpr int kStateDim = 6;
using Vector6d = Eigen::Matrix<double, kStateDim, 1>;
using Matrix6d = Eigen::Matrix<double, kStateDim, kStateDim>;

/// State and measurement layout: [cx, cy, cz, yaw, vx, vy].
enum StateIndex : int { kX = 0, kY = 1, kZ = 2, kYaw = 3, kVx = 4, kVy = 5 };

enum class AssociationMode { Deterministic, Probabilistic, ProbabilisticRoi, ProbabilisticHybrid };

[[nodiscard]] inline AssociationMode parse_mode(const std::string& s) {
    if (s == "de") return AssociationMode::Deterministic;
    if (s == "pr") return AssociationMode::Probabilistic;
    if (s == "pr+r") return AssociationMode::ProbabilisticRoi;
    if (s == "pr+h") return AssociationMode::ProbabilisticHybrid;
    throw InvalidInput("unknown mode '" + s + "' (expected de, pr, pr+r or pr+h)");
}

[[nodiscard]] inline const char* to_string(AssociationMode m) {
    switch (m) {
        case AssociationMode::Deterministic: return "de";
        case AssociationMode::Probabilistic: return "pr";
        case AssociationMode::ProbabilisticRoi: return "pr+r";
        case AssociationMode::ProbabilisticHybrid: return "pr+h";
    }
    return "?";
}

/// Sigma-point placement of the unscented transform.
struct UnscentedParams {
    double spread = 1e-3;
    double prior = 2.0;
    double kappa = 0.0;
};

inline constexpr std::size_t kUnlimitedHypotheses = std::numeric_limits<std::size_t>::max();

struct TrackerConfig {
    // hybrid likelihood: l = l_box + roi_weight * l_roi + query_weight * l_query
    double roi_weight = 0.5;
    double query_weight = 0.5;
    bool use_roi_feature = true;
    bool use_query_feature = true;

    double p_detect = 0.9;
    double p_survive = 0.99;
    double clutter_density = 1e-4;
    /// Gate keeps measurements whose squared Mahalanobis distance is within
    /// this chi-square quantile (6 degrees of freedom).
    double gate_probability = 0.95;

    std::size_t max_hypotheses = 50;
    double hypothesis_prune = 1e-3;
    double bernoulli_prune = 1e-2;
    double extract_threshold = 0.5;

    /// Variances per second, added as diag(process_noise) * dt.
    Vector6d process_noise = (Vector6d() << 0.05, 0.05, 0.01, 0.02, 1.0, 1.0).finished();
    Vector6d measurement_noise = (Vector6d() << 0.09, 0.09, 0.04, 0.01, 0.25, 0.25).finished();
    Vector6d birth_noise = (Vector6d() << 0.25, 0.25, 0.09, 0.04, 1.0, 1.0).finished();
    UnscentedParams unscented;

    double feature_decay = 0.9;
    /// Weight of the previous dimensions in the exponential average.
    double dims_smoothing = 0.7;
    double birth_r_min = 0.05;
    double birth_r_max = 0.95;

    // deterministic baseline
    int de_max_age = 2;
    int de_min_hits = 1;

    void apply_mode(AssociationMode mode) {
        switch (mode) {
            case AssociationMode::Deterministic:
            case AssociationMode::Probabilistic:
                use_roi_feature = use_query_feature = false;
                break;
            case AssociationMode::ProbabilisticRoi:
                use_roi_feature = true;
                use_query_feature = false;
                break;
            case AssociationMode::ProbabilisticHybrid:
                use_roi_feature = use_query_feature = true;
                break;
        }
    }

    [[nodiscard]] double gate_chi2() const {
        return boost::math::quantile(boost::math::chi_squared(kStateDim), gate_probability);
    }

    void validate() const {
        auto prob = [](double p, const char* name) {
            if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput(std::string(name) + " must be in [0, 1]");
        };
        prob(p_detect, "p_detect");
        prob(p_survive, "p_survive");
        prob(hypothesis_prune, "hypothesis_prune");
        prob(bernoulli_prune, "bernoulli_prune");
        prob(extract_threshold, "extract_threshold");
        prob(feature_decay, "feature_decay");
        prob(dims_smoothing, "dims_smoothing");
        prob(birth_r_min, "birth_r_min");
        prob(birth_r_max, "birth_r_max");
        if (!(gate_probability > 0.0 && gate_probability < 1.0))
            throw InvalidInput("gate_probability must be in (0, 1)");
        if (birth_r_min > birth_r_max) throw InvalidInput("birth_r_min exceeds birth_r_max");
        if (max_hypotheses < 1) throw InvalidInput("max_hypotheses must be >= 1");
        if (!(clutter_density > 0.0) || !std::isfinite(clutter_density))
            throw InvalidInput("clutter_density must be positive");
        if (!(roi_weight >= 0.0 && query_weight >= 0.0)) throw InvalidInput("feature weights must be >= 0");
        if ((process_noise.array() < 0.0).any()) throw InvalidInput("process_noise must be >= 0");
        if (!(measurement_noise.array() > 0.0).all()) throw InvalidInput("measurement_noise must be > 0");
        if (!(birth_noise.array() > 0.0).all()) throw InvalidInput("birth_noise must be > 0");
        if (!(unscented.spread > 0.0)) throw InvalidInput("ukf spread must be > 0");
        if (de_max_age < 0 || de_min_hits < 0) throw InvalidInput("de_max_age and de_min_hits must be >= 0");
    }
};

} // namespace mvtrack::tracking
