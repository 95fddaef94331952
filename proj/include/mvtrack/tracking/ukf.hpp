#pragma once

#include "mvtrack/errors.hpp"
#include "mvtrack/geometry/box.hpp"
#include "mvtrack/tracking/config.hpp"
#include "mvtrack/tracking/types.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <numbers>

namespace mvtrack::tracking {

inline constexpr int kSigmaCount = 2 * kStateDim + 1;
using SigmaPoints = Eigen::Matrix<double, kStateDim, kSigmaCount>;

struct SigmaWeights {
    Eigen::Matrix<double, kSigmaCount, 1> mean;
    Eigen::Matrix<double, kSigmaCount, 1> cov;
    double scale = 0.0;  // n + lambda

    [[nodiscard]] static SigmaWeights from(const UnscentedParams& p) {
        const double n = kStateDim;
        const double lambda = p.spread * p.spread * (n + p.kappa) - n;
        SigmaWeights w;
        w.scale = n + lambda;
        w.mean.setConstant(0.5 / w.scale);
        w.cov.setConstant(0.5 / w.scale);
        w.mean[0] = lambda / w.scale;
        w.cov[0] = w.mean[0] + (1.0 - p.spread * p.spread + p.prior);
        return w;
    }
};

/// Symmetrizes and, when the Cholesky factorization fails, clamps small
/// negative eigenvalues. Throws NumericalError for a clearly indefinite matrix.
inline Matrix6d repair_covariance(const Matrix6d& cov) {
    Matrix6d sym = 0.5 * (cov + cov.transpose());
    if (!sym.allFinite()) throw NumericalError("covariance has non-finite entries");
    Eigen::LLT<Matrix6d> llt(sym);
    if (llt.info() == Eigen::Success) return sym;

    Eigen::SelfAdjointEigenSolver<Matrix6d> eig(sym);
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() < -1e-9 * scale) throw NumericalError("covariance is not positive semi-definite");
    Vector6d ev = eig.eigenvalues().cwiseMax(1e-12 * scale);
    sym = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (sym + sym.transpose());
}

/// Difference a - b with the yaw component wrapped to (-pi, pi].
[[nodiscard]] inline Vector6d state_diff(const Vector6d& a, const Vector6d& b) {
    Vector6d d = a - b;
    d[kYaw] = geometry::wrap_angle(d[kYaw]);
    return d;
}

[[nodiscard]] inline SigmaPoints make_sigma_points(const KinematicState& s, const SigmaWeights& w) {
    const Matrix6d cov = repair_covariance(s.cov);
    Eigen::LLT<Matrix6d> llt(w.scale * cov);
    if (llt.info() != Eigen::Success) throw NumericalError("sigma point factorization failed");
    const Matrix6d root = llt.matrixL();
    SigmaPoints x;
    x.col(0) = s.mean;
    for (int i = 0; i < kStateDim; ++i) {
        x.col(1 + i) = s.mean + root.col(i);
        x.col(1 + kStateDim + i) = s.mean - root.col(i);
    }
    return x;
}

/// Weighted mean and covariance of sigma points. Deviations are taken from
/// the central point so the large negative central weight does not cancel
/// absolute coordinates.
[[nodiscard]] inline KinematicState recombine(const SigmaPoints& x, const SigmaWeights& w) {
    KinematicState out;
    Vector6d offset = Vector6d::Zero();
    for (int i = 1; i < kSigmaCount; ++i) offset += w.mean[i] * state_diff(x.col(i), x.col(0));
    out.mean = x.col(0) + offset;
    out.mean[kYaw] = geometry::wrap_angle(out.mean[kYaw]);
    out.cov.setZero();
    for (int i = 0; i < kSigmaCount; ++i) {
        const Vector6d d = state_diff(x.col(i), out.mean);
        out.cov += w.cov[i] * d * d.transpose();
    }
    return out;
}

/// Planar constant velocity; z, yaw and velocity are random walks.
[[nodiscard]] inline Vector6d motion_model(const Vector6d& x, double dt) {
    Vector6d out = x;
    out[kX] += x[kVx] * dt;
    out[kY] += x[kVy] * dt;
    return out;
}

[[nodiscard]] inline KinematicState ukf_predict_state(const KinematicState& s, double dt, const TrackerConfig& cfg) {
    if (!(dt > 0.0)) throw InvalidInput("ukf_predict: dt must be positive");
    const auto w = SigmaWeights::from(cfg.unscented);
    SigmaPoints x = make_sigma_points(s, w);
    for (int i = 0; i < kSigmaCount; ++i) x.col(i) = motion_model(x.col(i), dt);
    KinematicState out = recombine(x, w);
    out.cov += (cfg.process_noise * dt).asDiagonal();
    out.cov = repair_covariance(out.cov);
    return out;
}

/// Predicted measurement statistics of a state; the measurement model
/// observes every state component.
struct MeasurementPrediction {
    Vector6d z_pred = Vector6d::Zero();
    Matrix6d S = Matrix6d::Identity();
    Matrix6d cross = Matrix6d::Zero();
    Eigen::LLT<Matrix6d> S_llt;
    double log_det_S = 0.0;
};

[[nodiscard]] inline MeasurementPrediction predict_measurement(const KinematicState& s, const TrackerConfig& cfg) {
    const auto w = SigmaWeights::from(cfg.unscented);
    const SigmaPoints x = make_sigma_points(s, w);
    const SigmaPoints& z = x;  // identity measurement function

    MeasurementPrediction out;
    const KinematicState zs = recombine(z, w);
    out.z_pred = zs.mean;
    out.S = zs.cov;
    out.S.diagonal() += cfg.measurement_noise;
    out.S = 0.5 * (out.S + out.S.transpose());
    out.cross.setZero();
    for (int i = 0; i < kSigmaCount; ++i)
        out.cross += w.cov[i] * state_diff(x.col(i), s.mean) * state_diff(z.col(i), out.z_pred).transpose();

    out.S_llt.compute(out.S);
    if (out.S_llt.info() != Eigen::Success) throw NumericalError("innovation covariance is singular");
    const Matrix6d L = out.S_llt.matrixL();
    out.log_det_S = 2.0 * L.diagonal().array().log().sum();
    return out;
}

[[nodiscard]] inline Vector6d innovation(const MeasurementPrediction& mp, const Vector6d& z) {
    return state_diff(z, mp.z_pred);
}

/// Gaussian log-density of an innovation under N(0, S).
[[nodiscard]] inline double innovation_log_likelihood(const MeasurementPrediction& mp, const Vector6d& nu) {
    const double d2 = nu.dot(mp.S_llt.solve(nu));
    return -0.5 * (d2 + mp.log_det_S + kStateDim * std::log(2.0 * std::numbers::pi));
}

struct StateUpdate {
    KinematicState state;
    double log_likelihood = 0.0;
};

[[nodiscard]] inline StateUpdate ukf_update_state(const KinematicState& s, const MeasurementPrediction& mp,
                                                  const Vector6d& z) {
    const Vector6d nu = innovation(mp, z);
    const Matrix6d gain = mp.S_llt.solve(mp.cross.transpose()).transpose();
    StateUpdate out;
    out.state.mean = s.mean + gain * nu;
    out.state.mean[kYaw] = geometry::wrap_angle(out.state.mean[kYaw]);
    out.state.cov = repair_covariance(s.cov - gain * mp.S * gain.transpose());
    out.log_likelihood = innovation_log_likelihood(mp, nu);
    return out;
}

namespace detail {

inline void blend_memory(std::optional<Eigen::VectorXd>& memory, const std::optional<Eigen::VectorXd>& obs,
                         double decay) {
    if (!obs) return;
    const double n = obs->norm();
    if (!(n > 0.0) || !std::isfinite(n)) return;
    const Eigen::VectorXd unit = *obs / n;
    if (!memory || memory->size() != unit.size()) {
        memory = unit;
        return;
    }
    Eigen::VectorXd blended = decay * *memory + (1.0 - decay) * unit;
    const double bn = blended.norm();
    memory = bn > 0.0 ? Eigen::VectorXd(blended / bn) : unit;
}

} // namespace detail

/// Existence scaled by the survival probability, state propagated by dt.
[[nodiscard]] inline BernoulliComponent ukf_predict(const BernoulliComponent& comp, double dt, const TrackerConfig& cfg) {
    BernoulliComponent out = comp;
    out.r = cfg.p_survive * comp.r;
    out.state = ukf_predict_state(comp.state, dt, cfg);
    return out;
}

/// Kinematic, dimension and feature-memory update of a component with a
/// measurement. Existence is left to the caller. Returns the Gaussian
/// innovation log-likelihood.
[[nodiscard]] inline std::pair<BernoulliComponent, double> ukf_update(const BernoulliComponent& comp,
                                                                      const Measurement& meas,
                                                                      const TrackerConfig& cfg,
                                                                      const MeasurementPrediction& mp) {
    BernoulliComponent out = comp;
    auto upd = ukf_update_state(comp.state, mp, meas.z);
    out.state = std::move(upd.state);
    out.dims = cfg.dims_smoothing * comp.dims + (1.0 - cfg.dims_smoothing) * meas.dims;
    detail::blend_memory(out.roi_memory, meas.roi_feature, cfg.feature_decay);
    detail::blend_memory(out.query_memory, meas.query_feature, cfg.feature_decay);
    out.hits += 1;
    out.misses = 0;
    out.class_id = meas.class_id;
    out.score = meas.score;
    return {std::move(out), upd.log_likelihood};
}

[[nodiscard]] inline std::pair<BernoulliComponent, double> ukf_update(const BernoulliComponent& comp,
                                                                      const Measurement& meas,
                                                                      const TrackerConfig& cfg) {
    return ukf_update(comp, meas, cfg, predict_measurement(comp.state, cfg));
}

} // namespace mvtrack::tracking
