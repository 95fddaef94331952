#pragma once

#include "mvtrack/errors.hpp"
#include "mvtrack/geometry/box.hpp"
#include "mvtrack/io/records.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace mvtrack::io {

/// Synthetic multi-object scenario. Objects live for the whole sequence and
/// move either at constant velocity or along a constant-rate turn.
struct ScenarioSpec {
    std::string sequence_id = "synthetic";
    std::string class_name = "car";
    int num_objects = 8;
    double turning_fraction = 0.25;
    double frame_rate = 2.0;
    double duration = 30.0;
    /// Objects start uniformly in [-area, area]^2.
    double area = 40.0;
    double speed_min = 2.0;
    double speed_max = 10.0;
    double turn_rate_min = 0.05;
    double turn_rate_max = 0.2;

    double position_sigma = 0.2;
    double yaw_sigma = 0.05;
    double velocity_sigma = 0.3;
    double dropout = 0.0;
    /// Mean number of clutter detections per frame (Poisson).
    double clutter_rate = 0.0;
    int embedding_dim = 64;
    double embedding_noise = 0.2;

    double score_min = 0.5;
    double score_max = 1.0;
    double clutter_score_min = 0.05;
    double clutter_score_max = 0.6;

    [[nodiscard]] int frame_count() const { return static_cast<int>(std::lround(duration * frame_rate)); }

    void validate() const {
        auto prob = [](double p, const char* name) {
            if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput(std::string("scenario: ") + name + " must be in [0, 1]");
        };
        auto nonneg = [](double s, const char* name) {
            if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidInput(std::string("scenario: ") + name + " must be >= 0");
        };
        prob(turning_fraction, "turning_fraction");
        prob(dropout, "dropout");
        prob(score_min, "score_min");
        prob(score_max, "score_max");
        prob(clutter_score_min, "clutter_score_min");
        prob(clutter_score_max, "clutter_score_max");
        nonneg(position_sigma, "position_sigma");
        nonneg(yaw_sigma, "yaw_sigma");
        nonneg(velocity_sigma, "velocity_sigma");
        nonneg(clutter_rate, "clutter_rate");
        nonneg(embedding_noise, "embedding_noise");
        nonneg(speed_min, "speed_min");
        nonneg(turn_rate_min, "turn_rate_min");
        if (num_objects < 0) throw InvalidInput("scenario: num_objects must be >= 0");
        if (embedding_dim < 0) throw InvalidInput("scenario: embedding_dim must be >= 0");
        if (!(frame_rate > 0.0)) throw InvalidInput("scenario: frame_rate must be > 0");
        if (!(duration > 0.0)) throw InvalidInput("scenario: duration must be > 0");
        if (!(area > 0.0)) throw InvalidInput("scenario: area must be > 0");
        if (speed_min > speed_max || turn_rate_min > turn_rate_max || score_min > score_max ||
            clutter_score_min > clutter_score_max)
            throw InvalidInput("scenario: a range has min > max");
        if (turn_rate_min <= 0.0 && turning_fraction > 0.0)
            throw InvalidInput("scenario: turn_rate_min must be > 0 when objects turn");
    }
};

[[nodiscard]] inline ScenarioSpec parse_scenario_spec(const Json& j) {
    if (!j.is_object()) throw InvalidInput("scenario spec: expected a JSON object");
    ScenarioSpec s;
    for (const auto& [key, value] : j.items()) {
        auto num = [&](double& out) {
            if (!value.is_number()) throw InvalidInput("scenario spec: " + key + ": expected a number");
            out = value.get<double>();
        };
        auto integer = [&](int& out) {
            if (!value.is_number_integer()) throw InvalidInput("scenario spec: " + key + ": expected an integer");
            out = value.get<int>();
        };
        auto text = [&](std::string& out) {
            if (!value.is_string()) throw InvalidInput("scenario spec: " + key + ": expected a string");
            out = value.get<std::string>();
        };
        if (key == "sequence_id") text(s.sequence_id);
        else if (key == "class_name") text(s.class_name);
        else if (key == "num_objects") integer(s.num_objects);
        else if (key == "turning_fraction") num(s.turning_fraction);
        else if (key == "frame_rate") num(s.frame_rate);
        else if (key == "duration") num(s.duration);
        else if (key == "area") num(s.area);
        else if (key == "speed_min") num(s.speed_min);
        else if (key == "speed_max") num(s.speed_max);
        else if (key == "turn_rate_min") num(s.turn_rate_min);
        else if (key == "turn_rate_max") num(s.turn_rate_max);
        else if (key == "position_sigma") num(s.position_sigma);
        else if (key == "yaw_sigma") num(s.yaw_sigma);
        else if (key == "velocity_sigma") num(s.velocity_sigma);
        else if (key == "dropout") num(s.dropout);
        else if (key == "clutter_rate") num(s.clutter_rate);
        else if (key == "embedding_dim") integer(s.embedding_dim);
        else if (key == "embedding_noise") num(s.embedding_noise);
        else if (key == "score_min") num(s.score_min);
        else if (key == "score_max") num(s.score_max);
        else if (key == "clutter_score_min") num(s.clutter_score_min);
        else if (key == "clutter_score_max") num(s.clutter_score_max);
        else throw InvalidInput("scenario spec: unknown key '" + key + "'");
    }
    s.validate();
    return s;
}

[[nodiscard]] inline ScenarioSpec load_scenario_spec(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot open '" + path + "'");
    Json j;
    try {
        j = Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw InvalidInput("'" + path + "': invalid JSON: " + e.what());
    }
    return parse_scenario_spec(j);
}

struct Scenario {
    std::vector<FrameRecord> ground_truth;
    std::vector<FrameRecord> detections;
};

namespace detail {

struct Trajectory {
    double x0 = 0.0, y0 = 0.0, z = 0.0;
    double heading = 0.0, speed = 0.0, turn_rate = 0.0;
    double w = 1.0, l = 1.0, h = 1.0;

    [[nodiscard]] BoxState at(double t) const {
        const double th = heading + turn_rate * t;
        double x = 0.0, y = 0.0;
        if (turn_rate == 0.0) {
            x = x0 + speed * std::cos(heading) * t;
            y = y0 + speed * std::sin(heading) * t;
        } else {
            const double rad = speed / turn_rate;
            x = x0 + rad * (std::sin(th) - std::sin(heading));
            y = y0 - rad * (std::cos(th) - std::cos(heading));
        }
        return BoxState::from_yaw(x, y, z, w, l, h, th, speed * std::cos(th), speed * std::sin(th));
    }
};

template <typename Rng>
std::vector<double> random_unit(int dim, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = g(rng);
    v.normalize();
    return {v.data(), v.data() + dim};
}

/// Latent unit vector plus isotropic noise of total standard deviation
/// `sigma`, renormalized.
template <typename Rng>
std::vector<double> perturb_unit(const std::vector<double>& latent, double sigma, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    const int dim = static_cast<int>(latent.size());
    Eigen::VectorXd v(dim);
    const double scale = sigma / std::sqrt(static_cast<double>(dim));
    for (int i = 0; i < dim; ++i) v[i] = latent[i] + scale * g(rng);
    const double n = v.norm();
    if (n > 0.0) v /= n;
    return {v.data(), v.data() + dim};
}

} // namespace detail

/// Ground truth and detections for one sequence, fully determined by
/// (spec, seed).
[[nodiscard]] inline Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    std::normal_distribution<double> gauss(0.0, 1.0);

    struct Identity {
        detail::Trajectory traj;
        std::vector<double> roi_latent, query_latent;
    };
    std::vector<Identity> ids(spec.num_objects);
    const int n_turning = static_cast<int>(std::lround(spec.turning_fraction * spec.num_objects));
    for (int i = 0; i < spec.num_objects; ++i) {
        auto& tr = ids[i].traj;
        tr.x0 = uniform(-spec.area, spec.area);
        tr.y0 = uniform(-spec.area, spec.area);
        tr.z = uniform(0.5, 1.0);
        tr.heading = uniform(-std::numbers::pi, std::numbers::pi);
        tr.speed = uniform(spec.speed_min, spec.speed_max);
        const double rate = uniform(spec.turn_rate_min, spec.turn_rate_max);
        const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
        tr.turn_rate = i < n_turning ? sign * rate : 0.0;
        tr.w = uniform(1.6, 2.1);
        tr.l = uniform(3.5, 5.0);
        tr.h = uniform(1.4, 1.8);
        if (spec.embedding_dim > 0) {
            ids[i].roi_latent = detail::random_unit(spec.embedding_dim, rng);
            ids[i].query_latent = detail::random_unit(spec.embedding_dim, rng);
        }
    }

    std::poisson_distribution<int> clutter_count(spec.clutter_rate > 0.0 ? spec.clutter_rate : 1.0);
    Scenario out;
    const int frames = spec.frame_count();
    for (int k = 0; k < frames; ++k) {
        const double t = k / spec.frame_rate;
        FrameRecord gt{spec.sequence_id, t, std::nullopt, {}};
        FrameRecord det{spec.sequence_id, t, std::nullopt, {}};
        for (int i = 0; i < spec.num_objects; ++i) {
            const BoxState truth = ids[i].traj.at(t);
            gt.detections.push_back({truth, spec.class_name, 1.0, std::nullopt, std::nullopt, i});

            if (unit(rng) < spec.dropout) continue;
            ObjectRecord d;
            BoxState b = truth;
            b.cx += spec.position_sigma * gauss(rng);
            b.cy += spec.position_sigma * gauss(rng);
            b.cz += 0.5 * spec.position_sigma * gauss(rng);
            if (spec.yaw_sigma > 0.0) {
                const double yaw = truth.yaw() + spec.yaw_sigma * gauss(rng);
                b.cos_yaw = std::cos(yaw);
                b.sin_yaw = std::sin(yaw);
            }
            b.vx += spec.velocity_sigma * gauss(rng);
            b.vy += spec.velocity_sigma * gauss(rng);
            d.box = b;
            d.cls = spec.class_name;
            d.score = uniform(spec.score_min, spec.score_max);
            if (spec.embedding_dim > 0) {
                d.roi_feature = detail::perturb_unit(ids[i].roi_latent, spec.embedding_noise, rng);
                d.query_feature = detail::perturb_unit(ids[i].query_latent, spec.embedding_noise, rng);
            }
            det.detections.push_back(std::move(d));
        }
        const int n_clutter = spec.clutter_rate > 0.0 ? clutter_count(rng) : 0;
        for (int c = 0; c < n_clutter; ++c) {
            const double yaw = uniform(-std::numbers::pi, std::numbers::pi);
            const double speed = uniform(0.0, spec.speed_max);
            const double dir = uniform(-std::numbers::pi, std::numbers::pi);
            ObjectRecord d;
            d.box = BoxState::from_yaw(uniform(-1.5 * spec.area, 1.5 * spec.area),
                                       uniform(-1.5 * spec.area, 1.5 * spec.area), uniform(0.5, 1.0),
                                       uniform(1.6, 2.1), uniform(3.5, 5.0), uniform(1.4, 1.8), yaw,
                                       speed * std::cos(dir), speed * std::sin(dir));
            d.cls = spec.class_name;
            d.score = uniform(spec.clutter_score_min, spec.clutter_score_max);
            if (spec.embedding_dim > 0) {
                d.roi_feature = detail::random_unit(spec.embedding_dim, rng);
                d.query_feature = detail::random_unit(spec.embedding_dim, rng);
            }
            det.detections.push_back(std::move(d));
        }
        out.ground_truth.push_back(std::move(gt));
        out.detections.push_back(std::move(det));
    }
    return out;
}

} // namespace mvtrack::io
