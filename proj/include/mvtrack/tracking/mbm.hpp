#pragma once

#include "mvtrack/assignment/murty.hpp"
#include "mvtrack/errors.hpp"
#include "mvtrack/tracking/config.hpp"
#include "mvtrack/tracking/likelihood.hpp"
#include "mvtrack/tracking/types.hpp"
#include "mvtrack/tracking/ukf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

namespace mvtrack::tracking {

struct FramePacket {
    double timestamp = 0.0;
    std::vector<Measurement> measurements;
};

/// All single-target hypotheses that share one label.
struct Track {
    std::int64_t label = -1;
    std::vector<BernoulliComponent> hypotheses;
};

/// One consistent association history: a weight plus, for every track, the
/// index of its selected single-target hypothesis or -1 when absent.
struct GlobalHypothesis {
    double weight = 1.0;
    double log_weight = 0.0;
    std::vector<int> selection;
};

/// Multi-Bernoulli mixture posterior.
struct MbmState {
    std::vector<Track> tracks;
    std::vector<GlobalHypothesis> hypotheses;
    std::int64_t next_label = 0;
    std::optional<double> last_timestamp;
};

namespace detail {

inline constexpr double kTinyProb = 1e-300;

/// Normalizes log weights in place and refreshes the linear weights.
inline void normalize_weights(std::vector<GlobalHypothesis>& hyps) {
    if (hyps.empty()) return;
    double max_log = -std::numeric_limits<double>::infinity();
    for (const auto& h : hyps) max_log = std::max(max_log, h.log_weight);
    double sum = 0.0;
    for (const auto& h : hyps) sum += std::exp(h.log_weight - max_log);
    const double log_norm = max_log + std::log(sum);
    for (auto& h : hyps) {
        h.log_weight -= log_norm;
        h.weight = std::exp(h.log_weight);
    }
}

inline double log_add(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == -std::numeric_limits<double>::infinity()) return a;
    return a + std::log1p(std::exp(b - a));
}

/// Keeps only referenced single-target hypotheses and drops empty tracks.
inline void collect_garbage(MbmState& state) {
    const std::size_t n_tracks = state.tracks.size();
    std::vector<std::vector<int>> remap(n_tracks);
    for (std::size_t t = 0; t < n_tracks; ++t) remap[t].assign(state.tracks[t].hypotheses.size(), -1);
    for (const auto& h : state.hypotheses)
        for (std::size_t t = 0; t < n_tracks; ++t)
            if (h.selection[t] >= 0) remap[t][h.selection[t]] = 0;

    std::vector<int> track_remap(n_tracks, -1);
    std::vector<Track> kept;
    for (std::size_t t = 0; t < n_tracks; ++t) {
        Track track{state.tracks[t].label, {}};
        for (std::size_t i = 0; i < remap[t].size(); ++i) {
            if (remap[t][i] < 0) continue;
            remap[t][i] = static_cast<int>(track.hypotheses.size());
            track.hypotheses.push_back(std::move(state.tracks[t].hypotheses[i]));
        }
        if (track.hypotheses.empty()) continue;
        track_remap[t] = static_cast<int>(kept.size());
        kept.push_back(std::move(track));
    }
    for (auto& h : state.hypotheses) {
        std::vector<int> sel(kept.size(), -1);
        for (std::size_t t = 0; t < n_tracks; ++t)
            if (track_remap[t] >= 0 && h.selection[t] >= 0) sel[track_remap[t]] = remap[t][h.selection[t]];
        h.selection = std::move(sel);
    }
    state.tracks = std::move(kept);
}

} // namespace detail

/// Hypothesis pruning relative to the heaviest, capping to max_hypotheses,
/// removal of low-existence Bernoullis from every hypothesis (merging
/// hypotheses that become identical), then removal of unreferenced
/// components. Labels are never reassigned.
[[nodiscard]] inline MbmState prune_and_cap(MbmState state, const TrackerConfig& cfg) {
    auto& hyps = state.hypotheses;
    if (hyps.empty()) return state;
    detail::normalize_weights(hyps);

    std::stable_sort(hyps.begin(), hyps.end(), [](const GlobalHypothesis& a, const GlobalHypothesis& b) {
        if (a.log_weight != b.log_weight) return a.log_weight > b.log_weight;
        return a.selection < b.selection;
    });
    const double floor = hyps.front().weight * cfg.hypothesis_prune;
    std::erase_if(hyps, [floor](const GlobalHypothesis& h) { return h.weight < floor; });
    if (hyps.size() > cfg.max_hypotheses) hyps.resize(cfg.max_hypotheses);
    detail::normalize_weights(hyps);

    if (cfg.bernoulli_prune > 0.0) {
        bool changed = false;
        for (auto& h : hyps) {
            for (std::size_t t = 0; t < state.tracks.size(); ++t) {
                const int s = h.selection[t];
                if (s >= 0 && state.tracks[t].hypotheses[s].r < cfg.bernoulli_prune) {
                    h.selection[t] = -1;
                    changed = true;
                }
            }
        }
        if (changed) {
            std::map<std::vector<int>, double> merged;
            for (const auto& h : hyps) {
                auto [it, inserted] = merged.try_emplace(h.selection, h.log_weight);
                if (!inserted) it->second = detail::log_add(it->second, h.log_weight);
            }
            if (merged.size() != hyps.size()) {
                std::vector<GlobalHypothesis> out;
                for (auto& [sel, lw] : merged) out.push_back({0.0, lw, sel});
                std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
                    return a.log_weight > b.log_weight;
                });
                hyps = std::move(out);
                detail::normalize_weights(hyps);
            }
        }
    }
    detail::collect_garbage(state);
    return state;
}

[[nodiscard]] inline BernoulliComponent make_birth(const Measurement& meas, std::int64_t label, const TrackerConfig& cfg) {
    BernoulliComponent b;
    b.r = std::clamp(meas.score, cfg.birth_r_min, cfg.birth_r_max);
    b.label = label;
    b.state.mean = meas.z;
    b.state.cov = cfg.birth_noise.asDiagonal();
    b.dims = meas.dims;
    detail::blend_memory(b.roi_memory, meas.roi_feature, 0.0);
    detail::blend_memory(b.query_memory, meas.query_feature, 0.0);
    b.hits = 1;
    b.class_id = meas.class_id;
    b.score = meas.score;
    return b;
}

/// Existence after a missed detection: r (1 - pD) / (1 - r pD).
[[nodiscard]] inline double missed_existence(double r, double p_detect) {
    const double denom = 1.0 - r * p_detect;
    if (denom <= detail::kTinyProb) return r;
    return r * (1.0 - p_detect) / denom;
}

/// One filtering step: predict, associate under every global hypothesis with
/// ranked assignments, update, normalize and prune.
///
/// An association map of a parent hypothesis has weight proportional to
///   parent * prod_detected(r pD exp(l) / clutter) * prod_missed(1 - r pD),
/// where l is the hybrid log-likelihood; measurements left unassigned start
/// new Bernoullis. Costs fed to the ranked solver are the negative logs of
/// these factors relative to the all-missed map.
[[nodiscard]] inline MbmState mbm_update(MbmState state, const FramePacket& frame, const TrackerConfig& cfg) {
    if (state.last_timestamp && !(frame.timestamp > *state.last_timestamp))
        throw SequencingError("frame timestamp " + std::to_string(frame.timestamp) +
                              " does not follow " + std::to_string(*state.last_timestamp));
    if (state.hypotheses.empty()) state.hypotheses.push_back({1.0, 0.0, std::vector<int>(state.tracks.size(), -1)});

    if (state.last_timestamp) {
        const double dt = frame.timestamp - *state.last_timestamp;
        for (auto& track : state.tracks)
            for (auto& comp : track.hypotheses) comp = ukf_predict(comp, dt, cfg);
    }
    state.last_timestamp = frame.timestamp;

    const auto& meas = frame.measurements;
    const int m = static_cast<int>(meas.size());
    const int stride = m + 1;
    const double gate_distance = std::sqrt(cfg.gate_chi2());
    const double log_clutter = std::log(cfg.clutter_density);
    constexpr double inf = assignment::kInfeasible;

    // Child slot h * stride is the missed child of hypothesis h; slot
    // h * stride + 1 + j is its update with measurement j.
    const std::size_t n_old = state.tracks.size();
    std::vector<std::vector<std::optional<BernoulliComponent>>> children(n_old);
    std::vector<std::vector<double>> det_cost(n_old), miss_cost(n_old);

    for (std::size_t t = 0; t < n_old; ++t) {
        const auto& sths = state.tracks[t].hypotheses;
        children[t].resize(sths.size() * stride);
        det_cost[t].assign(sths.size() * stride, inf);
        miss_cost[t].assign(sths.size(), 0.0);
        for (std::size_t h = 0; h < sths.size(); ++h) {
            const auto& comp = sths[h];
            const double detect_prob = comp.r * cfg.p_detect;
            miss_cost[t][h] = -std::log(std::max(1.0 - detect_prob, detail::kTinyProb));

            BernoulliComponent missed = comp;
            missed.r = missed_existence(comp.r, cfg.p_detect);
            missed.misses += 1;
            children[t][h * stride] = std::move(missed);

            if (m == 0 || !(detect_prob > 0.0)) continue;
            const auto mp = predict_measurement(comp.state, cfg);
            for (int j = 0; j < m; ++j) {
                if (!(mahalanobis(mp, meas[j].z) <= gate_distance)) continue;
                auto [sims_roi, sims_query] = feature_similarities(comp, meas[j]);
                auto [updated, log_lik] = ukf_update(comp, meas[j], cfg, mp);
                const double l = hybrid_likelihood(log_lik, sims_roi, sims_query, cfg);
                updated.r = 1.0;
                det_cost[t][h * stride + 1 + j] = -std::log(detect_prob) - l + log_clutter;
                children[t][h * stride + 1 + j] = std::move(updated);
            }
        }
    }

    std::vector<GlobalHypothesis> next;
    for (const auto& parent : state.hypotheses) {
        std::vector<int> present;
        double base = 0.0;
        for (std::size_t t = 0; t < n_old; ++t) {
            if (parent.selection[t] < 0) continue;
            present.push_back(static_cast<int>(t));
            base += miss_cost[t][parent.selection[t]];
        }
        const int n_present = static_cast<int>(present.size());

        auto make_child = [&](const std::vector<int>& track_of_meas, double extra_cost) {
            GlobalHypothesis child;
            child.log_weight = parent.log_weight - base - extra_cost;
            child.selection.assign(n_old + m, -1);
            std::vector<int> meas_of_track(n_present, -1);
            for (int j = 0; j < m; ++j) {
                if (track_of_meas[j] >= 0) meas_of_track[track_of_meas[j]] = j;
                else child.selection[n_old + j] = 0;
            }
            // meas_of_track == -1 lands on the missed slot
            for (int p = 0; p < n_present; ++p) {
                const int t = present[p];
                child.selection[t] = parent.selection[t] * stride + 1 + meas_of_track[p];
            }
            next.push_back(std::move(child));
        };

        if (m == 0) {
            make_child({}, 0.0);
            continue;
        }

        assignment::CostMatrix costs = assignment::CostMatrix::Constant(m, n_present + m, inf);
        for (int j = 0; j < m; ++j) {
            costs(j, n_present + j) = 0.0;
            for (int p = 0; p < n_present; ++p) {
                const int t = present[p];
                const int h = parent.selection[t];
                const double c = det_cost[t][h * stride + 1 + j];
                if (c != inf) costs(j, p) = c - miss_cost[t][h];
            }
        }

        std::size_t budget = cfg.max_hypotheses;
        if (budget != kUnlimitedHypotheses)
            budget = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.max_hypotheses * parent.weight)));
        for (const auto& sol : assignment::murty_kbest(costs, budget)) {
            std::vector<int> track_of_meas(m, -1);
            for (auto [row, col] : sol.pairs)
                if (col < n_present) track_of_meas[row] = col;
            make_child(track_of_meas, sol.total_cost);
        }
    }

    MbmState out;
    out.next_label = state.next_label;
    out.last_timestamp = state.last_timestamp;
    for (std::size_t t = 0; t < n_old; ++t) {
        Track track{state.tracks[t].label, {}};
        track.hypotheses.reserve(children[t].size());
        // Unfilled slots are never selected; they hold an inert placeholder
        // until garbage collection drops them.
        for (auto& c : children[t]) track.hypotheses.push_back(c ? std::move(*c) : BernoulliComponent{});
        out.tracks.push_back(std::move(track));
    }
    for (int j = 0; j < m; ++j) {
        const std::int64_t label = out.next_label++;
        out.tracks.push_back({label, {make_birth(meas[j], label, cfg)}});
    }
    out.hypotheses = std::move(next);
    return prune_and_cap(std::move(out), cfg);
}

/// Components with r >= extract_threshold in the heaviest hypothesis.
[[nodiscard]] inline std::vector<TrackOutput> extract_tracks(const MbmState& state, const TrackerConfig& cfg) {
    std::vector<TrackOutput> out;
    if (state.hypotheses.empty()) return out;
    const auto best = std::max_element(state.hypotheses.begin(), state.hypotheses.end(),
                                       [](const auto& a, const auto& b) { return a.log_weight < b.log_weight; });
    for (std::size_t t = 0; t < state.tracks.size(); ++t) {
        const int s = best->selection[t];
        if (s < 0) continue;
        const auto& comp = state.tracks[t].hypotheses[s];
        if (comp.r < cfg.extract_threshold) continue;
        out.push_back({state.tracks[t].label, comp.box(), comp.class_id, comp.r * comp.score});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
    return out;
}

/// Sequential MBM tracker over one sequence.
class MbmTracker {
public:
    explicit MbmTracker(TrackerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    std::vector<TrackOutput> step(const FramePacket& frame) {
        state_ = mbm_update(std::move(state_), frame, cfg_);
        return extract_tracks(state_, cfg_);
    }

    [[nodiscard]] const MbmState& state() const { return state_; }
    [[nodiscard]] const TrackerConfig& config() const { return cfg_; }

private:
    TrackerConfig cfg_;
    MbmState state_;
};

} // namespace mvtrack::tracking
