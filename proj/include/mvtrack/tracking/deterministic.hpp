#pragma once

#include "mvtrack/assignment/hungarian.hpp"
#include "mvtrack/errors.hpp"
#include "mvtrack/tracking/config.hpp"
#include "mvtrack/tracking/likelihood.hpp"
#include "mvtrack/tracking/mbm.hpp"
#include "mvtrack/tracking/ukf.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace mvtrack::tracking {

/// Single-hypothesis tracker: one Hungarian assignment per frame on
/// Mahalanobis distance, no existence probability and no appearance terms.
/// Tracks are reported only in frames where they were updated, and are
/// deleted after more than de_max_age consecutive misses.
class DeterministicTracker {
public:
    explicit DeterministicTracker(TrackerConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        gate_distance_ = std::sqrt(cfg_.gate_chi2());
    }

    std::vector<TrackOutput> step(const FramePacket& frame) {
        if (last_timestamp_ && !(frame.timestamp > *last_timestamp_))
            throw SequencingError("frame timestamp " + std::to_string(frame.timestamp) +
                                  " does not follow " + std::to_string(*last_timestamp_));
        if (last_timestamp_) {
            const double dt = frame.timestamp - *last_timestamp_;
            for (auto& t : tracks_) t.comp.state = ukf_predict_state(t.comp.state, dt, cfg_);
        }
        last_timestamp_ = frame.timestamp;

        const auto& meas = frame.measurements;
        const int n = static_cast<int>(tracks_.size());
        const int m = static_cast<int>(meas.size());
        std::vector<MeasurementPrediction> preds;
        preds.reserve(n);
        assignment::CostMatrix costs(n, m);
        for (int i = 0; i < n; ++i) {
            preds.push_back(predict_measurement(tracks_[i].comp.state, cfg_));
            for (int j = 0; j < m; ++j) costs(i, j) = mahalanobis(preds[i], meas[j].z);
        }
        const auto matching = assignment::hungarian_gated(costs, gate_distance_);

        std::vector<char> used(m, 0), updated(n, 0);
        for (auto [i, j] : matching.pairs) {
            tracks_[i].comp = ukf_update(tracks_[i].comp, meas[j], cfg_, preds[i]).first;
            tracks_[i].since_update = 0;
            used[j] = updated[i] = 1;
        }
        for (int i = 0; i < n; ++i)
            if (!updated[i]) ++tracks_[i].since_update;
        std::erase_if(tracks_, [this](const Entry& t) { return t.since_update > cfg_.de_max_age; });

        for (int j = 0; j < m; ++j) {
            if (used[j]) continue;
            Entry e;
            e.comp = make_birth(meas[j], next_label_++, cfg_);
            e.comp.r = 1.0;
            tracks_.push_back(std::move(e));
        }

        std::vector<TrackOutput> out;
        for (const auto& t : tracks_) {
            if (t.since_update != 0 || t.comp.hits < cfg_.de_min_hits) continue;
            if (t.comp.score < cfg_.extract_threshold) continue;
            out.push_back({t.comp.label, t.comp.box(), t.comp.class_id, t.comp.score});
        }
        return out;
    }

private:
    struct Entry {
        BernoulliComponent comp;
        int since_update = 0;
    };

    TrackerConfig cfg_;
    double gate_distance_ = 0.0;
    std::vector<Entry> tracks_;
    std::int64_t next_label_ = 0;
    std::optional<double> last_timestamp_;
};

} // namespace mvtrack::tracking
