#pragma once

#include "mvtrack/assignment/hungarian.hpp"
#include "mvtrack/errors.hpp"
#include "mvtrack/geometry/box.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace mvtrack::metrics {

using geometry::BoxState;

struct LabeledObject {
    std::int64_t label = 0;
    BoxState box;
    std::string cls;
    double score = 1.0;
};

struct EvalFrame {
    double timestamp = 0.0;
    std::vector<LabeledObject> gts;
    std::vector<LabeledObject> tracks;
};

/// One evaluated sequence.
using EvalSequence = std::vector<EvalFrame>;

struct FrameEvents {
    struct Match {
        std::int64_t gt = 0;
        std::int64_t track = 0;
        double distance = 0.0;
    };
    std::vector<Match> matches;
    int true_positives = 0;
    int false_positives = 0;
    int misses = 0;
    int id_switches = 0;
    int gt_count = 0;
    double distance_sum = 0.0;
};

/// Bird's-eye-view centre distance.
[[nodiscard]] inline double bev_distance(const BoxState& a, const BoxState& b) {
    return std::hypot(a.cx - b.cx, a.cy - b.cy);
}

inline constexpr double kDefaultMatchDistance = 2.0;

/// CLEAR-MOT correspondence state carried across the frames of one sequence.
struct MatchHistory {
    /// Correspondences of the previous frame, gt -> track.
    std::map<std::int64_t, std::int64_t> previous;
    /// Most recent track ever matched to each gt.
    std::map<std::int64_t, std::int64_t> last_track;
};

inline void validate_unique_labels(std::span<const LabeledObject> objs, const char* what) {
    std::set<std::int64_t> seen;
    for (const auto& o : objs)
        if (!seen.insert(o.label).second)
            throw InvalidInput(std::string("duplicate ") + what + " label " + std::to_string(o.label) + " in a frame");
}

/// Matches one frame. Previous correspondences are kept while they stay
/// within the distance threshold; the rest are matched by minimum total BEV
/// distance among same-class pairs within the threshold. A gt whose track
/// differs from the last track it was matched to counts an identity switch.
[[nodiscard]] inline FrameEvents match_frame(std::span<const LabeledObject> gts,
                                             std::span<const LabeledObject> tracks, MatchHistory& history,
                                             double max_distance = kDefaultMatchDistance) {
    validate_unique_labels(gts, "ground-truth");
    validate_unique_labels(tracks, "track");

    FrameEvents ev;
    ev.gt_count = static_cast<int>(gts.size());
    std::vector<int> gt_match(gts.size(), -1);
    std::vector<char> track_used(tracks.size(), 0);
    std::map<std::int64_t, int> track_index;
    for (std::size_t k = 0; k < tracks.size(); ++k) track_index[tracks[k].label] = static_cast<int>(k);

    for (std::size_t g = 0; g < gts.size(); ++g) {
        auto prev = history.previous.find(gts[g].label);
        if (prev == history.previous.end()) continue;
        auto it = track_index.find(prev->second);
        if (it == track_index.end() || track_used[it->second]) continue;
        const auto& trk = tracks[it->second];
        if (trk.cls == gts[g].cls && bev_distance(gts[g].box, trk.box) <= max_distance) {
            gt_match[g] = it->second;
            track_used[it->second] = 1;
        }
    }

    std::vector<int> free_gts, free_tracks;
    for (std::size_t g = 0; g < gts.size(); ++g)
        if (gt_match[g] < 0) free_gts.push_back(static_cast<int>(g));
    for (std::size_t k = 0; k < tracks.size(); ++k)
        if (!track_used[k]) free_tracks.push_back(static_cast<int>(k));
    if (!free_gts.empty() && !free_tracks.empty()) {
        assignment::CostMatrix costs(free_gts.size(), free_tracks.size());
        for (std::size_t a = 0; a < free_gts.size(); ++a) {
            for (std::size_t b = 0; b < free_tracks.size(); ++b) {
                const auto& gt = gts[free_gts[a]];
                const auto& trk = tracks[free_tracks[b]];
                costs(a, b) = gt.cls == trk.cls ? bev_distance(gt.box, trk.box) : assignment::kInfeasible;
            }
        }
        for (auto [a, b] : assignment::hungarian_gated(costs, max_distance).pairs) {
            gt_match[free_gts[a]] = free_tracks[b];
            track_used[free_tracks[b]] = 1;
        }
    }

    history.previous.clear();
    for (std::size_t g = 0; g < gts.size(); ++g) {
        if (gt_match[g] < 0) {
            ++ev.misses;
            continue;
        }
        const auto& gt = gts[g];
        const auto& trk = tracks[gt_match[g]];
        const double d = bev_distance(gt.box, trk.box);
        ev.matches.push_back({gt.label, trk.label, d});
        ++ev.true_positives;
        ev.distance_sum += d;
        auto last = history.last_track.find(gt.label);
        if (last != history.last_track.end() && last->second != trk.label) ++ev.id_switches;
        history.last_track[gt.label] = trk.label;
        history.previous[gt.label] = trk.label;
    }
    for (char used : track_used)
        if (!used) ++ev.false_positives;
    return ev;
}

struct MotCounts {
    long true_positives = 0;
    long false_positives = 0;
    long misses = 0;
    long id_switches = 0;
    long gt_count = 0;
    double distance_sum = 0.0;

    void add(const FrameEvents& ev) {
        true_positives += ev.true_positives;
        false_positives += ev.false_positives;
        misses += ev.misses;
        id_switches += ev.id_switches;
        gt_count += ev.gt_count;
        distance_sum += ev.distance_sum;
    }
};

struct MotReport {
    double mota = 0.0;
    double motp = 0.0;
    double recall = 0.0;
    double precision = 0.0;
    long id_switches = 0;
    long false_positives = 0;
    long misses = 0;
    long true_positives = 0;
    long gt_count = 0;
    double amota = 0.0;
    double amotp = 0.0;
};

/// MOTA = 1 - (FP + FN + IDSW) / GT; MOTP is the mean BEV distance of true
/// positives, or `max_distance` when there are none.
[[nodiscard]] inline MotReport compute_mota_motp(const MotCounts& c, double max_distance = kDefaultMatchDistance) {
    if (c.gt_count == 0) throw UndefinedMetric("MOTA is undefined without ground truth");
    MotReport r;
    r.true_positives = c.true_positives;
    r.false_positives = c.false_positives;
    r.misses = c.misses;
    r.id_switches = c.id_switches;
    r.gt_count = c.gt_count;
    r.mota = 1.0 - static_cast<double>(c.false_positives + c.misses + c.id_switches) / c.gt_count;
    r.motp = c.true_positives > 0 ? c.distance_sum / c.true_positives : max_distance;
    r.recall = static_cast<double>(c.true_positives) / c.gt_count;
    const long predicted = c.true_positives + c.false_positives;
    r.precision = predicted > 0 ? static_cast<double>(c.true_positives) / predicted : 0.0;
    return r;
}

/// Runs CLEAR-MOT matching over every frame of every sequence. Only tracks
/// with score >= min_score take part.
[[nodiscard]] inline MotCounts accumulate(std::span<const EvalSequence> sequences,
                                          double max_distance = kDefaultMatchDistance,
                                          double min_score = -std::numeric_limits<double>::infinity(),
                                          std::vector<double>* matched_scores = nullptr) {
    MotCounts counts;
    for (const auto& seq : sequences) {
        MatchHistory history;
        for (const auto& frame : seq) {
            std::vector<LabeledObject> kept;
            std::map<std::int64_t, double> score_of;
            for (const auto& t : frame.tracks) {
                if (t.score < min_score) continue;
                kept.push_back(t);
                score_of[t.label] = t.score;
            }
            const auto ev = match_frame(frame.gts, kept, history, max_distance);
            counts.add(ev);
            if (matched_scores)
                for (const auto& mt : ev.matches) matched_scores->push_back(score_of[mt.track]);
        }
    }
    return counts;
}

[[nodiscard]] inline MotReport compute_mota_motp(std::span<const EvalSequence> sequences,
                                                 double max_distance = kDefaultMatchDistance) {
    return compute_mota_motp(accumulate(sequences, max_distance), max_distance);
}

} // namespace mvtrack::metrics
