#pragma once

#include "mvtrack/metrics/clear_mot.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace mvtrack::metrics {

struct RecallPoint {
    double target = 0.0;
    bool achieved = false;
    double threshold = 0.0;
    double recall = 0.0;
    double motar = 0.0;
    double motp = 0.0;
};

struct AmotaResult {
    double amota = 0.0;
    double amotp = 0.0;
    std::vector<RecallPoint> points;
};

/// Recall-normalized MOTA, clipped at 0:
/// 1 - (IDSW + FP + FN - (1 - recall) * GT) / (recall * GT).
[[nodiscard]] inline double motar(const MotCounts& c) {
    if (c.gt_count == 0 || c.true_positives == 0) return 0.0;
    const double p = static_cast<double>(c.gt_count);
    const double recall = c.true_positives / p;
    const double num = c.id_switches + c.false_positives + c.misses - (1.0 - recall) * p;
    return std::max(0.0, 1.0 - num / (recall * p));
}

/// Score-threshold sweep over n evenly spaced recall targets k/n, k = 1..n.
/// The threshold for target r is the score of the ceil(r * GT)-th best
/// matched track in an all-tracks pass; targets beyond the achievable recall
/// score MOTAR 0 and MOTP = max_distance. AMOTA/AMOTP average over all n.
[[nodiscard]] inline AmotaResult compute_amota(std::span<const EvalSequence> sequences, int n_recall_points = 40,
                                               double max_distance = kDefaultMatchDistance) {
    if (n_recall_points < 1) throw InvalidInput("n_recall_points must be >= 1");
    std::vector<double> matched;
    const MotCounts all = accumulate(sequences, max_distance, -std::numeric_limits<double>::infinity(), &matched);
    if (all.gt_count == 0) throw UndefinedMetric("AMOTA is undefined without ground truth");
    std::sort(matched.begin(), matched.end(), std::greater<>());

    AmotaResult out;
    std::map<double, MotCounts> at_threshold;
    for (int k = 1; k <= n_recall_points; ++k) {
        RecallPoint pt;
        pt.target = static_cast<double>(k) / n_recall_points;
        const auto need = static_cast<std::size_t>(std::ceil(pt.target * all.gt_count - 1e-9));
        if (need >= 1 && need <= matched.size()) {
            pt.achieved = true;
            pt.threshold = matched[need - 1];
            auto it = at_threshold.find(pt.threshold);
            if (it == at_threshold.end())
                it = at_threshold.emplace(pt.threshold, accumulate(sequences, max_distance, pt.threshold)).first;
            const MotCounts& c = it->second;
            pt.recall = static_cast<double>(c.true_positives) / c.gt_count;
            pt.motar = motar(c);
            pt.motp = c.true_positives > 0 ? c.distance_sum / c.true_positives : max_distance;
        } else {
            pt.motp = max_distance;
        }
        out.amota += pt.motar;
        out.amotp += pt.motp;
        out.points.push_back(pt);
    }
    out.amota /= n_recall_points;
    out.amotp /= n_recall_points;
    return out;
}

/// Restricts every frame to one class.
[[nodiscard]] inline std::vector<EvalSequence> filter_class(std::span<const EvalSequence> sequences,
                                                            const std::string& cls) {
    std::vector<EvalSequence> out;
    for (const auto& seq : sequences) {
        EvalSequence s;
        for (const auto& f : seq) {
            EvalFrame g{f.timestamp, {}, {}};
            for (const auto& o : f.gts)
                if (o.cls == cls) g.gts.push_back(o);
            for (const auto& o : f.tracks)
                if (o.cls == cls) g.tracks.push_back(o);
            s.push_back(std::move(g));
        }
        out.push_back(std::move(s));
    }
    return out;
}

/// AMOTA per ground-truth class.
[[nodiscard]] inline std::map<std::string, AmotaResult> compute_amota_per_class(
    std::span<const EvalSequence> sequences, int n_recall_points = 40, double max_distance = kDefaultMatchDistance) {
    std::set<std::string> classes;
    for (const auto& seq : sequences)
        for (const auto& f : seq)
            for (const auto& o : f.gts) classes.insert(o.cls);
    std::map<std::string, AmotaResult> out;
    for (const auto& cls : classes) {
        const auto filtered = filter_class(sequences, cls);
        out.emplace(cls, compute_amota(filtered, n_recall_points, max_distance));
    }
    return out;
}

struct EvalOptions {
    double max_distance = kDefaultMatchDistance;
    int n_recall_points = 40;
};

struct FullReport {
    MotReport summary;
    std::map<std::string, AmotaResult> per_class;
};

/// CLEAR-MOT totals over all classes plus AMOTA/AMOTP averaged over classes.
[[nodiscard]] inline FullReport evaluate(std::span<const EvalSequence> sequences, const EvalOptions& opt = {}) {
    FullReport r;
    r.summary = compute_mota_motp(accumulate(sequences, opt.max_distance), opt.max_distance);
    r.per_class = compute_amota_per_class(sequences, opt.n_recall_points, opt.max_distance);
    if (!r.per_class.empty()) {
        for (const auto& [cls, res] : r.per_class) {
            r.summary.amota += res.amota;
            r.summary.amotp += res.amotp;
        }
        r.summary.amota /= static_cast<double>(r.per_class.size());
        r.summary.amotp /= static_cast<double>(r.per_class.size());
    }
    return r;
}

} // namespace mvtrack::metrics
