#pragma once

#include "mvtrack/errors.hpp"
#include "mvtrack/io/config_file.hpp"
#include "mvtrack/io/records.hpp"
#include "mvtrack/io/rig.hpp"
#include "mvtrack/metrics/amota.hpp"
#include "mvtrack/metrics/clear_mot.hpp"
#include "mvtrack/tracking/deterministic.hpp"
#include "mvtrack/tracking/mbm.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <memory>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace mvtrack::io {

using tracking::AssociationMode;

/// Class names mapped to dense ids in order of first appearance.
class ClassRegistry {
public:
    int id(const std::string& name) {
        auto [it, inserted] = ids_.try_emplace(name, static_cast<int>(names_.size()));
        if (inserted) names_.push_back(name);
        return it->second;
    }
    [[nodiscard]] const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
    [[nodiscard]] std::size_t size() const { return names_.size(); }

private:
    std::map<std::string, int> ids_;
    std::vector<std::string> names_;
};

[[nodiscard]] inline std::optional<Eigen::VectorXd> to_vector(const std::optional<std::vector<double>>& v) {
    if (!v) return std::nullopt;
    return Eigen::Map<const Eigen::VectorXd>(v->data(), static_cast<Eigen::Index>(v->size()));
}

/// World-frame tracker input for one record.
[[nodiscard]] inline tracking::FramePacket to_packet(const FrameRecord& record, ClassRegistry& classes) {
    const FrameRecord world = to_world(record);
    tracking::FramePacket packet;
    packet.timestamp = world.timestamp;
    for (const auto& d : world.detections) {
        auto m = tracking::Measurement::from_box(d.box, classes.id(d.cls), d.score);
        m.roi_feature = to_vector(d.roi_feature);
        m.query_feature = to_vector(d.query_feature);
        packet.measurements.push_back(std::move(m));
    }
    return packet;
}

struct RunSummary {
    std::size_t sequences = 0;
    std::size_t frames = 0;
    std::size_t detections = 0;
    std::size_t track_boxes = 0;
    std::size_t labels = 0;
    double seconds = 0.0;
};

/// Runs one tracker instance per sequence and returns the track records,
/// sequence by sequence in order of first appearance.
[[nodiscard]] inline std::vector<FrameRecord> track_records(const std::vector<FrameRecord>& detections,
                                                            tracking::TrackerConfig cfg, AssociationMode mode,
                                                            RunSummary* summary = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    cfg.apply_mode(mode);
    cfg.validate();
    ClassRegistry classes;
    std::vector<FrameRecord> out;
    RunSummary s;
    std::set<std::pair<std::string, std::int64_t>> labels;
    for (const auto& seq : group_sequences(detections)) {
        ++s.sequences;
        std::function<std::vector<tracking::TrackOutput>(const tracking::FramePacket&)> step;
        if (mode == AssociationMode::Deterministic) {
            auto tracker = std::make_shared<tracking::DeterministicTracker>(cfg);
            step = [tracker](const tracking::FramePacket& f) { return tracker->step(f); };
        } else {
            auto tracker = std::make_shared<tracking::MbmTracker>(cfg);
            step = [tracker](const tracking::FramePacket& f) { return tracker->step(f); };
        }
        for (const auto& rec : seq.frames) {
            ++s.frames;
            s.detections += rec.detections.size();
            FrameRecord tr{rec.sequence_id, rec.timestamp, std::nullopt, {}};
            for (const auto& t : step(to_packet(rec, classes))) {
                tr.detections.push_back({t.box, classes.name(t.class_id), t.score, std::nullopt, std::nullopt, t.label});
                labels.emplace(seq.id, t.label);
            }
            s.track_boxes += tr.detections.size();
            out.push_back(std::move(tr));
        }
    }
    s.labels = labels.size();
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (summary) *summary = s;
    return out;
}

/// Loads detections (and validates the rig when a path is given), tracks
/// and writes the track file. An empty config path means defaults.
inline RunSummary run_track(const std::string& detections_path, const std::string& config_path,
                            const std::string& mode, const std::string& out_path,
                            const std::string& cameras_path = {}) {
    const auto assoc = tracking::parse_mode(mode);
    if (!cameras_path.empty()) (void)load_rig(cameras_path);
    const auto cfg = config_path.empty() ? tracking::TrackerConfig{} : load_config(config_path);
    const auto detections = load_records(detections_path);
    RunSummary summary;
    const auto tracks = track_records(detections, cfg, assoc, &summary);
    write_records(out_path, tracks);
    return summary;
}

[[nodiscard]] inline metrics::LabeledObject to_labeled(const ObjectRecord& o, const char* what) {
    if (!o.track_id) throw InvalidInput(std::string(what) + " object without track_id");
    return {*o.track_id, o.box, o.cls, o.score};
}

/// Pairs track frames with ground-truth frames by (sequence, timestamp).
/// A frame present on only one side is evaluated with the other side empty.
[[nodiscard]] inline std::vector<metrics::EvalSequence> build_eval_sequences(const std::vector<FrameRecord>& tracks,
                                                                             const std::vector<FrameRecord>& gts) {
    std::vector<std::string> order;
    std::map<std::string, std::map<double, metrics::EvalFrame>> by_seq;
    auto frame = [&](const FrameRecord& r) -> metrics::EvalFrame& {
        auto [it, inserted] = by_seq.try_emplace(r.sequence_id);
        if (inserted) order.push_back(r.sequence_id);
        auto& f = it->second[r.timestamp];
        f.timestamp = r.timestamp;
        return f;
    };
    for (const auto& r : gts) {
        auto& f = frame(r);
        for (const auto& o : to_world(r).detections) f.gts.push_back(to_labeled(o, "ground-truth"));
    }
    for (const auto& r : tracks) {
        auto& f = frame(r);
        for (const auto& o : to_world(r).detections) f.tracks.push_back(to_labeled(o, "track"));
    }
    std::vector<metrics::EvalSequence> out;
    for (const auto& id : order) {
        metrics::EvalSequence seq;
        for (auto& [ts, f] : by_seq[id]) seq.push_back(std::move(f));
        out.push_back(std::move(seq));
    }
    return out;
}

[[nodiscard]] inline Json report_to_json(const metrics::FullReport& r) {
    Json j;
    const auto& s = r.summary;
    j["mota"] = s.mota;
    j["motp"] = s.motp;
    j["recall"] = s.recall;
    j["precision"] = s.precision;
    j["id_switches"] = s.id_switches;
    j["false_positives"] = s.false_positives;
    j["misses"] = s.misses;
    j["true_positives"] = s.true_positives;
    j["gt_count"] = s.gt_count;
    j["amota"] = s.amota;
    j["amotp"] = s.amotp;
    Json per_class = Json::object();
    for (const auto& [cls, res] : r.per_class) per_class[cls] = {{"amota", res.amota}, {"amotp", res.amotp}};
    j["per_class"] = std::move(per_class);
    return j;
}

[[nodiscard]] inline metrics::FullReport report_from_json(const Json& j) {
    metrics::FullReport r;
    try {
        auto& s = r.summary;
        s.mota = j.at("mota").get<double>();
        s.motp = j.at("motp").get<double>();
        s.recall = j.at("recall").get<double>();
        s.precision = j.at("precision").get<double>();
        s.id_switches = j.at("id_switches").get<long>();
        s.false_positives = j.at("false_positives").get<long>();
        s.misses = j.at("misses").get<long>();
        s.true_positives = j.at("true_positives").get<long>();
        s.gt_count = j.at("gt_count").get<long>();
        s.amota = j.at("amota").get<double>();
        s.amotp = j.at("amotp").get<double>();
        for (const auto& [cls, v] : j.at("per_class").items()) {
            metrics::AmotaResult a;
            a.amota = v.at("amota").get<double>();
            a.amotp = v.at("amotp").get<double>();
            r.per_class.emplace(cls, std::move(a));
        }
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("report: ") + e.what());
    }
    return r;
}

[[nodiscard]] inline metrics::FullReport load_report(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot open '" + path + "'");
    Json j;
    try {
        j = Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw InvalidInput("'" + path + "': invalid JSON: " + e.what());
    }
    return report_from_json(j);
}

[[nodiscard]] inline metrics::FullReport evaluate_records(const std::vector<FrameRecord>& tracks,
                                                          const std::vector<FrameRecord>& gts,
                                                          const metrics::EvalOptions& opt = {}) {
    const auto sequences = build_eval_sequences(tracks, gts);
    return metrics::evaluate(sequences, opt);
}

inline metrics::FullReport run_eval(const std::string& tracks_path, const std::string& gt_path,
                                    const std::string& out_path) {
    const auto tracks = load_records(tracks_path, true);
    const auto gts = load_records(gt_path, true);
    const auto report = evaluate_records(tracks, gts);
    write_file_atomic(out_path, report_to_json(report).dump(2) + "\n");
    return report;
}

} // namespace mvtrack::io
