#pragma once

#include "mvtrack/errors.hpp"
#include "mvtrack/geometry/box.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mvtrack::io {

using geometry::BoxState;
using Json = nlohmann::ordered_json;

/// One detected (or tracked) object of a frame record.
struct ObjectRecord {
    BoxState box;
    std::string cls;
    double score = 1.0;
    std::optional<std::vector<double>> roi_feature;
    std::optional<std::vector<double>> query_feature;
    std::optional<std::int64_t> track_id;
};

/// One line of a detection or track file.
struct FrameRecord {
    std::string sequence_id;
    double timestamp = 0.0;
    std::optional<std::array<double, 16>> ego_pose;
    std::vector<ObjectRecord> detections;
};

/// Records of one sequence in file order.
struct Sequence {
    std::string id;
    std::vector<FrameRecord> frames;
};

namespace detail {

[[noreturn]] inline void fail(std::size_t line, const std::string& path, const std::string& what) {
    throw ParseError(path + ": " + what, line);
}

inline double number_at(const Json& j, std::size_t line, const std::string& path) {
    if (!j.is_number()) fail(line, path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(line, path, "expected a finite number");
    return v;
}

inline std::vector<double> numbers_at(const Json& j, std::size_t line, const std::string& path) {
    if (!j.is_array()) fail(line, path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number_at(j[i], line, path + "[" + std::to_string(i) + "]"));
    return out;
}

} // namespace detail

[[nodiscard]] inline FrameRecord parse_record(const Json& j, std::size_t line, bool require_track_id = false) {
    using detail::fail;
    if (!j.is_object()) fail(line, "record", "expected a JSON object");
    FrameRecord rec;
    if (!j.contains("sequence_id") || !j["sequence_id"].is_string()) fail(line, "sequence_id", "expected a string");
    rec.sequence_id = j["sequence_id"].get<std::string>();
    if (!j.contains("timestamp")) fail(line, "timestamp", "missing");
    rec.timestamp = detail::number_at(j["timestamp"], line, "timestamp");
    if (j.contains("ego_pose") && !j["ego_pose"].is_null()) {
        const auto pose = detail::numbers_at(j["ego_pose"], line, "ego_pose");
        if (pose.size() != 16) fail(line, "ego_pose", "expected 16 numbers, got " + std::to_string(pose.size()));
        std::array<double, 16> a{};
        std::copy(pose.begin(), pose.end(), a.begin());
        rec.ego_pose = a;
    }
    if (!j.contains("detections") || !j["detections"].is_array()) fail(line, "detections", "expected an array");
    const auto& dets = j["detections"];
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const std::string at = "detections[" + std::to_string(i) + "]";
        const auto& d = dets[i];
        if (!d.is_object()) fail(line, at, "expected an object");
        ObjectRecord obj;
        if (!d.contains("box")) fail(line, at + ".box", "missing");
        const auto box = detail::numbers_at(d["box"], line, at + ".box");
        if (box.size() != BoxState::kSerializedSize)
            fail(line, at + ".box", "expected 10 numbers, got " + std::to_string(box.size()));
        obj.box = BoxState::deserialize(box);
        if (!(obj.box.w > 0 && obj.box.l > 0 && obj.box.h > 0)) fail(line, at + ".box", "dimensions must be positive");
        if (!d.contains("class") || !d["class"].is_string()) fail(line, at + ".class", "expected a string");
        obj.cls = d["class"].get<std::string>();
        if (!d.contains("score")) fail(line, at + ".score", "missing");
        obj.score = detail::number_at(d["score"], line, at + ".score");
        if (obj.score < 0.0 || obj.score > 1.0) fail(line, at + ".score", "must be in [0, 1]");
        if (d.contains("roi_feature") && !d["roi_feature"].is_null())
            obj.roi_feature = detail::numbers_at(d["roi_feature"], line, at + ".roi_feature");
        if (d.contains("query_feature") && !d["query_feature"].is_null())
            obj.query_feature = detail::numbers_at(d["query_feature"], line, at + ".query_feature");
        if (d.contains("track_id") && !d["track_id"].is_null()) {
            if (!d["track_id"].is_number_integer()) fail(line, at + ".track_id", "expected an integer");
            obj.track_id = d["track_id"].get<std::int64_t>();
        } else if (require_track_id) {
            fail(line, at + ".track_id", "missing");
        }
        rec.detections.push_back(std::move(obj));
    }
    return rec;
}

[[nodiscard]] inline Json to_json(const FrameRecord& rec) {
    Json j;
    j["sequence_id"] = rec.sequence_id;
    j["timestamp"] = rec.timestamp;
    if (rec.ego_pose) j["ego_pose"] = *rec.ego_pose;
    Json dets = Json::array();
    for (const auto& d : rec.detections) {
        Json o;
        o["box"] = d.box.serialize();
        o["class"] = d.cls;
        o["score"] = d.score;
        if (d.roi_feature) o["roi_feature"] = *d.roi_feature;
        if (d.query_feature) o["query_feature"] = *d.query_feature;
        if (d.track_id) o["track_id"] = *d.track_id;
        dets.push_back(std::move(o));
    }
    j["detections"] = std::move(dets);
    return j;
}

/// Parses JSON-lines text. Blank lines are skipped. Timestamps must be
/// strictly increasing within each sequence.
[[nodiscard]] inline std::vector<FrameRecord> parse_records(std::istream& is, bool require_track_id = false) {
    std::vector<FrameRecord> out;
    std::map<std::string, double> last_ts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        auto rec = parse_record(j, line_no, require_track_id);
        auto it = last_ts.find(rec.sequence_id);
        if (it != last_ts.end() && !(rec.timestamp > it->second))
            detail::fail(line_no, "timestamp", "not strictly increasing within sequence '" + rec.sequence_id + "'");
        last_ts[rec.sequence_id] = rec.timestamp;
        out.push_back(std::move(rec));
    }
    return out;
}

[[nodiscard]] inline std::vector<FrameRecord> load_records(const std::string& path, bool require_track_id = false) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot open '" + path + "'");
    return parse_records(is, require_track_id);
}

[[nodiscard]] inline std::string dump_records(const std::vector<FrameRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

/// Writes to a sibling temporary file and renames it into place, so a
/// failure never leaves a partial output.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path() && !fs::exists(target.parent_path()))
        throw InvalidInput("output directory '" + target.parent_path().string() + "' does not exist");
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw InvalidInput("cannot open '" + tmp.string() + "' for writing");
        os << content;
        if (!os.flush()) {
            os.close();
            fs::remove(tmp);
            throw InvalidInput("failed writing '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, target);
}

inline void write_records(const std::string& path, const std::vector<FrameRecord>& records) {
    write_file_atomic(path, dump_records(records));
}

/// Groups records by sequence id in order of first appearance.
[[nodiscard]] inline std::vector<Sequence> group_sequences(const std::vector<FrameRecord>& records) {
    std::vector<Sequence> out;
    std::map<std::string, std::size_t> index;
    for (const auto& r : records) {
        auto [it, inserted] = index.try_emplace(r.sequence_id, out.size());
        if (inserted) out.push_back({r.sequence_id, {}});
        out[it->second].frames.push_back(r);
    }
    return out;
}

/// Ego pose (vehicle -> world, row-major 4x4) applied to every box: centre
/// transformed, heading and planar velocity rotated by the pose yaw.
[[nodiscard]] inline FrameRecord to_world(const FrameRecord& rec) {
    if (!rec.ego_pose) return rec;
    const Eigen::Matrix4d pose = Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>>(rec.ego_pose->data());
    const Eigen::Matrix3d rot = pose.topLeftCorner<3, 3>();
    const double pose_yaw = std::atan2(rot(1, 0), rot(0, 0));
    const double c = std::cos(pose_yaw), s = std::sin(pose_yaw);
    FrameRecord out = rec;
    out.ego_pose.reset();
    for (auto& d : out.detections) {
        auto& b = d.box;
        const Eigen::Vector3d p = rot * b.center() + pose.topRightCorner<3, 1>();
        b.cx = p.x();
        b.cy = p.y();
        b.cz = p.z();
        const double cy = b.cos_yaw, sy = b.sin_yaw;
        b.cos_yaw = c * cy - s * sy;
        b.sin_yaw = s * cy + c * sy;
        const double vx = b.vx, vy = b.vy;
        b.vx = c * vx - s * vy;
        b.vy = s * vx + c * vy;
    }
    return out;
}

} // namespace mvtrack::io
