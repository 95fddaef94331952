#pragma once

#include "mvtrack/errors.hpp"
#include "mvtrack/geometry/camera.hpp"
#include "mvtrack/io/records.hpp"

#include <fstream>
#include <string>
#include <vector>

namespace mvtrack::io {

using geometry::CameraModel;

/// Camera rig file: a JSON array of
/// {name, intrinsic: 9 numbers row-major, extrinsic: 16 numbers row-major
/// (world to camera), width, height}.
[[nodiscard]] inline std::vector<CameraModel> parse_rig(const Json& j) {
    if (!j.is_array()) throw InvalidInput("rig: expected a JSON array of cameras");
    std::vector<CameraModel> rig;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& c = j[i];
        const std::string at = "cameras[" + std::to_string(i) + "]";
        if (!c.is_object()) throw InvalidInput(at + ": expected an object");
        CameraModel cam;
        cam.name = c.contains("name") && c["name"].is_string() ? c["name"].get<std::string>() : at;
        auto matrix = [&](const char* key, std::size_t n) {
            if (!c.contains(key)) throw InvalidInput(at + "." + key + ": missing");
            const auto v = detail::numbers_at(c[key], 0, at + "." + key);
            if (v.size() != n)
                throw InvalidInput(at + "." + key + ": expected " + std::to_string(n) + " numbers");
            return v;
        };
        const auto k = matrix("intrinsic", 9);
        const auto e = matrix("extrinsic", 16);
        for (int r = 0; r < 3; ++r)
            for (int q = 0; q < 3; ++q) cam.intrinsic(r, q) = k[r * 3 + q];
        for (int r = 0; r < 4; ++r)
            for (int q = 0; q < 4; ++q) cam.extrinsic(r, q) = e[r * 4 + q];
        for (const char* key : {"width", "height"})
            if (!c.contains(key) || !c[key].is_number_integer())
                throw InvalidInput(at + "." + key + ": expected an integer");
        cam.width = c["width"].get<int>();
        cam.height = c["height"].get<int>();
        cam.validate();
        rig.push_back(std::move(cam));
    }
    if (rig.empty()) throw InvalidInput("rig: no cameras");
    return rig;
}

[[nodiscard]] inline Json rig_to_json(const std::vector<CameraModel>& rig) {
    Json out = Json::array();
    for (const auto& cam : rig) {
        Json c;
        c["name"] = cam.name;
        std::vector<double> k, e;
        for (int r = 0; r < 3; ++r)
            for (int q = 0; q < 3; ++q) k.push_back(cam.intrinsic(r, q));
        for (int r = 0; r < 4; ++r)
            for (int q = 0; q < 4; ++q) e.push_back(cam.extrinsic(r, q));
        c["intrinsic"] = k;
        c["extrinsic"] = e;
        c["width"] = cam.width;
        c["height"] = cam.height;
        out.push_back(std::move(c));
    }
    return out;
}

[[nodiscard]] inline std::vector<CameraModel> load_rig(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot open '" + path + "'");
    Json j;
    try {
        j = Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw InvalidInput("'" + path + "': invalid JSON: " + e.what());
    }
    return parse_rig(j);
}

inline void save_rig(const std::string& path, const std::vector<CameraModel>& rig) {
    write_file_atomic(path, rig_to_json(rig).dump(2) + "\n");
}

} // namespace mvtrack::io
