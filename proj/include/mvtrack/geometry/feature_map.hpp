#pragma once

#include "mvtrack/errors.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace mvtrack::geometry {

/// Dense H x W x C grid stored row-major with channels innermost.
struct FeatureMap {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {
        if (h <= 0 || w <= 0 || c <= 0) throw InvalidInput("feature map dimensions must be positive");
    }

    [[nodiscard]] std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    [[nodiscard]] float at(int y, int x, int c) const { return data[index(y, x, c)]; }
    float& at(int y, int x, int c) { return data[index(y, x, c)]; }

    void validate() const {
        if (height <= 0 || width <= 0 || channels <= 0)
            throw InvalidInput("feature map dimensions must be positive");
        if (data.size() != static_cast<std::size_t>(height) * width * channels)
            throw InvalidInput("feature map data size does not match its shape");
        for (float v : data)
            if (!std::isfinite(v)) throw InvalidInput("feature map holds a non-finite value");
    }
};

/// Pooled RoI features, out_h x out_w x C, same layout as FeatureMap.
struct PooledGrid {
    int out_h = 0;
    int out_w = 0;
    int channels = 0;
    std::vector<float> data;

    PooledGrid() = default;
    PooledGrid(int h, int w, int c)
        : out_h(h), out_w(w), channels(c), data(static_cast<std::size_t>(h) * w * c, 0.0f) {}

    [[nodiscard]] std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * out_w + x) * channels + c;
    }
    [[nodiscard]] float at(int y, int x, int c) const { return data[index(y, x, c)]; }
    [[nodiscard]] bool same_shape(const PooledGrid& o) const {
        return out_h == o.out_h && out_w == o.out_w && channels == o.channels;
    }
    bool operator==(const PooledGrid&) const = default;
};

namespace detail {

inline void put_u32_le(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32_le(const unsigned char* b) {
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

} // namespace detail

/// Binary layout: u32 height, u32 width, u32 channels (little-endian), then
/// height*width*channels little-endian float32 values, row-major.
inline void write_feature_map(const std::string& path, const FeatureMap& fm) {
    static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
    fm.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidInput("cannot open '" + path + "' for writing");
    detail::put_u32_le(os, static_cast<std::uint32_t>(fm.height));
    detail::put_u32_le(os, static_cast<std::uint32_t>(fm.width));
    detail::put_u32_le(os, static_cast<std::uint32_t>(fm.channels));
    os.write(reinterpret_cast<const char*>(fm.data.data()),
             static_cast<std::streamsize>(fm.data.size() * sizeof(float)));
    if (!os) throw InvalidInput("failed writing '" + path + "'");
}

[[nodiscard]] inline FeatureMap read_feature_map(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidInput("cannot open '" + path + "'");
    unsigned char header[12];
    if (!is.read(reinterpret_cast<char*>(header), 12)) throw ParseError("truncated feature map header");
    FeatureMap fm;
    fm.height = static_cast<int>(detail::get_u32_le(header));
    fm.width = static_cast<int>(detail::get_u32_le(header + 4));
    fm.channels = static_cast<int>(detail::get_u32_le(header + 8));
    if (fm.height <= 0 || fm.width <= 0 || fm.channels <= 0)
        throw ParseError("feature map header has a zero dimension");
    fm.data.resize(static_cast<std::size_t>(fm.height) * fm.width * fm.channels);
    if (!is.read(reinterpret_cast<char*>(fm.data.data()),
                 static_cast<std::streamsize>(fm.data.size() * sizeof(float))))
        throw ParseError("truncated feature map payload");
    fm.validate();
    return fm;
}

} // namespace mvtrack::geometry
