#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "snur/common.hpp"
#include "snur/raster.hpp"

namespace snur {

// "SNUR v1" portable raster container.
//
// 24-byte header, little-endian:
//   magic   "SNUR"  (4 bytes)
//   version u16 = 1
//   dtype   u8     0 = f32, 1 = i32
//   kind    u8     0 = wrapped, 1 = absolute, 2 = coherence, 3 = wrapcount
//   width   u32
//   height  u32
//   reserved u64 = 0
// Payload: row-major values, no compression. Floating rasters are stored as
// f32, so doubles outside f32 range/precision are narrowed on write.

enum class RasterKind : std::uint8_t { wrapped = 0, absolute = 1, coherence = 2, wrapcount = 3 };

using AnyRaster = std::variant<PhaseRaster, CoherenceRaster, WrapCountRaster>;

inline constexpr std::uint32_t kMaxRasterDim = 1u << 20;

inline std::string serialize_raster(const AnyRaster& raster) {
    std::string buf;
    std::uint8_t dtype, kind;
    std::uint32_t w, h;
    std::visit(
        [&](const auto& r) {
            using R = std::decay_t<decltype(r)>;
            w = static_cast<std::uint32_t>(r.width);
            h = static_cast<std::uint32_t>(r.height);
            if constexpr (std::is_same_v<R, PhaseRaster>) {
                dtype = 0;
                kind = r.kind == PhaseKind::wrapped
                           ? static_cast<std::uint8_t>(RasterKind::wrapped)
                           : static_cast<std::uint8_t>(RasterKind::absolute);
            } else if constexpr (std::is_same_v<R, CoherenceRaster>) {
                dtype = 0;
                kind = static_cast<std::uint8_t>(RasterKind::coherence);
            } else {
                dtype = 1;
                kind = static_cast<std::uint8_t>(RasterKind::wrapcount);
            }
        },
        raster);
    buf.append("SNUR", 4);
    detail::put_u16(buf, 1);
    buf.push_back(static_cast<char>(dtype));
    buf.push_back(static_cast<char>(kind));
    detail::put_u32(buf, w);
    detail::put_u32(buf, h);
    detail::put_u64(buf, 0);
    std::visit(
        [&](const auto& r) {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, WrapCountRaster>) {
                buf.append(reinterpret_cast<const char*>(r.values.data()),
                           r.values.size() * sizeof(std::int32_t));
            } else {
                for (double v : r.values) {
                    float f = static_cast<float>(v);
                    buf.append(reinterpret_cast<const char*>(&f), sizeof(float));
                }
            }
        },
        raster);
    return buf;
}

inline AnyRaster deserialize_raster(const std::string& buf) {
    if (buf.size() < 24) throw FormatError(FormatError::Kind::Truncated, "file shorter than header");
    if (buf.compare(0, 4, "SNUR") != 0)
        throw FormatError(FormatError::Kind::BadMagic, "bad magic, expected SNUR");
    std::uint16_t version = detail::get_le<std::uint16_t>(buf.data() + 4);
    if (version != 1)
        throw FormatError(FormatError::Kind::BadVersion,
                          "unsupported SNUR version " + std::to_string(version));
    std::uint8_t dtype = static_cast<std::uint8_t>(buf[6]);
    std::uint8_t kind = static_cast<std::uint8_t>(buf[7]);
    std::uint32_t w = detail::get_le<std::uint32_t>(buf.data() + 8);
    std::uint32_t h = detail::get_le<std::uint32_t>(buf.data() + 12);
    if (dtype > 1) throw FormatError(FormatError::Kind::BadField, "unknown dtype");
    if (kind > 3) throw FormatError(FormatError::Kind::BadField, "unknown raster kind");
    if (w < 2 || h < 2 || w > kMaxRasterDim || h > kMaxRasterDim)
        throw FormatError(FormatError::Kind::DimensionOverflow, "raster dimensions out of range");
    std::size_t count = static_cast<std::size_t>(w) * h;
    std::size_t need = 24 + count * 4;
    if (buf.size() < need)
        throw FormatError(FormatError::Kind::Truncated, "payload shorter than declared dimensions");

    auto read_f32 = [&](std::vector<double>& out) {
        out.resize(count);
        for (std::size_t i = 0; i < count; ++i)
            out[i] = detail::get_le<float>(buf.data() + 24 + i * 4);
    };

    switch (static_cast<RasterKind>(kind)) {
        case RasterKind::wrapped:
        case RasterKind::absolute: {
            if (dtype != 0) throw FormatError(FormatError::Kind::BadField, "phase raster must be f32");
            PhaseRaster r;
            r.width = static_cast<int>(w);
            r.height = static_cast<int>(h);
            r.kind = kind == 0 ? PhaseKind::wrapped : PhaseKind::absolute;
            read_f32(r.values);
            return r;
        }
        case RasterKind::coherence: {
            if (dtype != 0) throw FormatError(FormatError::Kind::BadField, "coherence must be f32");
            CoherenceRaster r;
            r.width = static_cast<int>(w);
            r.height = static_cast<int>(h);
            read_f32(r.values);
            return r;
        }
        case RasterKind::wrapcount: {
            if (dtype != 1) throw FormatError(FormatError::Kind::BadField, "wrapcount must be i32");
            WrapCountRaster r;
            r.width = static_cast<int>(w);
            r.height = static_cast<int>(h);
            r.values.resize(count);
            std::memcpy(r.values.data(), buf.data() + 24, count * 4);
            return r;
        }
    }
    throw FormatError(FormatError::Kind::BadField, "unreachable kind");
}

inline void write_raster(const AnyRaster& raster, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    std::string buf = serialize_raster(raster);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

inline AnyRaster read_raster(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_raster(buf);
}

template <typename R>
R read_raster_as(const std::filesystem::path& path) {
    AnyRaster any = read_raster(path);
    if (auto* r = std::get_if<R>(&any)) return std::move(*r);
    throw FormatError(FormatError::Kind::BadField,
                      "raster at " + path.string() + " has a different kind than expected");
}

// ---- plain-text exports ----------------------------------------------------

template <typename R>
void write_csv(const R& raster, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << "x,y,value\n";
    for (int y = 0; y < raster.height; ++y)
        for (int x = 0; x < raster.width; ++x) f << x << ',' << y << ',' << raster.at(x, y) << '\n';
    if (!f) throw IoError("write failed: " + path.string());
}

// 8-bit PGM with min-max scaling, for quick visual checks only.
template <typename R>
void write_pgm(const R& raster, const std::filesystem::path& path) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (auto v : raster.values) {
        lo = std::min(lo, static_cast<double>(v));
        hi = std::max(hi, static_cast<double>(v));
    }
    double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << "P5\n" << raster.width << ' ' << raster.height << "\n255\n";
    for (auto v : raster.values)
        f.put(static_cast<char>(static_cast<int>((static_cast<double>(v) - lo) * scale)));
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace snur
