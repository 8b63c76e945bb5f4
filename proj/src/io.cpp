// Copyright (c) 2026 The twostage-isp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "isp/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "isp/json_fields.hpp"

namespace isp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path with_suffix(const fs::path& prefix, const char* suffix) { return fs::path(prefix.string() + suffix); }

template <typename U>
U byteswap(U v) {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out = static_cast<U>((out << 8) | (v & 0xff));
        v = static_cast<U>(v >> 8);
    }
    return out;
}

template <typename V, typename U>
void write_le(std::ostream& out, std::span<const V> values) {
    static_assert(sizeof(V) == sizeof(U));
    std::vector<U> buf(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        buf[i] = std::bit_cast<U>(values[i]);
        if constexpr (std::endian::native == std::endian::big) buf[i] = byteswap(buf[i]);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(U)));
}

template <typename V, typename U>
std::vector<V> read_le(const fs::path& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<U> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * sizeof(U)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(U))) {
        throw IoError(path.string() + " is truncated: expected " + std::to_string(count * sizeof(U)) + " bytes");
    }
    in.peek();
    if (!in.eof()) throw IoError(path.string() + " has trailing bytes");
    std::vector<V> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        U u = buf[i];
        if constexpr (std::endian::native == std::endian::big) u = byteswap(u);
        out[i] = std::bit_cast<V>(u);
    }
    return out;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// Sidecar parse errors are data problems rather than user input errors.
template <typename F>
auto reading(const fs::path& path, F&& f) {
    try {
        return f();
    } catch (const ValidationError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

} // namespace

fs::path sidecar_path(const fs::path& prefix) { return with_suffix(prefix, ".json"); }
fs::path raw_data_path(const fs::path& prefix) { return with_suffix(prefix, ".raw"); }
fs::path image_data_path(const fs::path& prefix) { return with_suffix(prefix, ".f32"); }

json metadata_to_json(const CaptureMetadata& m) {
    json j;
    j["color_matrix_1"] = m.color_matrix_1;
    j["color_matrix_2"] = m.color_matrix_2;
    if (m.wb_gains) j["wb_gains"] = *m.wb_gains;
    if (m.vignette_gain) j["vignette_gain"] = *m.vignette_gain;
    json bad = json::array();
    for (const auto& p : m.bad_pixels) bad.push_back({p.y, p.x});
    j["bad_pixels"] = bad;
    return j;
}

CaptureMetadata metadata_from_json(const json& j) {
    JsonFields f(j, "metadata");
    CaptureMetadata m;
    f.get("color_matrix_1", m.color_matrix_1, true);
    f.get("color_matrix_2", m.color_matrix_2, true);
    if (f.has("wb_gains")) {
        std::array<double, 3> g{};
        f.get("wb_gains", g);
        m.wb_gains = g;
    }
    if (f.has("vignette_gain")) {
        std::vector<float> v;
        f.get("vignette_gain", v);
        m.vignette_gain = std::move(v);
    }
    std::vector<std::array<int, 2>> bad;
    f.get("bad_pixels", bad);
    for (const auto& b : bad) m.bad_pixels.push_back({b[0], b[1]});
    f.finish();
    return m;
}

void save_raw(const fs::path& prefix, const RawImage& raw) {
    raw.validate();
    ensure_parent(prefix);
    const fs::path data = raw_data_path(prefix);
    {
        std::ofstream out(data, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + data.string());
        write_le<std::uint16_t, std::uint16_t>(out, std::span<const std::uint16_t>(raw.cfa));
        if (!out) throw IoError("failed writing " + data.string());
    }
    json j;
    j["format"] = "isp-raw";
    j["version"] = 1;
    j["data"] = data.filename().string();
    j["height"] = raw.height;
    j["width"] = raw.width;
    j["pattern"] = to_string(raw.pattern);
    j["black_level"] = raw.black_level;
    j["white_level"] = raw.white_level;
    j["metadata"] = metadata_to_json(raw.metadata);
    write_json(sidecar_path(prefix), j);
}

RawImage load_raw(const fs::path& prefix) {
    const fs::path side = sidecar_path(prefix);
    const json j = read_json(side);
    RawImage raw;
    std::string data_name;
    reading(side, [&] {
        JsonFields f(j, "");
        std::string format, pattern;
        int version = 0;
        f.get("format", format, true);
        f.get("version", version, true);
        if (format != "isp-raw" || version != 1) throw ValidationError("not an isp-raw v1 sidecar");
        f.get("data", data_name, true);
        f.get("height", raw.height, true);
        f.get("width", raw.width, true);
        f.get("pattern", pattern, true);
        raw.pattern = cfa_pattern_from_string(pattern);
        f.get("black_level", raw.black_level, true);
        f.get("white_level", raw.white_level, true);
        raw.metadata = metadata_from_json(f.raw("metadata"));
        f.finish();
        if (raw.height <= 0 || raw.width <= 0) throw ValidationError("extents must be positive");
        return 0;
    });
    const fs::path data = prefix.has_parent_path() ? prefix.parent_path() / data_name : fs::path(data_name);
    raw.cfa = read_le<std::uint16_t, std::uint16_t>(data, static_cast<std::size_t>(raw.height) * raw.width);
    reading(side, [&] {
        raw.validate();
        return 0;
    });
    return raw;
}

namespace detail {

void save_planar(const fs::path& prefix, ColorSpace space, int height, int width, std::span<const float> hwc) {
    ensure_parent(prefix);
    const fs::path data = image_data_path(prefix);
    {
        std::ofstream out(data, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + data.string());
        const auto chw = hwc_to_chw(hwc, height, width);
        write_le<float, std::uint32_t>(out, std::span<const float>(chw));
        if (!out) throw IoError("failed writing " + data.string());
    }
    json j;
    j["format"] = "isp-image";
    j["version"] = 1;
    j["data"] = data.filename().string();
    j["layout"] = "planar_chw";
    j["dtype"] = "float32";
    j["height"] = height;
    j["width"] = width;
    j["channels"] = 3;
    j["space"] = to_string(space);
    write_json(sidecar_path(prefix), j);
}

std::vector<float> load_planar(const fs::path& prefix, ColorSpace expected, int& height, int& width) {
    const fs::path side = sidecar_path(prefix);
    const json j = read_json(side);
    std::string data_name, space;
    reading(side, [&] {
        JsonFields f(j, "");
        std::string format, layout, dtype;
        int version = 0, channels = 0;
        f.get("format", format, true);
        f.get("version", version, true);
        if (format != "isp-image" || version != 1) throw ValidationError("not an isp-image v1 sidecar");
        f.get("data", data_name, true);
        f.get("layout", layout, true);
        f.get("dtype", dtype, true);
        f.get("height", height, true);
        f.get("width", width, true);
        f.get("channels", channels, true);
        f.get("space", space, true);
        f.finish();
        if (layout != "planar_chw" || dtype != "float32" || channels != 3) {
            throw ValidationError("unsupported layout, dtype or channel count");
        }
        if (height <= 0 || width <= 0) throw ValidationError("extents must be positive");
        return 0;
    });
    const ColorSpace found = color_space_from_string(space);
    if (found != expected) {
        throw ValidationError(prefix.string() + " holds a " + space + " image, expected " + to_string(expected));
    }
    const fs::path data = prefix.has_parent_path() ? prefix.parent_path() / data_name : fs::path(data_name);
    auto chw = read_le<float, std::uint32_t>(data, static_cast<std::size_t>(height) * width * 3);
    return chw_to_hwc(chw, height, width);
}

void write_ppm16(const fs::path& path, int height, int width, std::span<const float> hwc) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P6\n" << width << ' ' << height << "\n65535\n";
    std::vector<unsigned char> buf(hwc.size() * 2);
    for (std::size_t i = 0; i < hwc.size(); ++i) {
        const double v = std::pow(std::clamp(static_cast<double>(hwc[i]), 0.0, 1.0), 1.0 / 2.2);
        const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
        buf[2 * i] = static_cast<unsigned char>(q >> 8); // PPM samples are big-endian
        buf[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace detail

} // namespace isp
