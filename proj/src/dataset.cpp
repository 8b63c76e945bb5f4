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

#include "isp/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <zlib.h>

#include "isp/io.hpp"
#include "isp/json_fields.hpp"

namespace isp {

namespace fs = std::filesystem;
using nlohmann::json;

void SampleTriplet::validate() const {
    auto fail = [&](const std::string& why) {
        throw DataError(DataError::Kind::InvariantViolation, "scene '" + scene_id + "': " + why);
    };
    try {
        raw.validate();
    } catch (const ValidationError& e) {
        fail(e.what());
    }
    if (g_rest.height() != raw.height || g_rest.width() != raw.width) fail("g_rest extents differ from the raw");
    if (g_enh.height() != raw.height || g_enh.width() != raw.width) fail("g_enh extents differ from the raw");
}

std::vector<SampleTriplet> Dataset::split(const std::string& name) const {
    std::vector<SampleTriplet> out;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        if (manifest.scenes[i].split == name) out.push_back(scenes[i]);
    }
    return out;
}

std::string crc32_hex(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError(DataError::Kind::MissingFile, "missing file " + file.string());
    uLong crc = ::crc32(0L, Z_NULL, 0);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto n = in.gcount();
        if (n > 0) crc = ::crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(n));
    }
    char hex[9];
    std::snprintf(hex, sizeof hex, "%08lx", static_cast<unsigned long>(crc));
    return hex;
}

SceneRecord write_scene(const fs::path& dir, const SampleTriplet& t, const std::string& split,
                        const json& provenance) {
    if (split != "train" && split != "test") throw ValidationError("split must be 'train' or 'test'");
    t.validate();
    SceneRecord r;
    r.scene_id = t.scene_id;
    r.split = split;
    r.raw = t.scene_id + "_raw";
    r.g_rest = t.scene_id + "_grest";
    r.g_enh = t.scene_id + "_genh";
    r.provenance = provenance;
    save_raw(dir / r.raw, t.raw);
    save_image(dir / r.g_rest, t.g_rest);
    save_image(dir / r.g_enh, t.g_enh);
    for (const fs::path& p : {raw_data_path(dir / r.raw), sidecar_path(dir / r.raw), image_data_path(dir / r.g_rest),
                              sidecar_path(dir / r.g_rest), image_data_path(dir / r.g_enh),
                              sidecar_path(dir / r.g_enh)}) {
        r.checksums.emplace_back(p.filename().string(), crc32_hex(p));
    }
    std::ranges::sort(r.checksums); // matches the key order of the JSON object
    return r;
}

namespace {

json record_to_json(const SceneRecord& r) {
    json sums = json::object();
    for (const auto& [name, crc] : r.checksums) sums[name] = crc;
    return {{"scene_id", r.scene_id}, {"split", r.split},     {"raw", r.raw},           {"g_rest", r.g_rest},
            {"g_enh", r.g_enh},       {"checksums", sums},    {"provenance", r.provenance}};
}

SceneRecord record_from_json(const json& j, const std::string& ctx) {
    JsonFields f(j, ctx);
    SceneRecord r;
    f.get("scene_id", r.scene_id, true);
    f.get("split", r.split, true);
    f.get("raw", r.raw, true);
    f.get("g_rest", r.g_rest, true);
    f.get("g_enh", r.g_enh, true);
    const json& sums = f.raw("checksums");
    if (!sums.is_object()) throw ValidationError("field '" + f.path("checksums") + "' must be an object");
    for (auto it = sums.begin(); it != sums.end(); ++it) {
        if (!it.value().is_string()) throw ValidationError("checksum for '" + it.key() + "' must be a string");
        r.checksums.emplace_back(it.key(), it.value().get<std::string>());
    }
    if (f.has("provenance")) r.provenance = f.raw("provenance");
    f.finish();
    if (r.split != "train" && r.split != "test") {
        throw ValidationError("field '" + f.path("split") + "' must be 'train' or 'test'");
    }
    return r;
}

} // namespace

void save_dataset(const Manifest& m, const fs::path& path) {
    json j;
    j["format"] = kManifestFormat;
    j["version"] = kManifestVersion;
    j["generator"] = m.generator;
    j["scenes"] = json::array();
    for (const auto& r : m.scenes) j["scenes"].push_back(record_to_json(r));
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing manifest " + path.string());
}

Manifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(DataError::Kind::MissingFile, "missing file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(DataError::Kind::InvariantViolation, "malformed manifest " + path.string() + ": " + e.what());
    }
    try {
        JsonFields f(j, "manifest");
        std::string format;
        int version = 0;
        f.get("format", format, true);
        f.get("version", version, true);
        if (format != kManifestFormat || version != kManifestVersion) {
            throw ValidationError("unsupported manifest format '" + format + "' version " + std::to_string(version));
        }
        Manifest m;
        if (f.has("generator")) m.generator = f.raw("generator");
        const json& scenes = f.raw("scenes");
        if (!scenes.is_array()) throw ValidationError("field 'manifest.scenes' must be an array");
        for (std::size_t i = 0; i < scenes.size(); ++i) {
            m.scenes.push_back(record_from_json(scenes[i], "manifest.scenes[" + std::to_string(i) + "]"));
        }
        f.finish();
        std::vector<std::string> ids;
        for (const auto& r : m.scenes) ids.push_back(r.scene_id);
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
            throw ValidationError("duplicate scene_id in manifest");
        }
        return m;
    } catch (const ValidationError& e) {
        throw DataError(DataError::Kind::InvariantViolation, path.string() + ": " + e.what());
    }
}

Dataset load_dataset(const fs::path& path) {
    Dataset d;
    d.root = path.has_parent_path() ? path.parent_path() : fs::path(".");
    d.manifest = load_manifest(path);
    for (const auto& r : d.manifest.scenes) {
        const std::vector<fs::path> required{raw_data_path(d.root / r.raw),      sidecar_path(d.root / r.raw),
                                             image_data_path(d.root / r.g_rest), sidecar_path(d.root / r.g_rest),
                                             image_data_path(d.root / r.g_enh),  sidecar_path(d.root / r.g_enh)};
        for (const auto& p : required) {
            if (!fs::exists(p)) throw DataError(DataError::Kind::MissingFile, "missing file " + p.string());
            const std::string name = p.filename().string();
            const auto it = std::find_if(r.checksums.begin(), r.checksums.end(),
                                         [&](const auto& c) { return c.first == name; });
            if (it == r.checksums.end()) {
                throw DataError(DataError::Kind::InvariantViolation,
                                "scene '" + r.scene_id + "' has no checksum for " + name);
            }
            const std::string actual = crc32_hex(p);
            if (actual != it->second) {
                throw DataError(DataError::Kind::ChecksumMismatch, "checksum mismatch for " + p.string() +
                                                                       ": manifest " + it->second + ", file " + actual);
            }
        }
        SampleTriplet t;
        t.scene_id = r.scene_id;
        try {
            t.raw = load_raw(d.root / r.raw);
            t.g_rest = load_image<ColorSpace::XYZ>(d.root / r.g_rest);
            t.g_enh = load_image<ColorSpace::SRGB>(d.root / r.g_enh);
        } catch (const DataError&) {
            throw;
        } catch (const Error& e) {
            throw DataError(DataError::Kind::InvariantViolation, "scene '" + r.scene_id + "': " + e.what());
        }
        t.validate();
        d.scenes.push_back(std::move(t));
    }
    return d;
}

} // namespace isp
