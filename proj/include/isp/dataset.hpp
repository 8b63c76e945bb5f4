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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "isp/image.hpp"
#include "isp/raw.hpp"

// Dataset container: a JSON manifest listing scene triplets stored in the raw
// and image formats, with crc32 checksums and an explicit split per scene.
namespace isp {

struct SampleTriplet {
    std::string scene_id;
    RawImage raw;
    XyzImage g_rest;
    SrgbImage g_enh;

    // Extents of all three agree; throws DataError(InvariantViolation).
    void validate() const;
};

struct SceneRecord {
    std::string scene_id;
    std::string split; // "train" or "test"
    std::string raw;   // file prefixes relative to the manifest directory
    std::string g_rest;
    std::string g_enh;
    std::vector<std::pair<std::string, std::string>> checksums; // file name -> crc32 hex
    nlohmann::json provenance = nlohmann::json::object();

    bool operator==(const SceneRecord&) const = default;
};

struct Manifest {
    nlohmann::json generator = nlohmann::json::object(); // synthesis config, if any
    std::vector<SceneRecord> scenes;

    bool operator==(const Manifest&) const = default;
};

struct Dataset {
    std::filesystem::path root;
    Manifest manifest;
    std::vector<SampleTriplet> scenes; // parallel to manifest.scenes

    std::vector<SampleTriplet> split(const std::string& name) const;
};

inline constexpr const char* kManifestFormat = "isp-dataset";
inline constexpr int kManifestVersion = 1;

std::string crc32_hex(const std::filesystem::path& file);

// Writes the triplet files under `dir` and returns the record with checksums.
SceneRecord write_scene(const std::filesystem::path& dir, const SampleTriplet& t, const std::string& split,
                        const nlohmann::json& provenance);

void save_dataset(const Manifest& manifest, const std::filesystem::path& path);

// Reads the manifest and every scene it lists. Missing files, checksum
// mismatches and invariant violations raise DataError of the matching kind.
Dataset load_dataset(const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path); // structure only, no file checks

} // namespace isp
