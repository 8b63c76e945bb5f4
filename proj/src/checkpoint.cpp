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

#include "isp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace isp::ad {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "isp-checkpoint";
constexpr int kVersion = 1;

fs::path with_suffix(const fs::path& prefix, const char* suffix) {
    return fs::path(prefix.string() + suffix);
}

void to_little_endian(std::vector<float>& v) {
    if constexpr (std::endian::native == std::endian::big) {
        for (float& f : v) {
            auto u = std::bit_cast<std::uint32_t>(f);
            u = ((u & 0xffu) << 24) | ((u & 0xff00u) << 8) | ((u >> 8) & 0xff00u) | (u >> 24);
            f = std::bit_cast<float>(u);
        }
    }
}

} // namespace

bool checkpoint_exists(const fs::path& prefix) {
    return fs::exists(with_suffix(prefix, ".json")) && fs::exists(with_suffix(prefix, ".bin"));
}

void save_checkpoint(const fs::path& prefix, const ParamSet<float>& params, const nlohmann::json& metadata) {
    if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
    const fs::path blob_path = with_suffix(prefix, ".bin");

    nlohmann::json manifest;
    manifest["format"] = kFormat;
    manifest["version"] = kVersion;
    manifest["dtype"] = "float32";
    manifest["endianness"] = "little";
    manifest["blob"] = blob_path.filename().string();
    manifest["metadata"] = metadata;
    manifest["params"] = nlohmann::json::array();

    std::ofstream blob(blob_path, std::ios::binary | std::ios::trunc);
    if (!blob) throw IoError("cannot write checkpoint blob " + blob_path.string());

    std::uint64_t offset = 0;
    for (const auto& e : params) {
        std::vector<float> bytes(e.tensor.data().begin(), e.tensor.data().end());
        to_little_endian(bytes);
        blob.write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size() * sizeof(float)));
        manifest["params"].push_back({{"name", e.name},
                                      {"shape", e.tensor.shape()},
                                      {"offset", offset},
                                      {"nbytes", bytes.size() * sizeof(float)}});
        offset += bytes.size() * sizeof(float);
    }
    if (!blob) throw IoError("failed writing checkpoint blob " + blob_path.string());

    const fs::path manifest_path = with_suffix(prefix, ".json");
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint manifest " + manifest_path.string());
    out << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const fs::path& prefix) {
    const fs::path manifest_path = with_suffix(prefix, ".json");
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open checkpoint manifest " + manifest_path.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint manifest " + manifest_path.string() + ": " + e.what());
    }
    if (manifest.value("format", "") != kFormat || manifest.value("version", 0) != kVersion) {
        throw IoError("unsupported checkpoint format in " + manifest_path.string());
    }

    const fs::path blob_path = manifest_path.parent_path() / manifest.at("blob").get<std::string>();
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw IoError("cannot open checkpoint blob " + blob_path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(blob)), std::istreambuf_iterator<char>());

    Checkpoint ck;
    ck.metadata = manifest.value("metadata", nlohmann::json::object());
    for (const auto& p : manifest.at("params")) {
        Shape shape = p.at("shape").get<Shape>();
        const auto offset = p.at("offset").get<std::uint64_t>();
        const auto nbytes = p.at("nbytes").get<std::uint64_t>();
        if (nbytes != numel(shape) * sizeof(float) || offset + nbytes > bytes.size()) {
            throw IoError("checkpoint entry '" + p.at("name").get<std::string>() + "' is inconsistent with blob " +
                          blob_path.string());
        }
        std::vector<float> data(numel(shape));
        std::memcpy(data.data(), bytes.data() + offset, nbytes);
        to_little_endian(data); // byte swap is its own inverse
        ck.params.add(p.at("name").get<std::string>(), Tensor<float>(std::move(shape), std::move(data)));
    }
    return ck;
}

} // namespace isp::ad
