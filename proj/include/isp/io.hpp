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

#include <filesystem>

#include "json.hpp"

#include "isp/image.hpp"
#include "isp/raw.hpp"

// On-disk formats.
//   raw:   <prefix>.raw  little-endian uint16 mosaic, <prefix>.json sidecar
//   image: <prefix>.f32  little-endian float32 planar (C, H, W), <prefix>.json
//   ppm:   16-bit binary PPM display copy, clamped to [0, 1], gamma 2.2
namespace isp {

void save_raw(const std::filesystem::path& prefix, const RawImage& raw);
RawImage load_raw(const std::filesystem::path& prefix);

nlohmann::json metadata_to_json(const CaptureMetadata& meta);
CaptureMetadata metadata_from_json(const nlohmann::json& j);

namespace detail {
void save_planar(const std::filesystem::path& prefix, ColorSpace space, int height, int width,
                 std::span<const float> hwc);
std::vector<float> load_planar(const std::filesystem::path& prefix, ColorSpace expected, int& height, int& width);
void write_ppm16(const std::filesystem::path& path, int height, int width, std::span<const float> hwc);
} // namespace detail

template <ColorSpace S>
void save_image(const std::filesystem::path& prefix, const Image<S>& img) {
    detail::save_planar(prefix, S, img.height(), img.width(), img.data());
}

// Fails with ValidationError when the file holds a different color space.
template <ColorSpace S>
Image<S> load_image(const std::filesystem::path& prefix) {
    int h = 0, w = 0;
    auto data = detail::load_planar(prefix, S, h, w);
    return Image<S>(h, w, std::move(data));
}

template <ColorSpace S>
void write_ppm(const std::filesystem::path& path, const Image<S>& img) {
    detail::write_ppm16(path, img.height(), img.width(), img.data());
}

// Paths written by save_raw / save_image for `prefix`.
std::filesystem::path sidecar_path(const std::filesystem::path& prefix);
std::filesystem::path raw_data_path(const std::filesystem::path& prefix);
std::filesystem::path image_data_path(const std::filesystem::path& prefix);

} // namespace isp
