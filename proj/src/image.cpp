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

#include "isp/image.hpp"

namespace isp {

std::string to_string(ColorSpace s) {
    switch (s) {
    case ColorSpace::CameraRGB: return "camera_rgb";
    case ColorSpace::XYZ: return "xyz";
    case ColorSpace::SRGB: return "srgb";
    }
    return "?";
}

ColorSpace color_space_from_string(const std::string& s) {
    for (auto c : {ColorSpace::CameraRGB, ColorSpace::XYZ, ColorSpace::SRGB}) {
        if (to_string(c) == s) return c;
    }
    throw ValidationError("unknown color space '" + s + "'");
}

namespace detail {

std::vector<float> apply_matrix(std::span<const float> hwc, const Mat3& m) {
    std::vector<float> out(hwc.size());
    for (std::size_t i = 0; i + 2 < hwc.size(); i += 3) {
        const double a = hwc[i], b = hwc[i + 1], c = hwc[i + 2];
        for (int r = 0; r < 3; ++r) {
            out[i + r] = static_cast<float>(m[r * 3] * a + m[r * 3 + 1] * b + m[r * 3 + 2] * c);
        }
    }
    return out;
}

std::vector<float> hwc_to_chw(std::span<const float> hwc, int height, int width) {
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    std::vector<float> out(plane * 3);
    for (std::size_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c) out[c * plane + p] = hwc[p * 3 + c];
    return out;
}

std::vector<float> chw_to_hwc(std::span<const float> chw, int height, int width) {
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    std::vector<float> out(plane * 3);
    for (std::size_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c) out[p * 3 + c] = chw[c * plane + p];
    return out;
}

} // namespace detail

Mat3 camera_to_xyz_matrix(const CaptureMetadata& meta) {
    Mat3 avg{};
    for (int i = 0; i < 9; ++i) avg[i] = 0.5 * (meta.color_matrix_1[i] + meta.color_matrix_2[i]);
    return inverse(avg);
}

Mat3 srgb_to_xyz_matrix() {
    static const Mat3 m = inverse(kXyzToSrgb);
    return m;
}

XyzImage camera_rgb_to_xyz(const CameraImage& img, const CaptureMetadata& meta) {
    return {img.height(), img.width(), detail::apply_matrix(img.data(), camera_to_xyz_matrix(meta))};
}

CameraImage xyz_to_camera_rgb(const XyzImage& img, const CaptureMetadata& meta) {
    return {img.height(), img.width(), detail::apply_matrix(img.data(), inverse(camera_to_xyz_matrix(meta)))};
}

SrgbImage xyz_to_srgb(const XyzImage& img) {
    return {img.height(), img.width(), detail::apply_matrix(img.data(), kXyzToSrgb)};
}

XyzImage srgb_to_xyz(const SrgbImage& img) {
    return {img.height(), img.width(), detail::apply_matrix(img.data(), srgb_to_xyz_matrix())};
}

} // namespace isp
