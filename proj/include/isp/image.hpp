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

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "isp/error.hpp"
#include "isp/raw.hpp"
#include "isp/tensor.hpp"

namespace isp {

enum class ColorSpace { CameraRGB, XYZ, SRGB };

std::string to_string(ColorSpace s);
ColorSpace color_space_from_string(const std::string& s);

// H x W x 3 float image tagged with its color space at compile time. Values
// are nominally in [0, 1] with headroom above; never NaN or infinite.
template <ColorSpace S>
class Image {
public:
    static constexpr ColorSpace space = S;

    Image() = default;

    Image(int height, int width) : height_(height), width_(width) {
        check_extents();
        data_.assign(static_cast<std::size_t>(height) * width * 3, 0.0f);
    }

    Image(int height, int width, std::vector<float> hwc) : height_(height), width_(width), data_(std::move(hwc)) {
        check_extents();
        if (data_.size() != static_cast<std::size_t>(height) * width * 3) {
            throw ShapeError("image data holds " + std::to_string(data_.size()) + " values, expected " +
                             std::to_string(static_cast<std::size_t>(height) * width * 3));
        }
        for (float v : data_) {
            if (!std::isfinite(v)) throw NumericError("image data contains a non-finite value");
        }
    }

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }
    bool empty() const { return data_.empty(); }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    float& at(int y, int x, int c) { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }
    float at(int y, int x, int c) const { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }

private:
    void check_extents() const {
        if (height_ <= 0 || width_ <= 0) {
            throw ShapeError("image extents must be positive, got " + std::to_string(height_) + "x" +
                             std::to_string(width_));
        }
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

using CameraImage = Image<ColorSpace::CameraRGB>;
using XyzImage = Image<ColorSpace::XYZ>;
using SrgbImage = Image<ColorSpace::SRGB>;

// Linear D65 XYZ -> sRGB (IEC 61966-2-1).
inline constexpr Mat3 kXyzToSrgb{3.2404542, -1.5371385, -0.4985314, -0.9692660, 1.8760108,
                                 0.0415560, 0.0556434,  -0.2040259, 1.0572252};

// C_xyz: inverse of the elementwise mean of the two metadata matrices.
Mat3 camera_to_xyz_matrix(const CaptureMetadata& meta);
Mat3 srgb_to_xyz_matrix();

XyzImage camera_rgb_to_xyz(const CameraImage& img, const CaptureMetadata& meta);
CameraImage xyz_to_camera_rgb(const XyzImage& img, const CaptureMetadata& meta);
SrgbImage xyz_to_srgb(const XyzImage& img);
XyzImage srgb_to_xyz(const SrgbImage& img);

namespace detail {
std::vector<float> apply_matrix(std::span<const float> hwc, const Mat3& m);
std::vector<float> hwc_to_chw(std::span<const float> hwc, int height, int width);
std::vector<float> chw_to_hwc(std::span<const float> chw, int height, int width);
} // namespace detail

// [1, 3, H, W] tensor view of an image.
template <ColorSpace S>
ad::Tensor<float> to_tensor(const Image<S>& img, bool requires_grad = false) {
    return ad::Tensor<float>({1, 3, img.height(), img.width()},
                             detail::hwc_to_chw(img.data(), img.height(), img.width()), requires_grad);
}

template <ColorSpace S>
Image<S> image_from_tensor(const ad::Tensor<float>& t) {
    if (t.ndim() != 4 || t.dim(0) != 1 || t.dim(1) != 3) {
        throw ShapeError("expected a [1, 3, H, W] tensor, got " + ad::to_string(t.shape()));
    }
    return Image<S>(t.dim(2), t.dim(3), detail::chw_to_hwc(t.data(), t.dim(2), t.dim(3)));
}

} // namespace isp
