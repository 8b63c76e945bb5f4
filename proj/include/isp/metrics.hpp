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

#include <array>
#include <limits>
#include <span>

#include "isp/image.hpp"

// Evaluation metrics on H x W x 3 images. Computed in double.
namespace isp::metrics {

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();
inline constexpr std::array<double, 3> kLumaWeights{0.2126, 0.7152, 0.0722};

struct SsimOptions {
    double k1 = 0.01;
    double k2 = 0.03;
    int window = 11;
    double sigma = 1.5;
};

// Images are HWC with 3 channels; extents are given in pixels.
double psnr(std::span<const float> pred, std::span<const float> gt, double peak = 1.0);
double ssim(std::span<const float> pred, std::span<const float> gt, int height, int width,
            const SsimOptions& opts = {});
// Mean color angle in degrees over pixels whose groundtruth luminance lies in
// (lo, hi); throws NumericError when no pixel qualifies.
double color_error(std::span<const float> pred, std::span<const float> gt, double lo = 0.05, double hi = 0.95);
// L1 distance between normalized luminance histograms of the clamped images.
double histogram_divergence(std::span<const float> before, std::span<const float> after, int bins = 256);

template <ColorSpace S>
double psnr(const Image<S>& pred, const Image<S>& gt, double peak = 1.0) {
    return psnr(pred.data(), gt.data(), peak);
}

template <ColorSpace S>
double ssim(const Image<S>& pred, const Image<S>& gt, const SsimOptions& opts = {}) {
    if (pred.height() != gt.height() || pred.width() != gt.width()) throw ShapeError("ssim: image extents differ");
    return ssim(pred.data(), gt.data(), pred.height(), pred.width(), opts);
}

inline double color_error(const SrgbImage& pred, const SrgbImage& gt) { return color_error(pred.data(), gt.data()); }

template <ColorSpace S>
double histogram_divergence(const Image<S>& before, const Image<S>& after, int bins = 256) {
    return histogram_divergence(before.data(), after.data(), bins);
}

} // namespace isp::metrics
