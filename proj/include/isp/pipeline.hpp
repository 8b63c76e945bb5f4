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
#include <optional>

#include "json.hpp"

#include "isp/image.hpp"
#include "isp/losses.hpp"
#include "isp/prep.hpp"
#include "isp/raw.hpp"
#include "isp/unet.hpp"

// raw -> prepare -> C_xyz -> Restore-Net -> C_srgb -> Enhance-Net.
namespace isp {

struct PipelineSpec {
    nn::UNetSpec restore = nn::UNetSpec::restore();
    nn::UNetSpec enhance = nn::UNetSpec::enhance();

    void validate() const;
    bool operator==(const PipelineSpec&) const = default;
};

nlohmann::json to_json(const PipelineSpec& spec);
PipelineSpec pipeline_spec_from_json(const nlohmann::json& j, const std::string& context = "model");

struct IspModel {
    PipelineSpec spec;
    nn::ModuleParams<float> restore; // theta1
    nn::ModuleParams<float> enhance; // theta2
};

// The two modules draw from independent streams derived from `seed`.
IspModel build_model(const PipelineSpec& spec, std::uint64_t seed);

// Differentiable stages on [1, 3, H, W] tensors; tags are checked at runtime.
template <typename T>
TaggedTensor<T> restore(ad::Tape<T>& tape, const TaggedTensor<T>& xyz, const nn::ModuleParams<T>& theta1,
                        const nn::UNetSpec& spec);
template <typename T>
TaggedTensor<T> to_srgb(ad::Tape<T>& tape, const TaggedTensor<T>& xyz);
template <typename T>
TaggedTensor<T> enhance(ad::Tape<T>& tape, const TaggedTensor<T>& srgb, const nn::ModuleParams<T>& theta2,
                        const nn::UNetSpec& spec);

// Inference on images. Extents must be multiples of the network's
// extent_multiple(); run_full pads as needed.
XyzImage restore(const XyzImage& xyz, const nn::ModuleParams<float>& theta1, const nn::UNetSpec& spec);
SrgbImage enhance(const SrgbImage& srgb, const nn::ModuleParams<float>& theta2, const nn::UNetSpec& spec);

struct FullRun {
    XyzImage raw_xyz;   // prepared input in XYZ
    XyzImage rest_xyz;  // Restore-Net output
    SrgbImage enh_srgb; // final output
};

// Inputs whose extents are not multiples of 2^(scales-1) are reflect-padded
// before each network and cropped after it.
FullRun run_full(const RawImage& raw, const IspModel& model, const PrepareOptions& opts = {});

// Fixed stages only: prepare -> C_xyz -> C_srgb.
SrgbImage baseline_srgb(const RawImage& raw, const PrepareOptions& opts = {});

// Reflect-101 padding on the bottom and right edges up to a multiple.
template <ColorSpace S>
Image<S> pad_to_multiple(const Image<S>& img, int multiple) {
    const int h = (img.height() + multiple - 1) / multiple * multiple;
    const int w = (img.width() + multiple - 1) / multiple * multiple;
    if (h == img.height() && w == img.width()) return img;
    Image<S> out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(y, x, c) = img.at(reflect101(y, img.height()), reflect101(x, img.width()), c);
    return out;
}

template <ColorSpace S>
Image<S> crop(const Image<S>& img, int y0, int x0, int height, int width) {
    if (y0 < 0 || x0 < 0 || height <= 0 || width <= 0 || y0 + height > img.height() || x0 + width > img.width()) {
        throw ShapeError("crop window outside the image");
    }
    Image<S> out(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    return out;
}

// One-stage counterpart: a single U-Net with the Enhance-Net block design (or
// `base` when given), doubled blocks per scale, and channel widths searched so
// that its parameter count lies within 10% of theta1 + theta2.
inline constexpr double kOneStageParity = 0.10;
nn::UNetSpec one_stage_spec(const PipelineSpec& spec, const std::optional<nn::UNetSpec>& base = std::nullopt);
nn::ModuleParams<float> build_one_stage_counterpart(const nn::UNetSpec& one_stage, std::uint64_t seed);

// One-stage input: C_srgb C_xyz prepare(raw).
SrgbImage one_stage_input(const RawImage& raw, const PrepareOptions& opts = {});
SrgbImage run_one_stage(const RawImage& raw, const nn::ModuleParams<float>& theta, const nn::UNetSpec& spec,
                        const PrepareOptions& opts = {});

} // namespace isp
