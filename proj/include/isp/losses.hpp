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

#include "isp/image.hpp"
#include "isp/ops.hpp"
#include "isp/tensor.hpp"

namespace isp {

// A differentiable [1, 3, H, W] tensor carrying its color space at runtime.
template <typename T>
struct TaggedTensor {
    ad::Tensor<T> tensor;
    ColorSpace space = ColorSpace::CameraRGB;
};

template <ColorSpace S>
TaggedTensor<float> tagged(const Image<S>& img, bool requires_grad = false) {
    return {to_tensor(img, requires_grad), S};
}

struct LossConfig {
    float epsilon = 1e-4f; // log clamp
    float lambda = 0.5f;   // joint weighting of the restoration term

    void validate() const;
};

// mean|p - g| + mean|ln max(p, eps) - ln max(g, eps)|, both in XYZ.
template <typename T>
ad::Tensor<T> restoration_loss(ad::Tape<T>& tape, const TaggedTensor<T>& pred, const TaggedTensor<T>& gt, T epsilon);

// mean|p - g|, both in sRGB.
template <typename T>
ad::Tensor<T> enhancement_loss(ad::Tape<T>& tape, const TaggedTensor<T>& pred, const TaggedTensor<T>& gt);

// lambda * restoration + (1 - lambda) * enhancement.
template <typename T>
ad::Tensor<T> joint_loss(ad::Tape<T>& tape, const TaggedTensor<T>& rest_pred, const TaggedTensor<T>& rest_gt,
                         const TaggedTensor<T>& enh_pred, const TaggedTensor<T>& enh_gt, const LossConfig& cfg);

} // namespace isp
