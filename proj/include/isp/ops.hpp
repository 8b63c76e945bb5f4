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

#include "isp/tensor.hpp"

// Differentiable operations. Every function records itself on `tape` when an
// input tracks gradients. 4-D tensors are [batch, channel, height, width].
namespace isp::ad {

enum class Padding {
    Same, // zero fill so that stride 1 preserves spatial extents (odd kernels only)
    None,
};

struct Conv2dOptions {
    int stride = 1;
    int dilation = 1;
    Padding padding = Padding::Same;
};

// Output extent of a convolution along one axis.
int conv_output_extent(int input, int kernel, const Conv2dOptions& opts);

// weight: [out_ch, in_ch, kh, kw]; bias: [out_ch] or undefined.
template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Conv2dOptions& opts = {});

// [b, c, h, w] -> [b, c, 1, 1], mean over each spatial plane.
template <typename T>
Tensor<T> global_avg_pool(Tape<T>& tape, const Tensor<T>& input);

// input [batch, in], weight [out, in], bias [out].
template <typename T>
Tensor<T> fully_connected(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                          const Tensor<T>& bias);

// out[b,c,h,w] = feature[b,c,h,w] * scale[b,c]
template <typename T>
Tensor<T> mul_per_channel(Tape<T>& tape, const Tensor<T>& feature, const Tensor<T>& scale);

// out[b,c,h,w] = x[b,c,h,w] * gain[c] + shift[c]
template <typename T>
Tensor<T> channel_affine(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& shift);

// Per-(batch, channel) plane standardization with variance floor `eps`.
template <typename T>
Tensor<T> instance_norm(Tape<T>& tape, const Tensor<T>& x, T eps);

// Per-pixel 3x3 channel mixing, out[:, i] = sum_j m[i*3+j] * x[:, j]. The
// matrix is a constant; gradients flow to x only.
template <typename T>
Tensor<T> channel_mix(Tape<T>& tape, const Tensor<T>& x, const std::array<double, 9>& m);

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& x, T factor);

template <typename T>
Tensor<T> leaky_relu(Tape<T>& tape, const Tensor<T>& x, T slope);

template <typename T>
Tensor<T> abs(Tape<T>& tape, const Tensor<T>& x);

// ln(max(x, eps)); the gradient is zero where x < eps.
template <typename T>
Tensor<T> log_clamped(Tape<T>& tape, const Tensor<T>& x, T eps);

template <typename T>
Tensor<T> concat_channels(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> upsample_nearest2x(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> reshape(Tape<T>& tape, const Tensor<T>& x, Shape shape);

template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> mean(Tape<T>& tape, const Tensor<T>& x);

} // namespace isp::ad
