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
#include <string>
#include <vector>

#include "json.hpp"

#include "isp/ops.hpp"
#include "isp/tensor.hpp"

// U-Net building blocks shared by the restoration and enhancement networks.
//
// Topology for `scales` = S (names in parentheses are parameter prefixes):
//   encoder scale s: entry conv (enc{s}.in, stride 2 for s > 0), then
//                    `blocks_per_scale` processing blocks (enc{s}.block{b});
//   coarsest scale:  the processing blocks are modulated by the global
//                    component (global.fc1, global.fc2);
//   decoder scale s: nearest 2x upsample + conv (dec{s}.up), concat with the
//                    encoder skip, fusion conv (dec{s}.fuse), processing blocks
//                    (dec{s}.block{b});
//   output:          linear conv (out), optionally added to the network input.
namespace isp::nn {

enum class Role { Restore, Enhance, OneStage };

std::string to_string(Role role);
Role role_from_string(const std::string& s);

struct UNetSpec {
    int scales = 5;
    int base_channels = 16;
    int max_channels = 128;
    int blocks_per_scale = 2;
    std::vector<int> dilations{1, 1, 1, 1, 1};
    bool residual_blocks = false;
    bool abn = false;
    bool global_component = true;
    bool global_skip = true; // output = input + network tail
    int in_channels = 3;
    int out_channels = 3;
    int kernel_size = 3;
    float leaky_slope = 0.2f;
    float abn_eps = 1e-5f;

    // Plain blocks, unit dilations, no ABN.
    static UNetSpec restore();
    // Residual blocks, dilations {1, 2, 2, 4, 8}, ABN.
    static UNetSpec enhance();

    // base_channels doubled per scale, capped at max_channels.
    std::vector<int> channels_per_scale() const;
    // Spatial extents must be multiples of this.
    int extent_multiple() const { return 1 << (scales - 1); }

    void validate() const;

    bool operator==(const UNetSpec&) const = default;
};

nlohmann::json to_json(const UNetSpec& spec);
// Strict: unknown or mistyped fields raise ValidationError naming the field.
UNetSpec unet_spec_from_json(const nlohmann::json& j, const std::string& context = "unet");

template <typename T>
struct ModuleParams {
    Role role = Role::Restore;
    ad::ParamSet<T> params;
};

// Deterministic fan-in scaled uniform initialization. The output conv and the
// second FC weight start at zero (FC bias at one), so a fresh network with a
// global skip is the identity map and the global scaling starts at one.
ModuleParams<float> build_unet(const UNetSpec& spec, std::uint64_t seed, Role role);

// Number of scalar parameters build_unet creates for `spec`.
std::size_t parameter_count(const UNetSpec& spec);

template <typename To, typename From>
ModuleParams<To> cast_params(const ModuleParams<From>& p, bool requires_grad = false) {
    return {p.role, ad::cast<To>(p.params, requires_grad)};
}

// input [1, in_channels, H, W] with H, W multiples of spec.extent_multiple().
template <typename T>
ad::Tensor<T> forward_unet(ad::Tape<T>& tape, const ModuleParams<T>& params, const UNetSpec& spec,
                           const ad::Tensor<T>& input);

// u5_output scaled per channel by fc2(fc1(pool(h5_in))).
template <typename T>
ad::Tensor<T> global_component(ad::Tape<T>& tape, const ad::Tensor<T>& h5_in, const ad::Tensor<T>& fc1_weight,
                               const ad::Tensor<T>& fc1_bias, const ad::Tensor<T>& fc2_weight,
                               const ad::Tensor<T>& fc2_bias, const ad::Tensor<T>& u5_output);

// Per-instance normalization with a learnable per-channel gain and shift.
template <typename T>
ad::Tensor<T> adaptive_batch_norm(ad::Tape<T>& tape, const ad::Tensor<T>& x, const ad::Tensor<T>& gain,
                                  const ad::Tensor<T>& shift, T stats_eps);

// conv -> [ABN] -> leaky ReLU, with parameters under `prefix`.
template <typename T>
ad::Tensor<T> conv_block(ad::Tape<T>& tape, const ad::Tensor<T>& x, const ad::ParamSet<T>& params,
                         const std::string& prefix, const UNetSpec& spec, int stride, int dilation);

// x + conv_block(x).
template <typename T>
ad::Tensor<T> residual_block(ad::Tape<T>& tape, const ad::Tensor<T>& x, const ad::ParamSet<T>& params,
                             const std::string& prefix, const UNetSpec& spec, int dilation);

} // namespace isp::nn
