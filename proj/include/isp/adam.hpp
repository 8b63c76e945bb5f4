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
#include <map>
#include <string>
#include <vector>

#include "isp/tensor.hpp"

namespace isp::ad {

struct AdamState {
    struct Moments {
        std::vector<float> first;
        std::vector<float> second;
    };

    std::map<std::string, Moments> moments; // keyed by parameter name
    std::int64_t step_count = 0;
    float beta1 = 0.9f;
    float beta2 = 0.99f;
    float eps_hat = 1e-8f;
};

// One bias-corrected Adam update of every parameter from its current grad.
// Parameters without a gradient are treated as having a zero gradient. All
// gradients are validated before any parameter changes; a non-finite entry
// raises NumericError naming the parameter.
void adam_step(ParamSet<float>& params, AdamState& state, float lr);

} // namespace isp::ad
