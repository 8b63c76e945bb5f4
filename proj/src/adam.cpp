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

#include "isp/adam.hpp"

#include <cmath>

namespace isp::ad {

void adam_step(ParamSet<float>& params, AdamState& state, float lr) {
    if (!(lr > 0.0f)) {
        throw ValidationError("adam_step: learning rate must be positive");
    }
    for (const auto& e : params) {
        for (float g : e.tensor.grad()) {
            if (!std::isfinite(g)) {
                throw NumericError("adam_step: non-finite gradient in parameter '" + e.name + "'");
            }
        }
    }

    const std::int64_t t = state.step_count + 1;
    const double c1 = 1.0 - std::pow(static_cast<double>(state.beta1), static_cast<double>(t));
    const double c2 = 1.0 - std::pow(static_cast<double>(state.beta2), static_cast<double>(t));
    const float b1 = state.beta1, b2 = state.beta2;

    for (auto& e : params) {
        const std::size_t n = e.tensor.numel();
        auto& mom = state.moments[e.name];
        if (mom.first.empty()) {
            mom.first.assign(n, 0.0f);
            mom.second.assign(n, 0.0f);
        } else if (mom.first.size() != n) {
            throw ShapeError("adam_step: moment buffer for '" + e.name + "' does not match parameter shape " +
                             to_string(e.tensor.shape()));
        }
        auto data = e.tensor.data();
        auto grad = e.tensor.grad();
        const bool has_grad = !grad.empty();
        for (std::size_t i = 0; i < n; ++i) {
            const float g = has_grad ? grad[i] : 0.0f;
            mom.first[i] = b1 * mom.first[i] + (1.0f - b1) * g;
            mom.second[i] = b2 * mom.second[i] + (1.0f - b2) * g * g;
            const double m_hat = mom.first[i] / c1;
            const double v_hat = mom.second[i] / c2;
            data[i] -= static_cast<float>(lr * m_hat / (std::sqrt(v_hat) + state.eps_hat));
        }
    }
    state.step_count = t;
}

} // namespace isp::ad
