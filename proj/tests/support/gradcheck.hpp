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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "isp/ops.hpp"
#include "isp/tensor.hpp"

// Central finite differences against tape gradients, always in 64-bit.
namespace isp::testing {

struct GradCheckResult {
    std::size_t checked = 0;  // elements with |grad| above the floor
    std::size_t failures = 0;
    double max_rel_error = 0.0;
    std::string worst; // description of the worst element

    bool ok() const { return failures == 0; }
};

struct GradCheckOptions {
    double step = 1e-3;
    double tolerance = 1e-3;
    double grad_floor = 1e-6;
};

// `loss_fn(tape, leaves)` must build a scalar loss from `leaves` on `tape`.
// Every leaf is perturbed elementwise.
namespace detail {

// Compares tape gradients of double leaves against central differences of
// `evaluate` on `probe`, a (possibly higher precision) copy of the leaves.
template <typename R, typename Eval>
GradCheckResult compare_gradients(const std::vector<std::vector<double>>& analytic,
                                  std::vector<ad::Tensor<R>>& probe, Eval&& evaluate,
                                  const std::vector<std::string>& names, const GradCheckOptions& opts) {
    GradCheckResult result;
    const R h = static_cast<R>(opts.step);
    for (std::size_t li = 0; li < probe.size(); ++li) {
        auto data = probe[li].data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const R saved = data[i];
            data[i] = saved + h;
            const R up = evaluate();
            data[i] = saved - h;
            const R down = evaluate();
            data[i] = saved;
            const double fd = static_cast<double>((up - down) / (2 * h));
            const double an = analytic[li][i];
            const double mag = std::max(std::abs(fd), std::abs(an));
            if (mag <= opts.grad_floor) continue;
            ++result.checked;
            const double rel = std::abs(fd - an) / mag;
            if (rel > opts.tolerance) ++result.failures;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                std::ostringstream os;
                os << (li < names.size() ? names[li] : "leaf" + std::to_string(li)) << "[" << i << "] fd=" << fd
                   << " tape=" << an;
                result.worst = os.str();
            }
        }
    }
    return result;
}

inline std::vector<std::vector<double>> tape_gradients(std::vector<ad::Tensor<double>>& leaves, auto&& loss_fn) {
    for (auto& l : leaves) l.set_requires_grad(true);
    ad::Tape<double> tape;
    ad::Tensor<double> loss = loss_fn(tape, leaves);
    tape.backward(loss);
    std::vector<std::vector<double>> analytic;
    for (auto& l : leaves) {
        auto g = l.grad();
        analytic.emplace_back(g.begin(), g.end());
    }
    return analytic;
}

} // namespace detail

// Tape gradients against central differences in the same precision.
template <typename LossFn>
GradCheckResult grad_check(LossFn&& loss_fn, std::vector<ad::Tensor<double>>& leaves,
                           const std::vector<std::string>& names = {}, GradCheckOptions opts = {}) {
    const auto analytic = detail::tape_gradients(leaves, loss_fn);
    auto evaluate = [&]() {
        ad::Tape<double> replay(false);
        return loss_fn(replay, leaves).item();
    };
    return detail::compare_gradients(analytic, leaves, evaluate, names, opts);
}

// Tape gradients in double against central differences evaluated in extended
// precision, so rounding in deep networks stays far below the tolerance.
// `loss_fn` must be generic over the scalar type.
template <typename LossFn>
GradCheckResult grad_check_extended(LossFn&& loss_fn, std::vector<ad::Tensor<double>>& leaves,
                                    const std::vector<std::string>& names = {}, GradCheckOptions opts = {}) {
    const auto analytic = detail::tape_gradients(leaves, loss_fn);
    std::vector<ad::Tensor<long double>> probe;
    for (const auto& l : leaves) probe.push_back(ad::cast<long double>(l));
    auto evaluate = [&]() {
        ad::Tape<long double> replay(false);
        return loss_fn(replay, probe).item();
    };
    return detail::compare_gradients(analytic, probe, evaluate, names, opts);
}

inline ad::Tensor<double> random_tensor(ad::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(ad::numel(shape));
    for (double& x : v) x = dist(rng);
    return ad::Tensor<double>(std::move(shape), std::move(v));
}

inline ad::Tensor<float> random_tensor_f(ad::Shape shape, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> dist(lo, hi);
    std::vector<float> v(ad::numel(shape));
    for (float& x : v) x = dist(rng);
    return ad::Tensor<float>(std::move(shape), std::move(v));
}

// Weighted sum with fixed random weights: a generic scalar head so that every
// output element contributes a distinct gradient.
template <typename T>
ad::Tensor<T> weighted_sum(ad::Tape<T>& tape, const ad::Tensor<T>& x, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto w = random_tensor(x.shape(), rng);
    if constexpr (std::is_same_v<T, double>) {
        return ad::sum(tape, ad::mul(tape, x, w));
    } else {
        return ad::sum(tape, ad::mul(tape, x, ad::cast<T>(w)));
    }
}

} // namespace isp::testing
