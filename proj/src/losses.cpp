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

#include "isp/losses.hpp"

namespace isp {

void LossConfig::validate() const {
    if (!(epsilon > 0.0f && epsilon < 1.0f)) throw ValidationError("loss epsilon must lie in (0, 1)");
    if (!(lambda >= 0.0f && lambda <= 1.0f)) throw ValidationError("loss lambda must lie in [0, 1]");
}

namespace {

template <typename T>
void check_pair(const TaggedTensor<T>& pred, const TaggedTensor<T>& gt, ColorSpace want, const char* what) {
    if (pred.space != want || gt.space != want) {
        throw ValidationError(std::string(what) + ": tag mismatch (expected " + to_string(want) + ", got " +
                              to_string(pred.space) + " and " + to_string(gt.space) + ")");
    }
    if (pred.tensor.shape() != gt.tensor.shape()) {
        throw ShapeError(std::string(what) + ": shapes differ (" + ad::to_string(pred.tensor.shape()) + " vs " +
                         ad::to_string(gt.tensor.shape()) + ")");
    }
}

} // namespace

template <typename T>
ad::Tensor<T> restoration_loss(ad::Tape<T>& tape, const TaggedTensor<T>& pred, const TaggedTensor<T>& gt,
                               T epsilon) {
    check_pair(pred, gt, ColorSpace::XYZ, "restoration_loss");
    if (!(epsilon > T(0) && epsilon < T(1))) throw ValidationError("restoration_loss: epsilon must lie in (0, 1)");
    auto linear = ad::mean(tape, ad::abs(tape, ad::sub(tape, pred.tensor, gt.tensor)));
    auto lp = ad::log_clamped(tape, pred.tensor, epsilon);
    auto lg = ad::log_clamped(tape, gt.tensor, epsilon);
    auto log_term = ad::mean(tape, ad::abs(tape, ad::sub(tape, lp, lg)));
    return ad::add(tape, linear, log_term);
}

template <typename T>
ad::Tensor<T> enhancement_loss(ad::Tape<T>& tape, const TaggedTensor<T>& pred, const TaggedTensor<T>& gt) {
    check_pair(pred, gt, ColorSpace::SRGB, "enhancement_loss");
    return ad::mean(tape, ad::abs(tape, ad::sub(tape, pred.tensor, gt.tensor)));
}

template <typename T>
ad::Tensor<T> joint_loss(ad::Tape<T>& tape, const TaggedTensor<T>& rest_pred, const TaggedTensor<T>& rest_gt,
                         const TaggedTensor<T>& enh_pred, const TaggedTensor<T>& enh_gt, const LossConfig& cfg) {
    cfg.validate();
    auto lr = restoration_loss(tape, rest_pred, rest_gt, static_cast<T>(cfg.epsilon));
    auto le = enhancement_loss(tape, enh_pred, enh_gt);
    const T lambda = static_cast<T>(cfg.lambda);
    return ad::add(tape, ad::scale(tape, lr, lambda), ad::scale(tape, le, T(1) - lambda));
}

#define ISP_INSTANTIATE_LOSSES(T)                                                                              \
    template ad::Tensor<T> restoration_loss(ad::Tape<T>&, const TaggedTensor<T>&, const TaggedTensor<T>&, T);  \
    template ad::Tensor<T> enhancement_loss(ad::Tape<T>&, const TaggedTensor<T>&, const TaggedTensor<T>&);     \
    template ad::Tensor<T> joint_loss(ad::Tape<T>&, const TaggedTensor<T>&, const TaggedTensor<T>&,            \
                                      const TaggedTensor<T>&, const TaggedTensor<T>&, const LossConfig&);

ISP_INSTANTIATE_LOSSES(float)
ISP_INSTANTIATE_LOSSES(double)

#undef ISP_INSTANTIATE_LOSSES

} // namespace isp
