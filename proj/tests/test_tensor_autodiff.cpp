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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "isp/adam.hpp"
#include "isp/checkpoint.hpp"
#include "isp/ops.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace isp;
using namespace isp::ad;
using isp::testing::grad_check;
using isp::testing::random_tensor;
using isp::testing::random_tensor_f;
using isp::testing::weighted_sum;

namespace {

std::vector<double> to_double(std::span<const float> v) { return {v.begin(), v.end()}; }

} // namespace

// conv2d ----------------------------------------------------------------------

TEST(Conv2d, IdentityKernelReproducesInput) {
    std::mt19937_64 rng(1);
    Tape<float> tape;
    auto x = random_tensor_f({1, 1, 5, 5}, rng);
    std::vector<float> k(9, 0.0f);
    k[4] = 1.0f;
    Tensor<float> w({1, 1, 3, 3}, k);
    auto b = Tensor<float>::zeros({1});
    auto y = conv2d(tape, x, w, b);
    ASSERT_EQ(y.shape(), (Shape{1, 1, 5, 5}));
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

TEST(Conv2d, StrideTwoConstantSum) {
    Tape<float> tape;
    auto x = Tensor<float>::full({1, 1, 4, 4}, 1.0f);
    auto w = Tensor<float>::full({1, 1, 2, 2}, 1.0f);
    auto y = conv2d(tape, x, w, Tensor<float>::zeros({1}), {.stride = 2, .dilation = 1, .padding = Padding::None});
    ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
    for (float v : y.data()) EXPECT_EQ(v, 4.0f);
}

TEST(Conv2d, DilatedMatchesDirectLoop) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        Tape<float> tape;
        auto x = random_tensor_f({1, 2, 8, 8}, rng);
        auto w = random_tensor_f({4, 2, 3, 3}, rng);
        auto b = random_tensor_f({4}, rng);
        auto y = conv2d(tape, x, w, b, {.stride = 1, .dilation = 2, .padding = Padding::Same});
        int ho = 0, wo = 0;
        auto ref = isp::testing::conv2d_direct(to_double(x.data()), 1, 2, 8, 8, to_double(w.data()), 4, 3, 3,
                                               to_double(b.data()), 1, 2, 2, ho, wo);
        ASSERT_EQ(y.shape(), (Shape{1, 4, ho, wo}));
        for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y.data()[i], ref[i], 1e-5);
    }
}

TEST(Conv2d, ShapeAlgebraAcrossStrideDilationPadding) {
    std::mt19937_64 rng(7);
    for (int stride : {1, 2, 3})
        for (int dil : {1, 2, 3})
            for (Padding pad : {Padding::Same, Padding::None})
                for (int k : {1, 3, 5}) {
                    const int h = 13, w = 10;
                    const Conv2dOptions opts{stride, dil, pad};
                    const int p = pad == Padding::Same ? dil * (k - 1) / 2 : 0;
                    const int expect_h = (h + 2 * p - dil * (k - 1) - 1) / stride + 1;
                    const int expect_w = (w + 2 * p - dil * (k - 1) - 1) / stride + 1;
                    if (expect_h <= 0 || expect_w <= 0) continue;
                    Tape<double> tape(false);
                    auto x = random_tensor({2, 3, h, w}, rng);
                    auto wt = random_tensor({2, 3, k, k}, rng);
                    auto b = random_tensor({2}, rng);
                    auto y = conv2d(tape, x, wt, b, opts);
                    ASSERT_EQ(y.shape(), (Shape{2, 2, expect_h, expect_w}));
                    EXPECT_EQ(conv_output_extent(h, k, opts), expect_h);
                    if (stride == 1 && pad == Padding::Same) {
                        EXPECT_EQ(y.dim(2), h);
                    }
                    int ho = 0, wo = 0;
                    auto ref = isp::testing::conv2d_direct({x.data().begin(), x.data().end()}, 2, 3, h, w,
                                                           {wt.data().begin(), wt.data().end()}, 2, k, k,
                                                           {b.data().begin(), b.data().end()}, stride, dil, p, ho, wo);
                    for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(y.data()[i], ref[i], 1e-12);
                }
}

TEST(Conv2d, ChannelMismatchNamesDimension) {
    Tape<float> tape;
    auto x = Tensor<float>::zeros({1, 3, 4, 4});
    auto w = Tensor<float>::zeros({2, 4, 3, 3});
    try {
        conv2d(tape, x, w, Tensor<float>::zeros({2}));
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("in_ch (dimension 1)"), std::string::npos) << e.what();
    }
}

TEST(Conv2d, ValidPaddingTooSmallInputRejected) {
    Tape<float> tape;
    auto x = Tensor<float>::zeros({1, 1, 4, 4});
    auto w = Tensor<float>::zeros({1, 1, 3, 3});
    EXPECT_THROW(conv2d(tape, x, w, Tensor<float>::zeros({1}), {.stride = 1, .dilation = 2, .padding = Padding::None}),
                 ShapeError);
}

// backward --------------------------------------------------------------------

TEST(Backward, SumGivesOnes) {
    std::mt19937_64 rng(3);
    auto x = random_tensor({2, 3, 4}, rng);
    x.set_requires_grad(true);
    Tape<double> tape;
    tape.backward(sum(tape, x));
    for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, HalfSquaredNormGivesX) {
    std::mt19937_64 rng(4);
    auto x = random_tensor({5, 7}, rng);
    x.set_requires_grad(true);
    Tape<double> tape;
    tape.backward(scale(tape, sum(tape, mul(tape, x, x)), 0.5));
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_DOUBLE_EQ(x.grad()[i], x.data()[i]);
}

TEST(Backward, SecondCallRejected) {
    auto x = Tensor<double>::full({3}, 2.0, true);
    Tape<double> tape;
    auto loss = sum(tape, x);
    tape.backward(loss);
    EXPECT_THROW(tape.backward(loss), ValidationError);
    // The first result is untouched.
    for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, NonScalarRejected) {
    auto x = Tensor<double>::full({3}, 2.0, true);
    Tape<double> tape;
    auto y = scale(tape, x, 2.0);
    EXPECT_THROW(tape.backward(y), ShapeError);
}

TEST(Backward, DetachedTapeRejected) {
    auto x = Tensor<double>::full({3}, 2.0, true);
    Tape<double> tape;
    auto loss = sum(tape, x);
    tape.reset();
    EXPECT_THROW(tape.backward(loss), ValidationError);

    Tape<double> other;
    auto loss2 = sum(other, x);
    Tape<double> third;
    EXPECT_THROW(third.backward(loss2), ValidationError);
    EXPECT_THROW(third.backward(x), ValidationError); // a leaf has no producer
}

TEST(Backward, ResetAllowsFreshPassWithoutAccumulation) {
    auto x = Tensor<double>::full({2}, 3.0, true);
    Tape<double> tape;
    tape.backward(sum(tape, x));
    tape.reset();
    tape.backward(sum(tape, x));
    for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, NonRecordingTapeBuildsNoGraph) {
    auto x = Tensor<double>::full({2}, 3.0, true);
    Tape<double> tape(false);
    auto y = sum(tape, x);
    EXPECT_TRUE(y.is_leaf());
    EXPECT_EQ(tape.size(), 0u);
}

TEST(Tensor, DataLengthMustMatchShape) {
    EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>(3)), ShapeError);
    auto t = Tensor<float>::zeros({2, 3});
    EXPECT_EQ(t.numel(), 6u);
    EXPECT_TRUE(t.is_leaf());
    EXPECT_FALSE(t.has_grad());
}

// pooling, fc, per-channel ----------------------------------------------------

TEST(GlobalAvgPool, ConstantPlane) {
    Tape<float> tape;
    auto y = global_avg_pool(tape, Tensor<float>::full({1, 2, 3, 5}, 0.75f));
    ASSERT_EQ(y.shape(), (Shape{1, 2, 1, 1}));
    for (float v : y.data()) EXPECT_FLOAT_EQ(v, 0.75f);
}

TEST(GlobalAvgPool, ArithmeticMean) {
    Tape<float> tape;
    auto y = global_avg_pool(tape, Tensor<float>({1, 1, 2, 2}, {1, 2, 3, 4}));
    EXPECT_EQ(y.item(), 2.5f);
}

TEST(GlobalAvgPool, GradientIsInversePlaneSize) {
    std::mt19937_64 rng(5);
    std::vector<Tensor<double>> leaves{random_tensor({1, 2, 3, 4}, rng)};
    auto r = grad_check([](Tape<double>& t, auto& l) { return sum(t, global_avg_pool(t, l[0])); }, leaves);
    EXPECT_TRUE(r.ok()) << r.worst;
    for (double g : leaves[0].grad()) EXPECT_NEAR(g, 1.0 / 12.0, 1e-15);
}

TEST(FullyConnected, IdentityAndBias) {
    Tape<float> tape;
    Tensor<float> x({1, 3}, {1.5f, -2.0f, 0.25f});
    Tensor<float> eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    auto y = fully_connected(tape, x, eye, Tensor<float>::zeros({3}));
    for (int i = 0; i < 3; ++i) EXPECT_EQ(y.data()[i], x.data()[i]);

    Tensor<float> b({3}, {0.1f, 0.2f, 0.3f});
    auto z = fully_connected(tape, x, Tensor<float>::zeros({3, 3}), b);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(z.data()[i], b.data()[i]);
}

TEST(FullyConnected, MatchesLoopOracle) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        Tape<float> tape;
        auto x = random_tensor_f({2, 7}, rng);
        auto w = random_tensor_f({5, 7}, rng);
        auto b = random_tensor_f({5}, rng);
        auto y = fully_connected(tape, x, w, b);
        auto ref = isp::testing::matvec_direct(to_double(x.data()), 2, 7, to_double(w.data()), 5, to_double(b.data()));
        for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y.data()[i], ref[i], 1e-5);
    }
}

TEST(FullyConnected, DimensionMismatch) {
    Tape<float> tape;
    EXPECT_THROW(fully_connected(tape, Tensor<float>::zeros({1, 3}), Tensor<float>::zeros({2, 4}),
                                 Tensor<float>::zeros({2})),
                 ShapeError);
}

TEST(MulPerChannel, OnesAndZeros) {
    std::mt19937_64 rng(9);
    Tape<float> tape;
    auto f = random_tensor_f({1, 3, 4, 4}, rng);
    auto same = mul_per_channel(tape, f, Tensor<float>::full({1, 3}, 1.0f));
    for (std::size_t i = 0; i < f.numel(); ++i) EXPECT_EQ(same.data()[i], f.data()[i]);
    auto zero = mul_per_channel(tape, f, Tensor<float>::zeros({1, 3}));
    for (float v : zero.data()) EXPECT_EQ(v, 0.0f);
    EXPECT_THROW(mul_per_channel(tape, f, Tensor<float>::zeros({1, 4})), ShapeError);
}

TEST(MulPerChannel, ScaleGradientIsSpatialSum) {
    std::mt19937_64 rng(10);
    std::vector<Tensor<double>> leaves{random_tensor({1, 3, 4, 5}, rng), random_tensor({1, 3}, rng)};
    auto r = grad_check([](Tape<double>& t, auto& l) { return sum(t, mul_per_channel(t, l[0], l[1])); }, leaves);
    EXPECT_TRUE(r.ok()) << r.worst;
    for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int j = 0; j < 20; ++j) s += leaves[0].data()[c * 20 + j];
        EXPECT_NEAR(leaves[1].grad()[c], s, 1e-12);
    }
}

// elementwise suite ------------------------------------------------------------

TEST(Elementwise, LogClampedValues) {
    Tape<double> tape;
    auto y = log_clamped(tape, Tensor<double>({2}, {1.0, 0.0}), 1e-4);
    EXPECT_EQ(y.data()[0], 0.0);
    EXPECT_NEAR(y.data()[1], -9.2103, 1e-4);
}

TEST(Elementwise, LogClampedGradientZeroBelowEpsilon) {
    auto x = Tensor<double>({3}, {1e-6, 0.5, 2.0}, true);
    Tape<double> tape;
    tape.backward(sum(tape, log_clamped(tape, x, 1e-4)));
    EXPECT_EQ(x.grad()[0], 0.0);
    EXPECT_DOUBLE_EQ(x.grad()[1], 2.0);
    EXPECT_DOUBLE_EQ(x.grad()[2], 0.5);
}

TEST(Elementwise, UpsampleBlockReplicates) {
    Tape<float> tape;
    auto y = upsample_nearest2x(tape, Tensor<float>({1, 1, 2, 2}, {1, 2, 3, 4}));
    ASSERT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
    const std::vector<float> expect{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(y.data()[i], expect[i]);
}

TEST(Elementwise, ConcatChannelsShapesAndErrors) {
    Tape<float> tape;
    auto y = concat_channels(tape, Tensor<float>::zeros({1, 2, 4, 4}), Tensor<float>::full({1, 3, 4, 4}, 1.0f));
    EXPECT_EQ(y.shape(), (Shape{1, 5, 4, 4}));
    EXPECT_EQ(y.data()[2 * 16 - 1], 0.0f);
    EXPECT_EQ(y.data()[2 * 16], 1.0f);
    EXPECT_THROW(concat_channels(tape, Tensor<float>::zeros({1, 2, 4, 4}), Tensor<float>::zeros({1, 2, 4, 2})),
                 ShapeError);
}

TEST(Elementwise, LeakyReluValues) {
    Tape<float> tape;
    auto y = leaky_relu(tape, Tensor<float>({3}, {-1.0f, 0.0f, 2.0f}), 0.2f);
    EXPECT_FLOAT_EQ(y.data()[0], -0.2f);
    EXPECT_EQ(y.data()[1], 0.0f);
    EXPECT_EQ(y.data()[2], 2.0f);
}

// Finite-difference check of every differentiable operation on random inputs.
class OpGradients : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(OpGradients, MatchFiniteDifferences) {
    const std::uint64_t seed = GetParam();
    std::mt19937_64 rng(seed);
    auto check = [&](const char* name, auto fn, std::vector<Tensor<double>> leaves) {
        auto r = grad_check(
            [&](Tape<double>& t, auto& l) { return weighted_sum(t, fn(t, l), seed + 100); }, leaves);
        EXPECT_TRUE(r.ok()) << name << ": " << r.worst << " rel=" << r.max_rel_error;
        EXPECT_GT(r.checked, 0u) << name;
    };

    for (int dil : {1, 2}) {
        for (int stride : {1, 2}) {
            check("conv2d",
                  [&](Tape<double>& t, auto& l) {
                      return conv2d(t, l[0], l[1], l[2], {.stride = stride, .dilation = dil, .padding = Padding::Same});
                  },
                  {random_tensor({1, 2, 6, 6}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)});
        }
    }
    check("global_avg_pool", [](Tape<double>& t, auto& l) { return global_avg_pool(t, l[0]); },
          {random_tensor({1, 3, 4, 4}, rng)});
    check("fully_connected", [](Tape<double>& t, auto& l) { return fully_connected(t, l[0], l[1], l[2]); },
          {random_tensor({1, 4}, rng), random_tensor({3, 4}, rng), random_tensor({3}, rng)});
    check("mul_per_channel", [](Tape<double>& t, auto& l) { return mul_per_channel(t, l[0], l[1]); },
          {random_tensor({1, 3, 3, 3}, rng), random_tensor({1, 3}, rng)});
    check("channel_affine", [](Tape<double>& t, auto& l) { return channel_affine(t, l[0], l[1], l[2]); },
          {random_tensor({1, 3, 3, 3}, rng), random_tensor({3}, rng), random_tensor({3}, rng)});
    check("instance_norm", [](Tape<double>& t, auto& l) { return instance_norm(t, l[0], 1e-5); },
          {random_tensor({1, 2, 4, 4}, rng)});
    check("channel_mix",
          [](Tape<double>& t, auto& l) {
              return channel_mix(t, l[0], {0.4, 0.3, 0.2, -0.1, 1.2, 0.05, 0.0, -0.3, 0.9});
          },
          {random_tensor({1, 3, 3, 3}, rng)});
    check("add", [](Tape<double>& t, auto& l) { return add(t, l[0], l[1]); },
          {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)});
    check("sub", [](Tape<double>& t, auto& l) { return sub(t, l[0], l[1]); },
          {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)});
    check("mul", [](Tape<double>& t, auto& l) { return mul(t, l[0], l[1]); },
          {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)});
    check("scale", [](Tape<double>& t, auto& l) { return scale(t, l[0], -1.7); }, {random_tensor({4}, rng)});
    // Keep inputs away from the kinks at 0 so the central difference is smooth.
    auto away_from_zero = [&](Shape s) {
        auto t = random_tensor(std::move(s), rng, 0.05, 1.0);
        std::bernoulli_distribution flip(0.5);
        for (double& v : t.data()) v = flip(rng) ? -v : v;
        return t;
    };
    check("leaky_relu", [](Tape<double>& t, auto& l) { return leaky_relu(t, l[0], 0.2); }, {away_from_zero({3, 4})});
    check("abs", [](Tape<double>& t, auto& l) { return abs(t, l[0]); }, {away_from_zero({3, 4})});
    check("log_clamped", [](Tape<double>& t, auto& l) { return log_clamped(t, l[0], 1e-4); },
          {random_tensor({3, 4}, rng, 0.05, 2.0)});
    check("concat_channels", [](Tape<double>& t, auto& l) { return concat_channels(t, l[0], l[1]); },
          {random_tensor({1, 2, 3, 3}, rng), random_tensor({1, 1, 3, 3}, rng)});
    check("upsample_nearest2x", [](Tape<double>& t, auto& l) { return upsample_nearest2x(t, l[0]); },
          {random_tensor({1, 2, 3, 3}, rng)});
    check("reshape", [](Tape<double>& t, auto& l) { return reshape(t, l[0], {3, 4}); }, {random_tensor({2, 6}, rng)});
    check("mean", [](Tape<double>& t, auto& l) { return mean(t, l[0]); }, {random_tensor({2, 6}, rng)});
}

INSTANTIATE_TEST_SUITE_P(Seeds, OpGradients, ::testing::Values(11u, 12u, 13u, 14u, 15u));

TEST(Determinism, IdenticalInputsGiveBitIdenticalOutputs) {
    auto run = [] {
        std::mt19937_64 rng(77);
        Tape<float> tape;
        auto x = random_tensor_f({1, 4, 16, 16}, rng);
        auto w = random_tensor_f({8, 4, 3, 3}, rng);
        auto y = leaky_relu(tape, conv2d(tape, x, w, Tensor<float>::zeros({8}), {1, 2, Padding::Same}), 0.2f);
        return std::vector<float>(y.data().begin(), y.data().end());
    };
    EXPECT_EQ(run(), run());
}

// Adam ------------------------------------------------------------------------

namespace {

// Scalar Adam written from the textbook update, independent of adam_step.
struct ReferenceAdam {
    double m = 0, v = 0, b1 = 0.9, b2 = 0.99, eps = 1e-8;
    int t = 0;
    double step(double p, double g, double lr) {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        return p - lr * mh / (std::sqrt(vh) + eps);
    }
};

void set_grad(Tensor<float>& p, float g) {
    // Produce a gradient of exactly g per element via backward on g * sum(p).
    Tape<float> tape;
    tape.backward(scale(tape, sum(tape, p), g));
}

} // namespace

TEST(Adam, FirstStepMovesByLearningRate) {
    ParamSet<float> params;
    params.add("w", Tensor<float>::full({4}, 1.0f, true));
    AdamState state;
    set_grad(params.at("w"), 0.37f);
    adam_step(params, state, 0.01f);
    for (float v : params.at("w").data()) EXPECT_NEAR(v, 1.0f - 0.01f, 1e-6);
    EXPECT_EQ(state.step_count, 1);

    set_grad(params.at("w"), -5.0f);
    adam_step(params, state, 0.01f);
    EXPECT_EQ(state.step_count, 2);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    ParamSet<float> params;
    params.add("w", Tensor<float>({3}, {0.5f, -1.0f, 2.0f}, true));
    AdamState state;
    for (int i = 0; i < 20; ++i) {
        set_grad(params.at("w"), 0.0f);
        adam_step(params, state, 0.1f);
    }
    EXPECT_EQ(params.at("w").data()[0], 0.5f);
    EXPECT_EQ(params.at("w").data()[1], -1.0f);
    EXPECT_EQ(params.at("w").data()[2], 2.0f);
}

TEST(Adam, QuadraticConvergesAndTracksReference) {
    ParamSet<float> params;
    params.add("w", Tensor<float>::full({1}, 0.0f, true));
    AdamState state;
    ReferenceAdam ref;
    double w_ref = 0.0;
    for (int i = 0; i < 100; ++i) {
        auto& w = params.at("w");
        Tape<float> tape;
        auto d = sub(tape, w, Tensor<float>::full({1}, 3.0f));
        tape.backward(sum(tape, mul(tape, d, d)));
        adam_step(params, state, 0.1f);
        w_ref = ref.step(w_ref, 2.0 * (w_ref - 3.0), 0.1);
    }
    const float w = params.at("w").item();
    EXPECT_LT(std::abs(w - 3.0f), 0.1f);
    EXPECT_NEAR(w, w_ref, 1e-3);
}

TEST(Adam, NonFiniteGradientNamesParameter) {
    ParamSet<float> params;
    params.add("enc0.in.weight", Tensor<float>::full({2}, 1.0f, true));
    set_grad(params.at("enc0.in.weight"), std::numeric_limits<float>::quiet_NaN());
    AdamState state;
    try {
        adam_step(params, state, 0.1f);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("enc0.in.weight"), std::string::npos);
    }
    EXPECT_EQ(state.step_count, 0);
    EXPECT_EQ(params.at("enc0.in.weight").data()[0], 1.0f);
}

// checkpoint ------------------------------------------------------------------

TEST(Checkpoint, RoundTripIsBitExact) {
    std::mt19937_64 rng(21);
    ParamSet<float> params;
    params.add("a.weight", random_tensor_f({3, 2, 3, 3}, rng, -1e3f, 1e3f));
    params.add("a.bias", random_tensor_f({3}, rng));
    params.add("tiny", Tensor<float>({2}, {1e-38f, -0.0f}));
    const auto dir = std::filesystem::temp_directory_path() / "isp_ckpt_test";
    std::filesystem::remove_all(dir);
    save_checkpoint(dir / "model", params, {{"role", "restore"}});
    EXPECT_TRUE(checkpoint_exists(dir / "model"));
    auto ck = load_checkpoint(dir / "model");
    EXPECT_EQ(ck.metadata.at("role"), "restore");
    ASSERT_EQ(ck.params.size(), params.size());
    for (const auto& e : params) {
        const auto& got = ck.params.at(e.name);
        ASSERT_EQ(got.shape(), e.tensor.shape());
        EXPECT_EQ(std::memcmp(got.data().data(), e.tensor.data().data(), e.tensor.numel() * sizeof(float)), 0);
    }
    std::filesystem::remove_all(dir);
}

TEST(Checkpoint, MissingFileIsIoError) {
    EXPECT_THROW(load_checkpoint("/nonexistent/dir/model"), IoError);
}
