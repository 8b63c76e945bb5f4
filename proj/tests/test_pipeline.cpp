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

#include <random>

#include "isp/pipeline.hpp"

using namespace isp;
using namespace isp::nn;

namespace {

PipelineSpec small_spec() {
    PipelineSpec s;
    for (UNetSpec* u : {&s.restore, &s.enhance}) {
        u->base_channels = 4;
        u->max_channels = 16;
    }
    return s;
}

RawImage random_raw(int h, int w, std::uint64_t seed) {
    RawImage r;
    r.height = h;
    r.width = w;
    r.pattern = CfaPattern::GRBG;
    r.black_level = {256, 256, 256};
    r.white_level = {4095, 4095, 4095};
    r.metadata.color_matrix_1 = {1.1, -0.1, 0.0, -0.2, 1.2, 0.0, 0.0, 0.1, 0.9};
    r.metadata.color_matrix_2 = {1.0, 0.0, 0.05, -0.1, 1.1, 0.0, 0.0, 0.0, 1.0};
    std::mt19937_64 rng(seed);
    r.cfa.resize(static_cast<std::size_t>(h) * w);
    for (auto& v : r.cfa) v = static_cast<std::uint16_t>(256 + rng() % 3800);
    return r;
}

// Moves every parameter away from its initial value so that no stage is an identity.
void perturb(ModuleParams<float>& m, std::uint64_t seed, float amount = 0.05f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> d(-amount, amount);
    for (auto& e : m.params)
        for (float& v : e.tensor.data()) v += d(rng);
}

template <ColorSpace S>
bool bit_equal(const Image<S>& a, const Image<S>& b) {
    return a.height() == b.height() && a.width() == b.width() &&
           std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

} // namespace

TEST(Restore, ZeroImageThroughZeroTail) {
    auto model = build_model(small_spec(), 1);
    perturb(model.restore, 2);
    for (float& v : model.restore.params.at("out.weight").data()) v = 0.0f;
    for (float& v : model.restore.params.at("out.bias").data()) v = 0.0f;
    auto y = restore(XyzImage(32, 32), model.restore, model.spec.restore);
    for (float v : y.data()) ASSERT_EQ(v, 0.0f);
}

TEST(Restore, ShapePreservedAndDivisibilityChecked) {
    auto model = build_model(small_spec(), 1);
    perturb(model.restore, 3);
    for (auto [h, w] : {std::pair{64, 64}, std::pair{128, 96}}) {
        auto y = restore(XyzImage(h, w), model.restore, model.spec.restore);
        EXPECT_EQ(y.height(), h);
        EXPECT_EQ(y.width(), w);
    }
    EXPECT_THROW(restore(XyzImage(40, 40), model.restore, model.spec.restore), ValidationError);
}

TEST(Enhance, FreshNetworkIsIdentity) {
    auto model = build_model(small_spec(), 4);
    SrgbImage x(64, 64);
    std::mt19937_64 rng(5);
    for (float& v : x.data()) v = std::uniform_real_distribution<float>(0, 1)(rng);
    auto y = enhance(x, model.enhance, model.spec.enhance);
    EXPECT_TRUE(bit_equal(x, y));
}

TEST(Stages, TagsCheckedAtRuntime) {
    auto model = build_model(small_spec(), 6);
    ad::Tape<float> tape(false);
    auto srgb = tagged(SrgbImage(16, 16));
    auto xyz = tagged(XyzImage(16, 16));
    EXPECT_THROW(restore(tape, srgb, model.restore, model.spec.restore), ValidationError);
    EXPECT_THROW(enhance(tape, xyz, model.enhance, model.spec.enhance), ValidationError);
    EXPECT_THROW(to_srgb(tape, srgb), ValidationError);
    EXPECT_EQ(to_srgb(tape, xyz).space, ColorSpace::SRGB);
}

TEST(Stages, TensorColorConversionMatchesImageConversion) {
    XyzImage x(8, 8);
    std::mt19937_64 rng(7);
    for (float& v : x.data()) v = std::uniform_real_distribution<float>(-0.2f, 1.2f)(rng);
    ad::Tape<float> tape(false);
    auto t = to_srgb(tape, tagged(x));
    EXPECT_TRUE(bit_equal(image_from_tensor<ColorSpace::SRGB>(t.tensor), xyz_to_srgb(x)));
}

TEST(RunFull, EqualsManualCompositionBitExact) {
    auto model = build_model(small_spec(), 8);
    perturb(model.restore, 9);
    perturb(model.enhance, 10);
    auto raw = random_raw(32, 48, 11);
    auto run = run_full(raw, model);

    const CameraImage cam = prepare(raw);
    const XyzImage xyz = camera_rgb_to_xyz(cam, raw.metadata);
    const XyzImage rest = restore(xyz, model.restore, model.spec.restore);
    const SrgbImage srgb = xyz_to_srgb(rest);
    const SrgbImage out = enhance(srgb, model.enhance, model.spec.enhance);

    EXPECT_TRUE(bit_equal(run.raw_xyz, xyz));
    EXPECT_TRUE(bit_equal(run.rest_xyz, rest));
    EXPECT_TRUE(bit_equal(run.enh_srgb, out));
    EXPECT_FALSE(bit_equal(run.enh_srgb, srgb)); // the networks are not identities here

    auto again = run_full(raw, model);
    EXPECT_TRUE(bit_equal(again.enh_srgb, run.enh_srgb));
}

TEST(RunFull, PadsIndivisibleInputs) {
    auto model = build_model(small_spec(), 12);
    auto raw = random_raw(38, 54, 13);
    auto run = run_full(raw, model);
    EXPECT_EQ(run.enh_srgb.height(), 38);
    EXPECT_EQ(run.enh_srgb.width(), 54);
    EXPECT_EQ(run.rest_xyz.height(), 38);
    // Fresh networks are identities, so padding must be invisible.
    EXPECT_TRUE(bit_equal(run.enh_srgb, baseline_srgb(raw)));

    perturb(model.restore, 14);
    perturb(model.enhance, 15);
    auto run2 = run_full(raw, model);
    EXPECT_EQ(run2.enh_srgb.width(), 54);
}

TEST(Padding, ReflectAndCrop) {
    SrgbImage img(3, 5);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 5; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>(100 * y + 10 * x + c);
    auto p = pad_to_multiple(img, 4);
    EXPECT_EQ(p.height(), 4);
    EXPECT_EQ(p.width(), 8);
    EXPECT_EQ(p.at(3, 0, 0), img.at(1, 0, 0));
    EXPECT_EQ(p.at(0, 5, 1), img.at(0, 3, 1));
    EXPECT_EQ(p.at(0, 7, 2), img.at(0, 1, 2));
    EXPECT_TRUE(bit_equal(crop(p, 0, 0, 3, 5), img));
    EXPECT_THROW(crop(p, 2, 0, 3, 5), ShapeError);
}

TEST(OneStage, ParameterParityAndDoubledBlocks) {
    for (const PipelineSpec& spec : {PipelineSpec{}, small_spec()}) {
        const auto os = one_stage_spec(spec);
        EXPECT_EQ(os.blocks_per_scale, 2 * spec.enhance.blocks_per_scale);
        const double target = static_cast<double>(build_model(spec, 0).restore.params.total_elements() +
                                                  build_model(spec, 0).enhance.params.total_elements());
        const auto theta = build_one_stage_counterpart(os, 1);
        EXPECT_EQ(theta.role, Role::OneStage);
        const double count = static_cast<double>(theta.params.total_elements());
        EXPECT_LE(std::abs(count / target - 1.0), kOneStageParity) << count << " vs " << target;
    }
}

TEST(OneStage, ShapePreservedOnRaw) {
    auto spec = small_spec();
    const auto os = one_stage_spec(spec);
    auto theta = build_one_stage_counterpart(os, 2);
    perturb(theta, 3);
    auto raw = random_raw(32, 40, 4);
    auto y = run_one_stage(raw, theta, os);
    EXPECT_EQ(y.height(), 32);
    EXPECT_EQ(y.width(), 40);
}

TEST(PipelineSpec, JsonRoundTripAndErrors) {
    auto spec = small_spec();
    EXPECT_EQ(pipeline_spec_from_json(to_json(spec)), spec);
    try {
        pipeline_spec_from_json({{"restore", {{"base_channels", "wide"}}}});
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("model.restore.base_channels"), std::string::npos) << e.what();
    }
    EXPECT_THROW(pipeline_spec_from_json({{"restore", {{"out_channels", 4}, {"global_skip", false}}}}),
                 ValidationError);
}
