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

#include "isp/pipeline.hpp"

#include <cmath>
#include <random>

#include "isp/json_fields.hpp"

namespace isp {

using nn::ModuleParams;
using nn::UNetSpec;

void PipelineSpec::validate() const {
    auto check = [](const UNetSpec& s, const char* name) {
        try {
            s.validate();
        } catch (const ValidationError& e) {
            throw ValidationError(std::string(name) + ": " + e.what());
        }
        if (s.in_channels != 3 || s.out_channels != 3) {
            throw ValidationError(std::string(name) + ": pipeline networks map 3 channels to 3 channels");
        }
    };
    check(restore, "restore");
    check(enhance, "enhance");
}

nlohmann::json to_json(const PipelineSpec& spec) {
    return {{"restore", nn::to_json(spec.restore)}, {"enhance", nn::to_json(spec.enhance)}};
}

PipelineSpec pipeline_spec_from_json(const nlohmann::json& j, const std::string& context) {
    JsonFields f(j, context);
    PipelineSpec spec;
    if (f.has("restore")) spec.restore = nn::unet_spec_from_json(f.raw("restore"), f.path("restore"));
    if (f.has("enhance")) spec.enhance = nn::unet_spec_from_json(f.raw("enhance"), f.path("enhance"));
    f.finish();
    spec.validate();
    return spec;
}

IspModel build_model(const PipelineSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::seed_seq seq{seed, std::uint64_t{0x15b}};
    std::array<std::uint64_t, 2> seeds{};
    seq.generate(seeds.begin(), seeds.end());
    return {spec, nn::build_unet(spec.restore, seeds[0], nn::Role::Restore),
            nn::build_unet(spec.enhance, seeds[1], nn::Role::Enhance)};
}

namespace {

template <typename T>
void require_space(const TaggedTensor<T>& t, ColorSpace want, const char* stage) {
    if (t.space != want) {
        throw ValidationError(std::string(stage) + ": tag mismatch (expected " + to_string(want) + ", got " +
                              to_string(t.space) + ")");
    }
}

} // namespace

template <typename T>
TaggedTensor<T> restore(ad::Tape<T>& tape, const TaggedTensor<T>& xyz, const ModuleParams<T>& theta1,
                        const UNetSpec& spec) {
    require_space(xyz, ColorSpace::XYZ, "restore");
    return {nn::forward_unet(tape, theta1, spec, xyz.tensor), ColorSpace::XYZ};
}

template <typename T>
TaggedTensor<T> to_srgb(ad::Tape<T>& tape, const TaggedTensor<T>& xyz) {
    require_space(xyz, ColorSpace::XYZ, "to_srgb");
    return {ad::channel_mix(tape, xyz.tensor, kXyzToSrgb), ColorSpace::SRGB};
}

template <typename T>
TaggedTensor<T> enhance(ad::Tape<T>& tape, const TaggedTensor<T>& srgb, const ModuleParams<T>& theta2,
                        const UNetSpec& spec) {
    require_space(srgb, ColorSpace::SRGB, "enhance");
    return {nn::forward_unet(tape, theta2, spec, srgb.tensor), ColorSpace::SRGB};
}

template TaggedTensor<float> restore(ad::Tape<float>&, const TaggedTensor<float>&, const ModuleParams<float>&,
                                     const UNetSpec&);
template TaggedTensor<double> restore(ad::Tape<double>&, const TaggedTensor<double>&, const ModuleParams<double>&,
                                      const UNetSpec&);
template TaggedTensor<float> to_srgb(ad::Tape<float>&, const TaggedTensor<float>&);
template TaggedTensor<double> to_srgb(ad::Tape<double>&, const TaggedTensor<double>&);
template TaggedTensor<float> enhance(ad::Tape<float>&, const TaggedTensor<float>&, const ModuleParams<float>&,
                                     const UNetSpec&);
template TaggedTensor<double> enhance(ad::Tape<double>&, const TaggedTensor<double>&, const ModuleParams<double>&,
                                      const UNetSpec&);

XyzImage restore(const XyzImage& xyz, const ModuleParams<float>& theta1, const UNetSpec& spec) {
    ad::Tape<float> tape(false);
    return image_from_tensor<ColorSpace::XYZ>(restore(tape, tagged(xyz), theta1, spec).tensor);
}

SrgbImage enhance(const SrgbImage& srgb, const ModuleParams<float>& theta2, const UNetSpec& spec) {
    ad::Tape<float> tape(false);
    return image_from_tensor<ColorSpace::SRGB>(enhance(tape, tagged(srgb), theta2, spec).tensor);
}

namespace {

template <ColorSpace S, typename F>
Image<S> padded(const Image<S>& img, int multiple, F&& net) {
    if (img.height() % multiple == 0 && img.width() % multiple == 0) return net(img);
    return crop(net(pad_to_multiple(img, multiple)), 0, 0, img.height(), img.width());
}

XyzImage raw_to_xyz(const RawImage& raw, const PrepareOptions& opts) {
    return camera_rgb_to_xyz(prepare(raw, opts), raw.metadata);
}

} // namespace

FullRun run_full(const RawImage& raw, const IspModel& model, const PrepareOptions& opts) {
    const auto& spec = model.spec;
    XyzImage raw_xyz = raw_to_xyz(raw, opts);
    XyzImage rest_xyz = padded(raw_xyz, spec.restore.extent_multiple(),
                               [&](const XyzImage& x) { return restore(x, model.restore, spec.restore); });
    SrgbImage enh_srgb = padded(xyz_to_srgb(rest_xyz), spec.enhance.extent_multiple(),
                                [&](const SrgbImage& x) { return enhance(x, model.enhance, spec.enhance); });
    return {std::move(raw_xyz), std::move(rest_xyz), std::move(enh_srgb)};
}

SrgbImage baseline_srgb(const RawImage& raw, const PrepareOptions& opts) { return xyz_to_srgb(raw_to_xyz(raw, opts)); }

UNetSpec one_stage_spec(const PipelineSpec& spec, const std::optional<UNetSpec>& base) {
    spec.validate();
    const double target =
        static_cast<double>(nn::parameter_count(spec.restore) + nn::parameter_count(spec.enhance));
    UNetSpec s = base.value_or(spec.enhance);
    s.blocks_per_scale *= 2;
    s.validate();
    // Smallest widening of (base, cap) that reaches parity, in steps of 1/8 of
    // the starting widths; falls back to the closest count.
    const int b0 = s.base_channels, m0 = s.max_channels;
    UNetSpec best = s;
    int best_steps = 0;
    double best_err = std::abs(static_cast<double>(nn::parameter_count(s)) / target - 1.0);
    for (int bs = 0; bs <= 16; ++bs) {
        for (int ms = 0; ms <= 16; ++ms) {
            UNetSpec cand = s;
            cand.base_channels = b0 + (b0 * bs + 7) / 8;
            cand.max_channels = m0 + (m0 * ms + 7) / 8;
            const double err = std::abs(static_cast<double>(nn::parameter_count(cand)) / target - 1.0);
            const bool ok = err <= kOneStageParity, best_ok = best_err <= kOneStageParity;
            const bool better = ok ? (!best_ok || bs + ms < best_steps || (bs + ms == best_steps && err < best_err))
                                   : (!best_ok && err < best_err);
            if (better) {
                best = cand;
                best_err = err;
                best_steps = bs + ms;
            }
        }
    }
    return best;
}

ModuleParams<float> build_one_stage_counterpart(const UNetSpec& one_stage, std::uint64_t seed) {
    return nn::build_unet(one_stage, seed, nn::Role::OneStage);
}

SrgbImage one_stage_input(const RawImage& raw, const PrepareOptions& opts) { return baseline_srgb(raw, opts); }

SrgbImage run_one_stage(const RawImage& raw, const ModuleParams<float>& theta, const UNetSpec& spec,
                        const PrepareOptions& opts) {
    return padded(one_stage_input(raw, opts), spec.extent_multiple(),
                  [&](const SrgbImage& x) { return enhance(x, theta, spec); });
}

} // namespace isp
