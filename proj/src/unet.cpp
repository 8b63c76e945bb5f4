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

#include "isp/unet.hpp"

#include <cmath>
#include <random>

#include "isp/json_fields.hpp"

namespace isp::nn {

using ad::Tape;
using ad::Tensor;

std::string to_string(Role role) {
    switch (role) {
    case Role::Restore: return "restore";
    case Role::Enhance: return "enhance";
    case Role::OneStage: return "one_stage";
    }
    return "unknown";
}

Role role_from_string(const std::string& s) {
    if (s == "restore") return Role::Restore;
    if (s == "enhance") return Role::Enhance;
    if (s == "one_stage") return Role::OneStage;
    throw ValidationError("unknown module role '" + s + "'");
}

UNetSpec UNetSpec::restore() {
    UNetSpec s;
    s.dilations = {1, 1, 1, 1, 1};
    s.residual_blocks = false;
    s.abn = false;
    return s;
}

UNetSpec UNetSpec::enhance() {
    UNetSpec s;
    s.dilations = {1, 2, 2, 4, 8};
    s.residual_blocks = true;
    s.abn = true;
    return s;
}

std::vector<int> UNetSpec::channels_per_scale() const {
    std::vector<int> out;
    long c = base_channels;
    for (int s = 0; s < scales; ++s) {
        out.push_back(static_cast<int>(std::min<long>(c, max_channels)));
        c *= 2;
    }
    return out;
}

void UNetSpec::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ValidationError("invalid UNetSpec field '" + field + "': " + why);
    };
    if (scales < 2) fail("scales", "must be at least 2");
    if (scales > 12) fail("scales", "must be at most 12");
    if (base_channels < 1) fail("base_channels", "must be positive");
    if (max_channels < 1) fail("max_channels", "must be positive");
    if (blocks_per_scale < 0) fail("blocks_per_scale", "must be non-negative");
    if (static_cast<int>(dilations.size()) != scales) fail("dilations", "length must equal scales");
    for (int d : dilations) {
        if (d < 1) fail("dilations", "entries must be positive");
    }
    if (in_channels < 1) fail("in_channels", "must be positive");
    if (out_channels < 1) fail("out_channels", "must be positive");
    if (kernel_size < 1 || kernel_size % 2 == 0) fail("kernel_size", "must be a positive odd number");
    if (!(abn_eps > 0.0f)) fail("abn_eps", "must be positive");
    if (!(leaky_slope >= 0.0f && leaky_slope < 1.0f)) fail("leaky_slope", "must lie in [0, 1)");
    if (global_skip && in_channels != out_channels) {
        fail("global_skip", "requires in_channels == out_channels");
    }
}

nlohmann::json to_json(const UNetSpec& s) {
    return {{"scales", s.scales},
            {"base_channels", s.base_channels},
            {"max_channels", s.max_channels},
            {"blocks_per_scale", s.blocks_per_scale},
            {"dilations", s.dilations},
            {"residual_blocks", s.residual_blocks},
            {"abn", s.abn},
            {"global_component", s.global_component},
            {"global_skip", s.global_skip},
            {"in_channels", s.in_channels},
            {"out_channels", s.out_channels},
            {"kernel_size", s.kernel_size},
            {"leaky_slope", s.leaky_slope},
            {"abn_eps", s.abn_eps}};
}

UNetSpec unet_spec_from_json(const nlohmann::json& j, const std::string& context) {
    JsonFields f(j, context);
    UNetSpec s;
    std::string preset;
    f.get("preset", preset);
    if (preset == "restore") {
        s = UNetSpec::restore();
    } else if (preset == "enhance") {
        s = UNetSpec::enhance();
    } else if (!preset.empty()) {
        throw ValidationError("field '" + f.path("preset") + "' must be 'restore' or 'enhance'");
    }
    f.get("scales", s.scales);
    f.get("base_channels", s.base_channels);
    f.get("max_channels", s.max_channels);
    f.get("blocks_per_scale", s.blocks_per_scale);
    f.get("dilations", s.dilations);
    f.get("residual_blocks", s.residual_blocks);
    f.get("abn", s.abn);
    f.get("global_component", s.global_component);
    f.get("global_skip", s.global_skip);
    f.get("in_channels", s.in_channels);
    f.get("out_channels", s.out_channels);
    f.get("kernel_size", s.kernel_size);
    f.get("leaky_slope", s.leaky_slope);
    f.get("abn_eps", s.abn_eps);
    f.finish();
    try {
        s.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(context + ": " + e.what());
    }
    return s;
}

// initialization --------------------------------------------------------------

namespace {

struct Init {
    std::mt19937_64 rng;
    float slope;

    Tensor<float> uniform(ad::Shape shape, int fan_in) {
        const double bound = std::sqrt(6.0 / ((1.0 + slope * slope) * fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        std::vector<float> v(ad::numel(shape));
        for (float& x : v) x = static_cast<float>(dist(rng));
        return Tensor<float>(std::move(shape), std::move(v), true);
    }
};

struct ConvLayer {
    std::string prefix;
    int cin;
    int cout;
    bool abn;
    bool zero;
};

// Every conv of the network in construction order; the global FC pair is
// reported through `fc` with its channel count.
template <typename Conv, typename Fc>
void visit_layers(const UNetSpec& spec, Conv&& conv, Fc&& fc) {
    const auto ch = spec.channels_per_scale();
    const int last = spec.scales - 1;
    for (int s = 0; s < spec.scales; ++s) {
        const std::string enc = "enc" + std::to_string(s);
        conv(ConvLayer{enc + ".in", s == 0 ? spec.in_channels : ch[s - 1], ch[s], spec.abn, false});
        for (int b = 0; b < spec.blocks_per_scale; ++b) {
            conv(ConvLayer{enc + ".block" + std::to_string(b), ch[s], ch[s], spec.abn, false});
        }
    }
    if (spec.global_component) fc(ch[last]);
    for (int s = last - 1; s >= 0; --s) {
        const std::string dec = "dec" + std::to_string(s);
        conv(ConvLayer{dec + ".up", ch[s + 1], ch[s], spec.abn, false});
        conv(ConvLayer{dec + ".fuse", 2 * ch[s], ch[s], spec.abn, false});
        for (int b = 0; b < spec.blocks_per_scale; ++b) {
            conv(ConvLayer{dec + ".block" + std::to_string(b), ch[s], ch[s], spec.abn, false});
        }
    }
    conv(ConvLayer{"out", ch[0], spec.out_channels, false, spec.global_skip});
}

} // namespace

std::size_t parameter_count(const UNetSpec& spec) {
    spec.validate();
    const std::size_t kk = static_cast<std::size_t>(spec.kernel_size) * spec.kernel_size;
    std::size_t total = 0;
    visit_layers(
        spec,
        [&](const ConvLayer& l) {
            total += static_cast<std::size_t>(l.cout) * l.cin * kk + l.cout + (l.abn ? 2 * l.cout : 0);
        },
        [&](int c) { total += 2 * (static_cast<std::size_t>(c) * c + c); });
    return total;
}

ModuleParams<float> build_unet(const UNetSpec& spec, std::uint64_t seed, Role role) {
    spec.validate();
    ModuleParams<float> m;
    m.role = role;
    Init init{std::mt19937_64(seed), spec.leaky_slope};
    const int k = spec.kernel_size;
    auto& p = m.params;
    visit_layers(
        spec,
        [&](const ConvLayer& l) {
            p.add(l.prefix + ".weight", l.zero ? Tensor<float>::zeros({l.cout, l.cin, k, k}, true)
                                               : init.uniform({l.cout, l.cin, k, k}, l.cin * k * k));
            p.add(l.prefix + ".bias", Tensor<float>::zeros({l.cout}, true));
            if (l.abn) {
                p.add(l.prefix + ".abn.gain", Tensor<float>::full({l.cout}, 1.0f, true));
                p.add(l.prefix + ".abn.shift", Tensor<float>::zeros({l.cout}, true));
            }
        },
        [&](int c) {
            p.add("global.fc1.weight", init.uniform({c, c}, c));
            p.add("global.fc1.bias", Tensor<float>::zeros({c}, true));
            p.add("global.fc2.weight", Tensor<float>::zeros({c, c}, true));
            p.add("global.fc2.bias", Tensor<float>::full({c}, 1.0f, true));
        });
    return m;
}

// forward ---------------------------------------------------------------------

template <typename T>
Tensor<T> adaptive_batch_norm(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& shift,
                              T stats_eps) {
    return ad::channel_affine(tape, ad::instance_norm(tape, x, stats_eps), gain, shift);
}

template <typename T>
Tensor<T> global_component(Tape<T>& tape, const Tensor<T>& h5_in, const Tensor<T>& fc1_weight,
                           const Tensor<T>& fc1_bias, const Tensor<T>& fc2_weight, const Tensor<T>& fc2_bias,
                           const Tensor<T>& u5_output) {
    auto pooled = ad::global_avg_pool(tape, h5_in);
    auto flat = ad::reshape(tape, pooled, {h5_in.dim(0), h5_in.dim(1)});
    auto hidden = ad::fully_connected(tape, flat, fc1_weight, fc1_bias);
    auto scale = ad::fully_connected(tape, hidden, fc2_weight, fc2_bias);
    return ad::mul_per_channel(tape, u5_output, scale);
}

template <typename T>
Tensor<T> conv_block(Tape<T>& tape, const Tensor<T>& x, const ad::ParamSet<T>& params, const std::string& prefix,
                     const UNetSpec& spec, int stride, int dilation) {
    auto y = ad::conv2d(tape, x, params.at(prefix + ".weight"), params.at(prefix + ".bias"),
                        {.stride = stride, .dilation = dilation, .padding = ad::Padding::Same});
    if (spec.abn) {
        y = adaptive_batch_norm(tape, y, params.at(prefix + ".abn.gain"), params.at(prefix + ".abn.shift"),
                                static_cast<T>(spec.abn_eps));
    }
    return ad::leaky_relu(tape, y, static_cast<T>(spec.leaky_slope));
}

template <typename T>
Tensor<T> residual_block(Tape<T>& tape, const Tensor<T>& x, const ad::ParamSet<T>& params, const std::string& prefix,
                         const UNetSpec& spec, int dilation) {
    return ad::add(tape, x, conv_block(tape, x, params, prefix, spec, 1, dilation));
}

namespace {

template <typename T>
Tensor<T> processing_block(Tape<T>& tape, const Tensor<T>& x, const ad::ParamSet<T>& params,
                           const std::string& prefix, const UNetSpec& spec, int dilation) {
    if (spec.residual_blocks) return residual_block(tape, x, params, prefix, spec, dilation);
    return conv_block(tape, x, params, prefix, spec, 1, dilation);
}

} // namespace

template <typename T>
Tensor<T> forward_unet(Tape<T>& tape, const ModuleParams<T>& m, const UNetSpec& spec, const Tensor<T>& input) {
    spec.validate();
    if (input.ndim() != 4 || input.dim(0) != 1 || input.dim(1) != spec.in_channels) {
        throw ShapeError("forward_unet: input must be [1, " + std::to_string(spec.in_channels) + ", H, W], got " +
                         ad::to_string(input.shape()));
    }
    const int mult = spec.extent_multiple();
    if (input.dim(2) % mult != 0 || input.dim(3) % mult != 0) {
        throw ValidationError("forward_unet: spatial extents " + std::to_string(input.dim(2)) + "x" +
                              std::to_string(input.dim(3)) + " are not divisible by " + std::to_string(mult) +
                              "; pad the input to a multiple of " + std::to_string(mult));
    }
    const auto& p = m.params;
    const int last = spec.scales - 1;
    std::vector<Tensor<T>> skips(static_cast<std::size_t>(spec.scales));

    Tensor<T> h = input;
    for (int s = 0; s < spec.scales; ++s) {
        const std::string enc = "enc" + std::to_string(s);
        h = conv_block(tape, h, p, enc + ".in", spec, s == 0 ? 1 : 2, 1);
        const Tensor<T> scale_in = h;
        for (int b = 0; b < spec.blocks_per_scale; ++b) {
            h = processing_block(tape, h, p, enc + ".block" + std::to_string(b), spec, spec.dilations[s]);
        }
        if (s == last && spec.global_component) {
            h = global_component(tape, scale_in, p.at("global.fc1.weight"), p.at("global.fc1.bias"),
                                 p.at("global.fc2.weight"), p.at("global.fc2.bias"), h);
        }
        skips[s] = h;
    }
    for (int s = last - 1; s >= 0; --s) {
        const std::string dec = "dec" + std::to_string(s);
        auto up = conv_block(tape, ad::upsample_nearest2x(tape, h), p, dec + ".up", spec, 1, 1);
        h = conv_block(tape, ad::concat_channels(tape, up, skips[s]), p, dec + ".fuse", spec, 1, 1);
        for (int b = 0; b < spec.blocks_per_scale; ++b) {
            h = processing_block(tape, h, p, dec + ".block" + std::to_string(b), spec, spec.dilations[s]);
        }
    }
    auto out = ad::conv2d(tape, h, p.at("out.weight"), p.at("out.bias"));
    if (spec.global_skip) out = ad::add(tape, out, input);
    return out;
}

#define ISP_INSTANTIATE_UNET(T)                                                                                 \
    template Tensor<T> forward_unet(Tape<T>&, const ModuleParams<T>&, const UNetSpec&, const Tensor<T>&);      \
    template Tensor<T> global_component(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
                                        const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                  \
    template Tensor<T> adaptive_batch_norm(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);  \
    template Tensor<T> conv_block(Tape<T>&, const Tensor<T>&, const ad::ParamSet<T>&, const std::string&,       \
                                  const UNetSpec&, int, int);                                                   \
    template Tensor<T> residual_block(Tape<T>&, const Tensor<T>&, const ad::ParamSet<T>&, const std::string&,   \
                                      const UNetSpec&, int);

ISP_INSTANTIATE_UNET(float)
ISP_INSTANTIATE_UNET(double)
ISP_INSTANTIATE_UNET(long double)

#undef ISP_INSTANTIATE_UNET

} // namespace isp::nn
