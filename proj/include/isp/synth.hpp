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
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "isp/dataset.hpp"
#include "isp/image.hpp"
#include "isp/raw.hpp"

// Synthetic triplets: a procedural clean scene (G_rest, XYZ), a parametric
// enhancement of it (G_enh, sRGB), and a raw mosaic produced by running the
// restoration path backwards (color matrix, white balance, exposure, mosaic,
// noise, quantization).
namespace isp::synth {

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    double sample(std::mt19937_64& rng) const;
    bool operator==(const Range&) const = default;
};

struct SynthConfig {
    std::string preset = "custom";
    int height = 128;
    int width = 128;
    std::string pattern = "random"; // or a fixed Bayer layout name
    int black_level = 512;
    int white_level = 16383;

    // scene
    int shapes_min = 4;
    int shapes_max = 8;
    double edge_softness = 14.0; // edge transition width in pixels
    double texture_period_min = 32.0;
    Range color{0.04, 0.7}; // linear sRGB range of scene colors
    Range texture_amplitude{0.05, 0.2};
    Range shading{0.3, 0.8}; // relative brightness change across a shape

    // camera
    bool identity_color = false; // camera RGB = XYZ, unit white balance, unit exposure
    double color_jitter = 0.1;
    double matrix_spread = 0.03;
    Range wb_red{1.6, 2.4};
    Range wb_blue{1.3, 2.0};
    Range exposure{0.4, 0.8};
    Range vignette_strength{0.0, 0.0};
    int bad_pixels_max = 0;

    // noise, in normalized units
    bool noise = true;
    Range shot_gain{1e-4, 5e-4};
    Range read_sigma{1e-3, 3e-3};

    // enhancement
    bool identity_enhancement = false;
    Range brightness{1.0, 1.6};
    Range local_contrast{0.2, 0.8};
    double contrast_blur_sigma = 4.0;
    double gamma = 2.2;
    Range s_curve{0.3, 0.8};
    Range saturation{1.0, 1.4};

    double test_fraction = 0.2;

    void validate() const;
    bool operator==(const SynthConfig&) const = default;
};

nlohmann::json to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j, const std::string& context = "synth");
SynthConfig load_synth_config(const std::filesystem::path& path);

// Parameters drawn for one scene.
struct SceneParams {
    CfaPattern pattern = CfaPattern::RGGB;
    Mat3 xyz_to_camera = kIdentity3;
    std::array<double, 3> wb{1.0, 1.0, 1.0};
    double exposure = 1.0;
    double shot_gain = 0.0;
    double read_sigma = 0.0;
    double vignette_strength = 0.0;
    int bad_pixels = 0;
    double brightness = 1.0;
    double local_contrast = 0.0;
    double s_curve = 0.0;
    double saturation = 1.0;
};

nlohmann::json to_json(const SceneParams& p);

struct EnhanceParams {
    double brightness = 1.0;
    double local_contrast = 0.0;
    double blur_sigma = 4.0;
    double gamma = 2.2;
    double s_curve = 0.0;
    double saturation = 1.0;
};

struct GeneratedScene {
    SampleTriplet triplet;
    SceneParams params;
};

// Deterministic in (seed, config).
GeneratedScene generate_scene(std::uint64_t seed, const SynthConfig& config, const std::string& scene_id = "scene");

// Clean linear sRGB scene.
SrgbImage render_scene(std::mt19937_64& rng, const SynthConfig& config);

// clamp -> brightness -> local contrast -> gamma -> S-curve -> saturation -> clamp.
SrgbImage enhance_image(const SrgbImage& linear, const EnhanceParams& p);

// Keeps the channel each site samples.
std::vector<float> mosaic(const CameraImage& img, CfaPattern pattern);

// v' = Poisson(v / shot_gain) * shot_gain + N(0, read_sigma), clamped at 0.
// shot_gain = 0 disables the shot term.
void add_noise(std::span<float> mosaic, double shot_gain, double read_sigma, std::uint64_t seed);

std::vector<float> gaussian_blur(std::span<const float> hwc, int height, int width, double sigma);

// Per-scene seed for index `i` of a corpus generated from `seed`.
std::uint64_t scene_seed(std::uint64_t seed, std::uint64_t index);

// Writes `count` scenes and a manifest at `dir`/manifest.json.
Manifest synthesize_corpus(const std::filesystem::path& dir, const SynthConfig& config, int count,
                           std::uint64_t seed);

// Rebuilds a scene from the manifest's generator config and the record's seed.
GeneratedScene regenerate(const Manifest& manifest, const SceneRecord& record);

} // namespace isp::synth
