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

#include "isp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "isp/json_fields.hpp"
#include "isp/prep.hpp"

namespace isp::synth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

double smoothstep01(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

} // namespace

double Range::sample(std::mt19937_64& rng) const { return lo + (hi - lo) * uniform01(rng); }

// config ----------------------------------------------------------------------

void SynthConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ValidationError("synth config field '" + field + "': " + why);
    };
    auto range = [&](const Range& r, const std::string& field, double min, double max) {
        if (!(r.lo <= r.hi)) fail(field, "lower bound exceeds upper bound");
        if (!(r.lo >= min && r.hi <= max)) {
            fail(field, "must lie within [" + std::to_string(min) + ", " + std::to_string(max) + "]");
        }
    };
    if (height < 16 || width < 16 || height % 2 || width % 2) fail("image.height/width", "must be even and >= 16");
    if (pattern != "random") cfa_pattern_from_string(pattern);
    if (black_level < 0 || white_level > 65535 || black_level >= white_level) {
        fail("image.black_level/white_level", "need 0 <= black < white <= 65535");
    }
    if (shapes_min < 0 || shapes_max < shapes_min) fail("scene.shapes", "need 0 <= min <= max");
    if (!(edge_softness >= 1.0)) fail("scene.edge_softness", "must be >= 1");
    if (!(texture_period_min >= 4.0)) fail("scene.texture_period_min", "must be >= 4");
    range(color, "scene.color", 0.0, 1.0);
    range(texture_amplitude, "scene.texture_amplitude", 0.0, 0.5);
    range(shading, "scene.shading", 0.0, 1.0);
    if (!(color_jitter >= 0.0 && color_jitter <= 0.3)) fail("camera.color_jitter", "must lie within [0, 0.3]");
    if (!(matrix_spread >= 0.0 && matrix_spread <= 0.2)) fail("camera.matrix_spread", "must lie within [0, 0.2]");
    range(wb_red, "camera.wb_red", 0.25, 8.0);
    range(wb_blue, "camera.wb_blue", 0.25, 8.0);
    range(exposure, "camera.exposure", 1e-3, 4.0);
    range(vignette_strength, "camera.vignette_strength", 0.0, 2.0);
    if (bad_pixels_max < 0) fail("camera.bad_pixels_max", "must be non-negative");
    range(shot_gain, "noise.shot_gain", 0.0, 0.1);
    range(read_sigma, "noise.read_sigma", 0.0, 0.2);
    range(brightness, "enhancement.brightness", 0.1, 4.0);
    range(local_contrast, "enhancement.local_contrast", 0.0, 3.0);
    if (!(contrast_blur_sigma > 0.0)) fail("enhancement.contrast_blur_sigma", "must be positive");
    if (!(gamma >= 1.0 && gamma <= 4.0)) fail("enhancement.gamma", "must lie within [1, 4]");
    range(s_curve, "enhancement.s_curve", 0.0, 1.0);
    range(saturation, "enhancement.saturation", 0.0, 3.0);
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) fail("split.test_fraction", "must lie within [0, 1]");
}

namespace {

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

void get_range(JsonFields& f, const std::string& key, Range& r) {
    std::array<double, 2> v{r.lo, r.hi};
    f.get(key, v);
    r = {v[0], v[1]};
}

} // namespace

json to_json(const SynthConfig& c) {
    return {{"preset", c.preset},
            {"image",
             {{"height", c.height},
              {"width", c.width},
              {"pattern", c.pattern},
              {"black_level", c.black_level},
              {"white_level", c.white_level}}},
            {"scene",
             {{"shapes_min", c.shapes_min},
              {"shapes_max", c.shapes_max},
              {"edge_softness", c.edge_softness},
              {"texture_period_min", c.texture_period_min},
              {"color", range_json(c.color)},
              {"texture_amplitude", range_json(c.texture_amplitude)},
              {"shading", range_json(c.shading)}}},
            {"camera",
             {{"identity", c.identity_color},
              {"color_jitter", c.color_jitter},
              {"matrix_spread", c.matrix_spread},
              {"wb_red", range_json(c.wb_red)},
              {"wb_blue", range_json(c.wb_blue)},
              {"exposure", range_json(c.exposure)},
              {"vignette_strength", range_json(c.vignette_strength)},
              {"bad_pixels_max", c.bad_pixels_max}}},
            {"noise",
             {{"enabled", c.noise}, {"shot_gain", range_json(c.shot_gain)}, {"read_sigma", range_json(c.read_sigma)}}},
            {"enhancement",
             {{"identity", c.identity_enhancement},
              {"brightness", range_json(c.brightness)},
              {"local_contrast", range_json(c.local_contrast)},
              {"contrast_blur_sigma", c.contrast_blur_sigma},
              {"gamma", c.gamma},
              {"s_curve", range_json(c.s_curve)},
              {"saturation", range_json(c.saturation)}}},
            {"split", {{"test_fraction", c.test_fraction}}}};
}

SynthConfig synth_config_from_json(const json& j, const std::string& context) {
    JsonFields f(j, context);
    SynthConfig c;
    f.get("preset", c.preset);
    auto group = [&](const char* name, auto&& body) {
        if (!f.has(name)) return;
        JsonFields g(f.raw(name), f.path(name));
        body(g);
        g.finish();
    };
    group("image", [&](JsonFields& g) {
        g.get("height", c.height);
        g.get("width", c.width);
        g.get("pattern", c.pattern);
        g.get("black_level", c.black_level);
        g.get("white_level", c.white_level);
    });
    group("scene", [&](JsonFields& g) {
        g.get("shapes_min", c.shapes_min);
        g.get("shapes_max", c.shapes_max);
        g.get("edge_softness", c.edge_softness);
        g.get("texture_period_min", c.texture_period_min);
        get_range(g, "color", c.color);
        get_range(g, "texture_amplitude", c.texture_amplitude);
        get_range(g, "shading", c.shading);
    });
    group("camera", [&](JsonFields& g) {
        g.get("identity", c.identity_color);
        g.get("color_jitter", c.color_jitter);
        g.get("matrix_spread", c.matrix_spread);
        get_range(g, "wb_red", c.wb_red);
        get_range(g, "wb_blue", c.wb_blue);
        get_range(g, "exposure", c.exposure);
        get_range(g, "vignette_strength", c.vignette_strength);
        g.get("bad_pixels_max", c.bad_pixels_max);
    });
    group("noise", [&](JsonFields& g) {
        g.get("enabled", c.noise);
        get_range(g, "shot_gain", c.shot_gain);
        get_range(g, "read_sigma", c.read_sigma);
    });
    group("enhancement", [&](JsonFields& g) {
        g.get("identity", c.identity_enhancement);
        get_range(g, "brightness", c.brightness);
        get_range(g, "local_contrast", c.local_contrast);
        g.get("contrast_blur_sigma", c.contrast_blur_sigma);
        g.get("gamma", c.gamma);
        get_range(g, "s_curve", c.s_curve);
        get_range(g, "saturation", c.saturation);
    });
    group("split", [&](JsonFields& g) { g.get("test_fraction", c.test_fraction); });
    f.finish();
    try {
        c.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(context + ": " + e.what());
    }
    return c;
}

SynthConfig load_synth_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open synth config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
    }
    return synth_config_from_json(j, path.filename().string());
}

json to_json(const SceneParams& p) {
    return {{"pattern", to_string(p.pattern)},
            {"xyz_to_camera", p.xyz_to_camera},
            {"wb", p.wb},
            {"exposure", p.exposure},
            {"shot_gain", p.shot_gain},
            {"read_sigma", p.read_sigma},
            {"vignette_strength", p.vignette_strength},
            {"bad_pixels", p.bad_pixels},
            {"brightness", p.brightness},
            {"local_contrast", p.local_contrast},
            {"s_curve", p.s_curve},
            {"saturation", p.saturation}};
}

// image operators -------------------------------------------------------------

SrgbImage render_scene(std::mt19937_64& rng, const SynthConfig& c) {
    const int h = c.height, w = c.width;
    auto color = [&] {
        return std::array<double, 3>{c.color.sample(rng), c.color.sample(rng), c.color.sample(rng)};
    };
    std::array<std::array<double, 3>, 4> corners{color(), color(), color(), color()};
    std::vector<double> img(static_cast<std::size_t>(h) * w * 3);
    for (int y = 0; y < h; ++y) {
        const double v = static_cast<double>(y) / (h - 1);
        for (int x = 0; x < w; ++x) {
            const double u = static_cast<double>(x) / (w - 1);
            for (int k = 0; k < 3; ++k) {
                img[(static_cast<std::size_t>(y) * w + x) * 3 + k] =
                    (1 - v) * ((1 - u) * corners[0][k] + u * corners[1][k]) +
                    v * ((1 - u) * corners[2][k] + u * corners[3][k]);
            }
        }
    }

    const double soft = c.edge_softness;
    const double extent = std::min(h, w);
    const int shapes = uniform_int(rng, c.shapes_min, c.shapes_max);
    for (int s = 0; s < shapes; ++s) {
        const bool ellipse = uniform01(rng) < 0.5;
        const double cx = uniform01(rng) * w, cy = uniform01(rng) * h;
        // Half sizes leave room for rounded corners of radius `soft`.
        const double a = soft + 1.0 + uniform01(rng) * 0.3 * extent;
        const double b = soft + 1.0 + uniform01(rng) * 0.3 * extent;
        const double angle = uniform01(rng) * std::numbers::pi;
        const auto col = color();
        const bool textured = uniform01(rng) < 0.5;
        const double period = c.texture_period_min * (1.0 + uniform01(rng));
        const double phi = uniform01(rng) * std::numbers::pi;
        const double phase = uniform01(rng) * 2.0 * std::numbers::pi;
        const double amp = textured ? c.texture_amplitude.sample(rng) : 0.0;
        const double shade = c.shading.sample(rng);
        const double shade_dir = uniform01(rng) * 2.0 * std::numbers::pi;
        const double ca = std::cos(angle), sa = std::sin(angle);
        const double sx = std::cos(shade_dir) / (2.0 * std::max(a, b));
        const double sy = std::sin(shade_dir) / (2.0 * std::max(a, b));
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double dx = x - cx, dy = y - cy;
                const double pu = ca * dx + sa * dy, pv = -sa * dx + ca * dy;
                double inside; // signed distance, positive inside
                if (ellipse) {
                    inside = (1.0 - std::hypot(pu / a, pv / b)) * std::min(a, b);
                } else {
                    const double qx = std::abs(pu) - (a - soft), qy = std::abs(pv) - (b - soft);
                    const double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0)) +
                                           std::min(std::max(qx, qy), 0.0) - soft;
                    inside = -outside;
                }
                const double alpha = smoothstep01(inside / soft + 0.5);
                if (alpha == 0.0) continue;
                // Linear shading across the shape, then the optional texture.
                const double mod =
                    (1.0 + shade * (sx * dx + sy * dy)) *
                    (1.0 + amp * std::sin(2.0 * std::numbers::pi * (x * std::cos(phi) + y * std::sin(phi)) / period +
                                          phase));
                double* px = &img[(static_cast<std::size_t>(y) * w + x) * 3];
                for (int k = 0; k < 3; ++k) px[k] = (1.0 - alpha) * px[k] + alpha * col[k] * mod;
            }
        }
    }
    std::vector<float> out(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = static_cast<float>(std::clamp(img[i], 0.0, 1.0));
    return SrgbImage(h, w, std::move(out));
}

std::vector<float> gaussian_blur(std::span<const float> hwc, int height, int width, double sigma) {
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * r + 1);
    double ks = 0.0;
    for (int i = -r; i <= r; ++i) ks += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& v : k) v /= ks;
    std::vector<double> tmp(hwc.size());
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) {
                double s = 0.0;
                for (int i = -r; i <= r; ++i) {
                    s += k[i + r] * hwc[(static_cast<std::size_t>(y) * width + reflect101(x + i, width)) * 3 + c];
                }
                tmp[(static_cast<std::size_t>(y) * width + x) * 3 + c] = s;
            }
    std::vector<float> out(hwc.size());
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) {
                double s = 0.0;
                for (int i = -r; i <= r; ++i) {
                    s += k[i + r] * tmp[(static_cast<std::size_t>(reflect101(y + i, height)) * width + x) * 3 + c];
                }
                out[(static_cast<std::size_t>(y) * width + x) * 3 + c] = static_cast<float>(s);
            }
    return out;
}

SrgbImage enhance_image(const SrgbImage& linear, const EnhanceParams& p) {
    const int h = linear.height(), w = linear.width();
    std::vector<float> x(linear.data().begin(), linear.data().end());
    for (float& v : x) v = static_cast<float>(std::clamp(static_cast<double>(v), 0.0, 1.0) * p.brightness);
    const auto blurred = gaussian_blur(x, h, w, p.blur_sigma);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lc = x[i] + p.local_contrast * (x[i] - blurred[i]);
        const double g = std::pow(std::clamp(lc, 0.0, 1.0), 1.0 / p.gamma);
        y[i] = (1.0 - p.s_curve) * g + p.s_curve * smoothstep01(g);
    }
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); i += 3) {
        const double luma = 0.2126 * y[i] + 0.7152 * y[i + 1] + 0.0722 * y[i + 2];
        for (int c = 0; c < 3; ++c) {
            out[i + c] = static_cast<float>(std::clamp(luma + p.saturation * (y[i + c] - luma), 0.0, 1.0));
        }
    }
    return SrgbImage(h, w, std::move(out));
}

std::vector<float> mosaic(const CameraImage& img, CfaPattern pattern) {
    if (img.height() % 2 || img.width() % 2) throw ValidationError("mosaic needs even extents");
    std::vector<float> out(img.pixels());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out[static_cast<std::size_t>(y) * img.width() + x] = img.at(y, x, cfa_channel(pattern, y, x));
    return out;
}

void add_noise(std::span<float> m, double shot_gain, double read_sigma, std::uint64_t seed) {
    if (shot_gain < 0.0 || read_sigma < 0.0) throw ValidationError("noise parameters must be non-negative");
    if (shot_gain == 0.0 && read_sigma == 0.0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> read(0.0, read_sigma > 0.0 ? read_sigma : 1.0);
    for (float& v : m) {
        double out = v;
        if (shot_gain > 0.0) {
            const double mean = std::max(0.0, static_cast<double>(v)) / shot_gain;
            out = mean > 0.0 ? static_cast<double>(std::poisson_distribution<long long>(mean)(rng)) * shot_gain : 0.0;
        }
        if (read_sigma > 0.0) out += read(rng);
        v = static_cast<float>(std::max(0.0, out));
    }
}

// generation ------------------------------------------------------------------

std::uint64_t scene_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

GeneratedScene generate_scene(std::uint64_t seed, const SynthConfig& c, const std::string& scene_id) {
    c.validate();
    std::mt19937_64 rng(seed);
    SceneParams p;
    static constexpr CfaPattern kAll[] = {CfaPattern::RGGB, CfaPattern::BGGR, CfaPattern::GRBG, CfaPattern::GBRG};
    p.pattern = c.pattern == "random" ? kAll[rng() % 4] : cfa_pattern_from_string(c.pattern);

    const SrgbImage linear = render_scene(rng, c);

    CaptureMetadata meta;
    if (c.identity_color) {
        p.xyz_to_camera = kIdentity3;
        p.wb = {1.0, 1.0, 1.0};
        p.exposure = 1.0;
        meta.color_matrix_1 = meta.color_matrix_2 = kIdentity3;
    } else {
        Mat3 jitter = kIdentity3;
        for (double& v : jitter) v += c.color_jitter * (2.0 * uniform01(rng) - 1.0);
        Mat3 m = multiply(jitter, kXyzToSrgb);
        // Rows scaled so that D65 white maps to camera (1, 1, 1).
        constexpr double white[3] = {0.95047, 1.0, 1.08883};
        for (int r = 0; r < 3; ++r) {
            const double s = m[r * 3] * white[0] + m[r * 3 + 1] * white[1] + m[r * 3 + 2] * white[2];
            for (int k = 0; k < 3; ++k) m[r * 3 + k] /= s;
        }
        p.xyz_to_camera = m;
        for (int i = 0; i < 9; ++i) {
            const double d = c.matrix_spread * (2.0 * uniform01(rng) - 1.0);
            meta.color_matrix_1[i] = m[i] + d;
            meta.color_matrix_2[i] = m[i] - d;
        }
        p.wb = {c.wb_red.sample(rng), 1.0, c.wb_blue.sample(rng)};
        p.exposure = c.exposure.sample(rng);
        p.vignette_strength = c.vignette_strength.sample(rng);
        p.bad_pixels = c.bad_pixels_max > 0 ? uniform_int(rng, 0, c.bad_pixels_max) : 0;
    }
    if (c.noise) {
        p.shot_gain = c.shot_gain.sample(rng);
        p.read_sigma = c.read_sigma.sample(rng);
    }
    EnhanceParams ep;
    ep.blur_sigma = c.contrast_blur_sigma;
    ep.gamma = c.gamma;
    if (!c.identity_enhancement) {
        p.brightness = ep.brightness = c.brightness.sample(rng);
        p.local_contrast = ep.local_contrast = c.local_contrast.sample(rng);
        p.s_curve = ep.s_curve = c.s_curve.sample(rng);
        p.saturation = ep.saturation = c.saturation.sample(rng);
    }
    const std::uint64_t noise_seed = rng();

    GeneratedScene out;
    out.params = p;
    SampleTriplet& t = out.triplet;
    t.scene_id = scene_id;
    t.g_rest = srgb_to_xyz(linear);
    const SrgbImage srgb = xyz_to_srgb(t.g_rest);
    t.g_enh = c.identity_enhancement ? srgb : enhance_image(srgb, ep);

    // Inverse restoration path.
    const int h = c.height, w = c.width;
    CameraImage cam = xyz_to_camera_rgb(t.g_rest, meta);
    std::vector<float> gain;
    if (p.vignette_strength > 0.0) {
        gain.resize(static_cast<std::size_t>(h) * w);
        const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0, norm = cx * cx + cy * cy;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double r2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / norm;
                gain[static_cast<std::size_t>(y) * w + x] = static_cast<float>(1.0 + p.vignette_strength * r2);
            }
        meta.vignette_gain = gain;
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < 3; ++k) {
                double v = cam.at(y, x, k) / p.wb[k] * p.exposure;
                if (!gain.empty()) v /= gain[static_cast<std::size_t>(y) * w + x];
                cam.at(y, x, k) = static_cast<float>(v);
            }
    std::vector<float> m = mosaic(cam, p.pattern);
    add_noise(m, p.shot_gain, p.read_sigma, noise_seed);

    RawImage& raw = t.raw;
    raw.height = h;
    raw.width = w;
    raw.pattern = p.pattern;
    raw.black_level = {c.black_level, c.black_level, c.black_level};
    raw.white_level = {c.white_level, c.white_level, c.white_level};
    const double range = c.white_level - c.black_level;
    raw.cfa.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double dn = std::round(static_cast<double>(m[i]) * range + c.black_level);
        raw.cfa[i] = static_cast<std::uint16_t>(std::clamp(dn, 0.0, static_cast<double>(c.white_level)));
    }
    if (p.bad_pixels > 0) {
        std::mt19937_64 brng(noise_seed ^ 0x5bd1e995ULL);
        std::set<std::pair<int, int>> used;
        while (static_cast<int>(used.size()) < p.bad_pixels) {
            const int y = static_cast<int>(brng() % h), x = static_cast<int>(brng() % w);
            if (!used.insert({y, x}).second) continue;
            raw.cfa[static_cast<std::size_t>(y) * w + x] =
                (brng() & 1) ? static_cast<std::uint16_t>(c.white_level) : std::uint16_t{0};
            meta.bad_pixels.push_back({y, x});
        }
    }
    raw.metadata = std::move(meta);
    raw.metadata.wb_gains = p.wb;
    t.validate();
    return out;
}

Manifest synthesize_corpus(const fs::path& dir, const SynthConfig& config, int count, std::uint64_t seed) {
    config.validate();
    if (count < 0) throw ValidationError("scene count must be non-negative");
    fs::create_directories(dir);
    int n_test = 0;
    if (count > 1 && config.test_fraction > 0.0) {
        n_test = std::clamp(static_cast<int>(std::lround(count * config.test_fraction)), 1, count - 1);
    }
    Manifest m;
    m.generator = {{"config", to_json(config)}, {"seed", seed}, {"count", count}};
    for (int i = 0; i < count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "scene_%04d", i);
        const std::uint64_t s = scene_seed(seed, static_cast<std::uint64_t>(i));
        const auto scene = generate_scene(s, config, id);
        const std::string split = i >= count - n_test ? "test" : "train";
        m.scenes.push_back(write_scene(dir, scene.triplet, split,
                                       {{"seed", s}, {"index", i}, {"params", to_json(scene.params)}}));
    }
    save_dataset(m, dir / "manifest.json");
    return m;
}

GeneratedScene regenerate(const Manifest& manifest, const SceneRecord& record) {
    if (!manifest.generator.contains("config")) throw ValidationError("manifest has no generator config");
    if (!record.provenance.contains("seed")) throw ValidationError("scene '" + record.scene_id + "' has no seed");
    const auto config = synth_config_from_json(manifest.generator.at("config"), "generator.config");
    return generate_scene(record.provenance.at("seed").get<std::uint64_t>(), config, record.scene_id);
}

} // namespace isp::synth
