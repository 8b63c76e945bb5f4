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
#include <fstream>
#include <random>

#include "isp/image.hpp"
#include "isp/io.hpp"
#include "isp/prep.hpp"
#include "isp/raw.hpp"

using namespace isp;
namespace fs = std::filesystem;

namespace {

constexpr CfaPattern kPatterns[] = {CfaPattern::RGGB, CfaPattern::BGGR, CfaPattern::GRBG, CfaPattern::GBRG};

// Closed-form inverse via the adjugate.
Mat3 adjugate_inverse(const Mat3& m) {
    const double a = m[0], b = m[1], c = m[2], d = m[3], e = m[4], f = m[5], g = m[6], h = m[7], i = m[8];
    const double det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
    return {(e * i - f * h) / det, (c * h - b * i) / det, (b * f - c * e) / det,
            (f * g - d * i) / det, (a * i - c * g) / det, (c * d - a * f) / det,
            (d * h - e * g) / det, (b * g - a * h) / det, (a * e - b * d) / det};
}

template <ColorSpace S>
Image<S> random_image(int h, int w, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> d(lo, hi);
    std::vector<float> v(static_cast<std::size_t>(h) * w * 3);
    for (float& x : v) x = d(rng);
    return Image<S>(h, w, std::move(v));
}

RawImage constant_raw(int h, int w, std::uint16_t v, CfaPattern p = CfaPattern::RGGB) {
    RawImage r;
    r.height = h;
    r.width = w;
    r.pattern = p;
    r.black_level = {512, 512, 512};
    r.white_level = {16383, 16383, 16383};
    r.cfa.assign(static_cast<std::size_t>(h) * w, v);
    return r;
}

fs::path temp_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("isp_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

template <typename I>
concept ConvertibleToXyz = requires(const I& img, const CaptureMetadata& m) { camera_rgb_to_xyz(img, m); };
template <typename I>
concept ConvertibleToSrgb = requires(const I& img) { xyz_to_srgb(img); };

} // namespace

// CFA -------------------------------------------------------------------------

TEST(Cfa, PatternTableAndNames) {
    EXPECT_EQ(cfa_channel(CfaPattern::RGGB, 0, 0), 0);
    EXPECT_EQ(cfa_channel(CfaPattern::RGGB, 1, 1), 2);
    EXPECT_EQ(cfa_channel(CfaPattern::BGGR, 0, 0), 2);
    EXPECT_EQ(cfa_channel(CfaPattern::GRBG, 0, 1), 0);
    EXPECT_EQ(cfa_channel(CfaPattern::GBRG, 1, 0), 0);
    for (auto p : kPatterns) {
        EXPECT_EQ(cfa_pattern_from_string(to_string(p)), p);
        // Phase is periodic, including at negative coordinates.
        for (int y = -4; y < 4; ++y)
            for (int x = -4; x < 4; ++x) EXPECT_EQ(cfa_channel(p, y, x), cfa_channel(p, y + 2, x + 2));
    }
    EXPECT_THROW(cfa_pattern_from_string("RGBW"), ValidationError);
}

TEST(Cfa, Reflect101PreservesParity) {
    for (int i = -6; i < 14; ++i) {
        const int r = reflect101(i, 8);
        EXPECT_GE(r, 0);
        EXPECT_LT(r, 8);
        EXPECT_EQ((r - i) % 2, 0);
    }
    EXPECT_EQ(reflect101(-1, 8), 1);
    EXPECT_EQ(reflect101(8, 8), 6);
}

// normalize_levels ------------------------------------------------------------

TEST(NormalizeLevels, Examples) {
    const std::vector<std::uint16_t> v{512, 16383, static_cast<std::uint16_t>(512 + (16383 - 512) / 4), 100,
                                       20000};
    auto n = normalize_levels(v, 512, 16383);
    EXPECT_FLOAT_EQ(n[0], 0.0f);
    EXPECT_FLOAT_EQ(n[1], 1.0f);
    EXPECT_NEAR(n[2], 0.25f, 1.0f / (16383 - 512));
    EXPECT_FLOAT_EQ(n[3], 0.0f);  // below black clamps to 0
    EXPECT_GT(n[4], 1.0f);        // headroom kept
    const std::vector<std::uint16_t> q{100, 300, 200};
    EXPECT_FLOAT_EQ(normalize_levels(q, 100, 500)[2], 0.25f);
    EXPECT_THROW(normalize_levels(q, 500, 500), ValidationError);
}

TEST(NormalizeLevels, PerChannelLevels) {
    std::vector<std::uint16_t> cfa{200, 300, 300, 400};
    auto n = normalize_levels(cfa, 2, 2, CfaPattern::RGGB, {100, 200, 300}, {300, 400, 500});
    EXPECT_FLOAT_EQ(n[0], 0.5f);
    EXPECT_FLOAT_EQ(n[1], 0.5f);
    EXPECT_FLOAT_EQ(n[2], 0.5f);
    EXPECT_FLOAT_EQ(n[3], 0.5f);
}

// demosaic --------------------------------------------------------------------

TEST(Demosaic, ConstantMosaic) {
    for (auto p : kPatterns) {
        std::vector<float> m(8 * 10, 0.37f);
        auto img = initial_demosaic(m, 8, 10, p);
        for (float v : img.data()) ASSERT_FLOAT_EQ(v, 0.37f);
    }
}

TEST(Demosaic, MeasuredSitesPreserved) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> d(0, 1);
    for (auto p : kPatterns) {
        std::vector<float> m(12 * 12);
        for (float& v : m) v = d(rng);
        auto img = initial_demosaic(m, 12, 12, p);
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 12; ++x) ASSERT_EQ(img.at(y, x, cfa_channel(p, y, x)), m[y * 12 + x]);
    }
}

TEST(Demosaic, GreenOnlyChecker) {
    for (auto p : kPatterns) {
        std::vector<float> m(8 * 8, 0.0f);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                if (cfa_channel(p, y, x) == 1) m[y * 8 + x] = 0.8f;
        auto img = initial_demosaic(m, 8, 8, p);
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) {
                EXPECT_EQ(img.at(y, x, 1), 0.8f);
                EXPECT_EQ(img.at(y, x, 0), 0.0f);
                EXPECT_EQ(img.at(y, x, 2), 0.0f);
            }
        }
    }
}

TEST(Demosaic, LinearRampsExactInInterior) {
    const int h = 16, w = 20;
    const double a[3] = {0.1, 0.2, 0.05}, bx[3] = {0.01, 0.02, 0.03}, by[3] = {0.0, -0.005, 0.015};
    for (auto p : kPatterns) {
        for (bool diagonal : {false, true}) {
            auto truth = [&](int y, int x, int c) { return a[c] + bx[c] * x + (diagonal ? by[c] * y : 0.0); };
            std::vector<float> m(h * w);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) m[y * w + x] = static_cast<float>(truth(y, x, cfa_channel(p, y, x)));
            auto img = initial_demosaic(m, h, w, p);
            for (int y = 1; y < h - 1; ++y)
                for (int x = 1; x < w - 1; ++x)
                    for (int c = 0; c < 3; ++c) ASSERT_NEAR(img.at(y, x, c), truth(y, x, c), 1e-6);
        }
    }
}

TEST(Demosaic, RejectsOddExtentsAndBadKernels) {
    std::vector<float> m(9, 0.0f);
    EXPECT_THROW(initial_demosaic(m, 3, 3, CfaPattern::RGGB), ValidationError);
    DemosaicKernels k = DemosaicKernels::bilinear();
    k.size = 4;
    std::vector<float> m2(16, 0.0f);
    EXPECT_THROW(initial_demosaic(m2, 4, 4, CfaPattern::RGGB, k), ValidationError);
}

TEST(Demosaic, AlternativeKernelSet) {
    // Box weights over the 8-neighbourhood.
    DemosaicKernels k;
    k.size = 3;
    const std::vector<float> box{1, 1, 1, 1, 0, 1, 1, 1, 1};
    k.weights = {box, box, box};
    std::vector<float> m(8 * 8, 0.5f);
    auto img = initial_demosaic(m, 8, 8, CfaPattern::RGGB, k);
    for (float v : img.data()) ASSERT_FLOAT_EQ(v, 0.5f);
}

// prepare ---------------------------------------------------------------------

TEST(Prepare, WhiteAndBlackMosaics) {
    for (auto p : kPatterns) {
        auto white = prepare(constant_raw(8, 8, 16383, p));
        for (float v : white.data()) ASSERT_FLOAT_EQ(v, 1.0f);
        auto black = prepare(constant_raw(8, 8, 512, p));
        for (float v : black.data()) ASSERT_EQ(v, 0.0f);
    }
}

TEST(Prepare, VignetteAppliedAfterNormalization) {
    auto raw = constant_raw(4, 4, 8512); // (8512 - 512) / (16512 - 512) = 0.5
    raw.white_level = {16512, 16512, 16512};
    raw.metadata.vignette_gain = std::vector<float>(16, 2.0f);
    auto img = prepare(raw);
    for (float v : img.data()) ASSERT_NEAR(v, 1.0f, 1e-6);
}

TEST(Prepare, ListedBadPixelReplacedByChannelMedian) {
    auto raw = constant_raw(10, 10, 4000);
    raw.cfa[4 * 10 + 4] = 16383; // hot R pixel
    raw.cfa[4 * 10 + 6] = 5000;  // another R neighbour, pulls no weight in the median
    raw.metadata.bad_pixels = {{4, 4}};
    auto clean = remove_bad_pixels(raw.cfa, 10, 10, raw.pattern, raw.metadata.bad_pixels);
    EXPECT_EQ(clean[44], 4000);
    EXPECT_EQ(clean[46], 5000);
    auto img = prepare(raw);
    EXPECT_NEAR(img.at(4, 4, 0), (4000.0 - 512) / (16383 - 512), 1e-6);
}

TEST(Prepare, OutlierDetectionIsOptional) {
    auto raw = constant_raw(10, 10, 4000);
    raw.cfa[5 * 10 + 5] = 15000;
    PrepareOptions opts;
    EXPECT_EQ(remove_bad_pixels(raw.cfa, 10, 10, raw.pattern, {}, opts)[55], 15000);
    opts.detect_outliers = true;
    auto clean = remove_bad_pixels(raw.cfa, 10, 10, raw.pattern, {}, opts);
    EXPECT_EQ(clean[55], 4000);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        if (i != 55) {
            EXPECT_EQ(clean[i], raw.cfa[i]);
        }
    }
}

TEST(Prepare, DeterministicAndPure) {
    auto raw = constant_raw(16, 16, 0);
    std::mt19937_64 rng(3);
    for (auto& v : raw.cfa) v = static_cast<std::uint16_t>(512 + rng() % 15000);
    raw.metadata.bad_pixels = {{3, 3}, {10, 7}};
    const auto copy = raw.cfa;
    auto a = prepare(raw);
    auto b = prepare(raw);
    EXPECT_EQ(raw.cfa, copy);
    EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST(Prepare, InvalidRawRejected) {
    auto raw = constant_raw(8, 8, 1000);
    raw.black_level[1] = 20000;
    EXPECT_THROW(prepare(raw), ValidationError);
    raw = constant_raw(8, 8, 1000);
    raw.metadata.color_matrix_1 = {1, 0, 0, 0, 1, 0, 0, 0, 0};
    try {
        prepare(raw);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("color_matrix_1"), std::string::npos);
    }
    raw = constant_raw(8, 8, 1000);
    raw.metadata.bad_pixels = {{8, 0}};
    EXPECT_THROW(prepare(raw), ValidationError);
}

// color conversions -----------------------------------------------------------

TEST(ColorConversion, IdentityMatricesKeepValues) {
    auto img = random_image<ColorSpace::CameraRGB>(4, 5, 1);
    CaptureMetadata meta;
    XyzImage xyz = camera_rgb_to_xyz(img, meta);
    static_assert(decltype(xyz)::space == ColorSpace::XYZ);
    for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_EQ(xyz.data()[i], img.data()[i]);
}

TEST(ColorConversion, EqualMatricesInvertAgainstAdjugateOracle) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-0.3, 0.3);
    for (int trial = 0; trial < 10; ++trial) {
        Mat3 a = kIdentity3;
        for (double& v : a) v += d(rng);
        CaptureMetadata meta;
        meta.color_matrix_1 = a;
        meta.color_matrix_2 = a;
        const Mat3 c = camera_to_xyz_matrix(meta);
        const Mat3 ref = adjugate_inverse(a);
        for (int i = 0; i < 9; ++i) EXPECT_NEAR(c[i], ref[i], 1e-12);
        // Averaging: (A + B) / 2 for distinct matrices.
        Mat3 b = a;
        b[1] += 0.1;
        meta.color_matrix_2 = b;
        Mat3 avg;
        for (int i = 0; i < 9; ++i) avg[i] = 0.5 * (a[i] + b[i]);
        const Mat3 c2 = camera_to_xyz_matrix(meta);
        const Mat3 ref2 = adjugate_inverse(avg);
        for (int i = 0; i < 9; ++i) EXPECT_NEAR(c2[i], ref2[i], 1e-12);
    }
}

TEST(ColorConversion, CameraXyzRoundTrip) {
    CaptureMetadata meta;
    meta.color_matrix_1 = {0.9, 0.1, -0.05, 0.2, 1.1, 0.0, -0.1, 0.05, 0.8};
    meta.color_matrix_2 = {1.0, 0.0, 0.05, 0.1, 0.9, 0.1, 0.0, 0.1, 1.0};
    auto img = random_image<ColorSpace::CameraRGB>(6, 6, 3);
    auto back = xyz_to_camera_rgb(camera_rgb_to_xyz(img, meta), meta);
    for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_NEAR(back.data()[i], img.data()[i], 1e-6);
}

TEST(ColorConversion, SingularAverageRejected) {
    CaptureMetadata meta;
    meta.color_matrix_1 = kIdentity3;
    meta.color_matrix_2 = {-1, 0, 0, 0, -1, 0, 0, 0, -1};
    EXPECT_THROW(camera_to_xyz_matrix(meta), NumericError);
}

TEST(ColorConversion, D65WhiteMapsToUnitSrgb) {
    XyzImage white(1, 1, {0.9505f, 1.0000f, 1.0890f});
    auto s = xyz_to_srgb(white);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(s.at(0, 0, c), 1.0f, 1e-3);
    const auto zero = xyz_to_srgb(XyzImage(3, 3));
    for (float v : zero.data()) EXPECT_EQ(v, 0.0f);
}

TEST(ColorConversion, SrgbRoundTripAndNegativeValuesKept) {
    auto img = random_image<ColorSpace::XYZ>(5, 7, 4);
    auto back = srgb_to_xyz(xyz_to_srgb(img));
    for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_NEAR(back.data()[i], img.data()[i], 1e-6);
    XyzImage saturated(1, 1, {0.0f, 1.0f, 0.0f});
    auto s = xyz_to_srgb(saturated);
    EXPECT_LT(s.at(0, 0, 0), 0.0f); // out of gamut, preserved
}

TEST(ColorConversion, ConversionsAreLinear) {
    CaptureMetadata meta;
    meta.color_matrix_1 = {0.9, 0.1, -0.05, 0.2, 1.1, 0.0, -0.1, 0.05, 0.8};
    meta.color_matrix_2 = meta.color_matrix_1;
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
        const float a = 0.25f * static_cast<float>(seed - 9);
        auto cam = random_image<ColorSpace::CameraRGB>(4, 4, seed);
        std::vector<float> scaled(cam.data().begin(), cam.data().end());
        for (float& v : scaled) v *= a;
        CameraImage cam_a(4, 4, scaled);
        auto x1 = camera_rgb_to_xyz(cam_a, meta);
        auto x2 = camera_rgb_to_xyz(cam, meta);
        auto s1 = xyz_to_srgb(x1);
        auto s2 = xyz_to_srgb(x2);
        for (std::size_t i = 0; i < scaled.size(); ++i) {
            EXPECT_NEAR(x1.data()[i], a * x2.data()[i], 1e-5);
            EXPECT_NEAR(s1.data()[i], a * s2.data()[i], 1e-5);
        }
    }
}

TEST(ColorConversion, TagDisciplineIsCompileTime) {
    static_assert(ConvertibleToXyz<CameraImage>);
    static_assert(!ConvertibleToXyz<SrgbImage>);
    static_assert(!ConvertibleToXyz<XyzImage>);
    static_assert(ConvertibleToSrgb<XyzImage>);
    static_assert(!ConvertibleToSrgb<CameraImage>);
    static_assert(!ConvertibleToSrgb<SrgbImage>);
    static_assert(!std::is_convertible_v<SrgbImage, XyzImage>);
    SUCCEED();
}

TEST(Image, RejectsNonFiniteAndBadSizes) {
    EXPECT_THROW(XyzImage(1, 1, {0.0f, NAN, 0.0f}), NumericError);
    EXPECT_THROW(XyzImage(2, 2, {0.0f}), ShapeError);
    EXPECT_THROW(XyzImage(0, 2), ShapeError);
}

TEST(Image, TensorRoundTrip) {
    auto img = random_image<ColorSpace::SRGB>(3, 5, 8);
    auto t = to_tensor(img);
    EXPECT_EQ(t.shape(), (ad::Shape{1, 3, 3, 5}));
    EXPECT_EQ(t.data()[1 * 15 + 2 * 5 + 4], img.at(2, 4, 1));
    auto back = image_from_tensor<ColorSpace::SRGB>(t);
    EXPECT_TRUE(std::equal(back.data().begin(), back.data().end(), img.data().begin()));
}

// file formats ----------------------------------------------------------------

TEST(Io, RawRoundTripIsExact) {
    auto dir = temp_dir("raw");
    auto raw = constant_raw(6, 8, 0, CfaPattern::GBRG);
    std::mt19937_64 rng(5);
    for (auto& v : raw.cfa) v = static_cast<std::uint16_t>(rng() % 16384);
    raw.black_level = {500, 510, 520};
    raw.metadata.color_matrix_1 = {0.9, 0.1, -0.05, 0.2, 1.1, 0.0, -0.1, 0.05, 0.8};
    raw.metadata.wb_gains = std::array<double, 3>{2.0, 1.0, 1.5};
    raw.metadata.vignette_gain = std::vector<float>(48, 1.25f);
    raw.metadata.bad_pixels = {{1, 2}, {5, 7}};
    save_raw(dir / "scene", raw);
    auto back = load_raw(dir / "scene");
    EXPECT_EQ(back.cfa, raw.cfa);
    EXPECT_EQ(back.pattern, raw.pattern);
    EXPECT_EQ(back.black_level, raw.black_level);
    EXPECT_EQ(back.white_level, raw.white_level);
    EXPECT_EQ(back.metadata.color_matrix_1, raw.metadata.color_matrix_1);
    EXPECT_EQ(back.metadata.wb_gains, raw.metadata.wb_gains);
    EXPECT_EQ(back.metadata.vignette_gain, raw.metadata.vignette_gain);
    EXPECT_EQ(back.metadata.bad_pixels, raw.metadata.bad_pixels);
    EXPECT_EQ(fs::file_size(raw_data_path(dir / "scene")), 96u);
    fs::remove_all(dir);
}

TEST(Io, ImageRoundTripAndTagCheck) {
    auto dir = temp_dir("img");
    auto img = random_image<ColorSpace::XYZ>(5, 4, 6, -0.2f, 1.5f);
    save_image(dir / "g", img);
    auto back = load_image<ColorSpace::XYZ>(dir / "g");
    EXPECT_TRUE(std::equal(back.data().begin(), back.data().end(), img.data().begin()));
    EXPECT_THROW(load_image<ColorSpace::SRGB>(dir / "g"), ValidationError);
    EXPECT_THROW(load_image<ColorSpace::XYZ>(dir / "missing"), IoError);
    // Truncated payload.
    fs::resize_file(image_data_path(dir / "g"), 10);
    EXPECT_THROW(load_image<ColorSpace::XYZ>(dir / "g"), IoError);
    fs::remove_all(dir);
}

TEST(Io, PpmDisplayCopy) {
    auto dir = temp_dir("ppm");
    SrgbImage img(1, 2, {0.0f, 1.0f, 2.0f, -1.0f, 0.5f, 0.25f});
    write_ppm(dir / "a.ppm", img);
    std::ifstream in(dir / "a.ppm", std::ios::binary);
    std::string magic;
    int w, h, maxval;
    in >> magic >> w >> h >> maxval;
    in.get();
    EXPECT_EQ(magic, "P6");
    EXPECT_EQ(w, 2);
    EXPECT_EQ(h, 1);
    EXPECT_EQ(maxval, 65535);
    std::vector<unsigned char> bytes(12);
    in.read(reinterpret_cast<char*>(bytes.data()), 12);
    auto sample = [&](int i) { return bytes[2 * i] * 256 + bytes[2 * i + 1]; };
    EXPECT_EQ(sample(0), 0);
    EXPECT_EQ(sample(1), 65535);
    EXPECT_EQ(sample(2), 65535); // clamped
    EXPECT_EQ(sample(3), 0);
    EXPECT_EQ(sample(4), std::lround(std::pow(0.5, 1 / 2.2) * 65535));
    fs::remove_all(dir);
}

TEST(Io, CorruptSidecarRejected) {
    auto dir = temp_dir("bad");
    auto raw = constant_raw(4, 4, 1000);
    save_raw(dir / "r", raw);
    {
        std::ofstream out(sidecar_path(dir / "r"));
        out << R"({"format": "isp-raw", "version": 1, "data": "r.raw", "height": 4, "width": 4,
                   "pattern": "XXXX", "black_level": [0,0,0], "white_level": [10,10,10],
                   "metadata": {"color_matrix_1": [1,0,0,0,1,0,0,0,1], "color_matrix_2": [1,0,0,0,1,0,0,0,1]}})";
    }
    EXPECT_THROW(load_raw(dir / "r"), IoError);
    fs::remove_all(dir);
}
