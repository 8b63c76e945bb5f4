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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isp/error.hpp"

namespace isp {

// Row-major 3x3 matrix.
using Mat3 = std::array<double, 9>;

inline constexpr Mat3 kIdentity3{1, 0, 0, 0, 1, 0, 0, 0, 1};

Mat3 multiply(const Mat3& a, const Mat3& b);
Mat3 inverse(const Mat3& m); // NumericError when singular
double condition_number(const Mat3& m);

enum class CfaPattern { RGGB, BGGR, GRBG, GBRG };

std::string to_string(CfaPattern p);
CfaPattern cfa_pattern_from_string(const std::string& s); // ValidationError on unknown names

// Channel (0 = R, 1 = G, 2 = B) sampled at (y, x).
inline int cfa_channel(CfaPattern p, int y, int x) {
    static constexpr int table[4][4] = {{0, 1, 1, 2}, {2, 1, 1, 0}, {1, 0, 2, 1}, {1, 2, 0, 1}};
    return table[static_cast<int>(p)][((y & 1) << 1) | (x & 1)];
}

struct PixelCoord {
    int y = 0;
    int x = 0;

    bool operator==(const PixelCoord&) const = default;
};

// Matrices follow the DNG convention: they map XYZ to camera RGB, so the
// camera-to-XYZ transform is the inverse of their average.
struct CaptureMetadata {
    Mat3 color_matrix_1 = kIdentity3;
    Mat3 color_matrix_2 = kIdentity3;
    std::optional<std::array<double, 3>> wb_gains;
    std::optional<std::vector<float>> vignette_gain; // H x W, row-major
    std::vector<PixelCoord> bad_pixels;
};

inline constexpr double kMaxColorMatrixCondition = 1e6;

struct RawImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint16_t> cfa; // row-major mosaic
    CfaPattern pattern = CfaPattern::RGGB;
    std::array<int, 3> black_level{0, 0, 0}; // per color channel
    std::array<int, 3> white_level{65535, 65535, 65535};
    CaptureMetadata metadata;

    std::uint16_t at(int y, int x) const { return cfa[static_cast<std::size_t>(y) * width + x]; }

    // Throws ValidationError naming the offending field.
    void validate() const;
};

} // namespace isp
