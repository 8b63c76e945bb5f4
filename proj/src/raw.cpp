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

#include "isp/raw.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace isp {

namespace {

Eigen::Matrix3d to_eigen(const Mat3& m) {
    Eigen::Matrix3d e;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) e(r, c) = m[r * 3 + c];
    return e;
}

} // namespace

Mat3 multiply(const Mat3& a, const Mat3& b) {
    Mat3 out{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            for (int k = 0; k < 3; ++k) out[r * 3 + c] += a[r * 3 + k] * b[k * 3 + c];
    return out;
}

// Frobenius-norm condition number.
double condition_number(const Mat3& m) {
    const Eigen::Matrix3d e = to_eigen(m);
    const double det = e.determinant();
    if (det == 0.0 || !std::isfinite(det)) return std::numeric_limits<double>::infinity();
    return e.norm() * e.inverse().norm();
}

Mat3 inverse(const Mat3& m) {
    for (double v : m) {
        if (!std::isfinite(v)) throw NumericError("matrix has a non-finite entry");
    }
    if (!(condition_number(m) < kMaxColorMatrixCondition)) {
        throw NumericError("matrix is singular or ill-conditioned");
    }
    const Eigen::Matrix3d inv = to_eigen(m).inverse();
    Mat3 out{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out[r * 3 + c] = inv(r, c);
    return out;
}

std::string to_string(CfaPattern p) {
    switch (p) {
    case CfaPattern::RGGB: return "RGGB";
    case CfaPattern::BGGR: return "BGGR";
    case CfaPattern::GRBG: return "GRBG";
    case CfaPattern::GBRG: return "GBRG";
    }
    return "?";
}

CfaPattern cfa_pattern_from_string(const std::string& s) {
    for (auto p : {CfaPattern::RGGB, CfaPattern::BGGR, CfaPattern::GRBG, CfaPattern::GBRG}) {
        if (to_string(p) == s) return p;
    }
    throw ValidationError("unsupported CFA pattern '" + s + "' (expected RGGB, BGGR, GRBG or GBRG)");
}

void RawImage::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ValidationError("raw image field '" + field + "': " + why);
    };
    if (height <= 0 || width <= 0) fail("height/width", "must be positive");
    if (height % 2 || width % 2) fail("height/width", "must be even");
    if (cfa.size() != static_cast<std::size_t>(height) * width) fail("cfa", "size does not match height*width");
    for (int c = 0; c < 3; ++c) {
        if (black_level[c] < 0) fail("black_level", "must be non-negative");
        if (white_level[c] > 65535) fail("white_level", "must fit in 16 bits");
        if (black_level[c] >= white_level[c]) fail("black_level", "must be below white_level");
    }
    const auto& m = metadata;
    for (const auto* cm : {&m.color_matrix_1, &m.color_matrix_2}) {
        const char* name = cm == &m.color_matrix_1 ? "color_matrix_1" : "color_matrix_2";
        for (double v : *cm) {
            if (!std::isfinite(v)) fail(name, "has a non-finite entry");
        }
        if (!(condition_number(*cm) < kMaxColorMatrixCondition)) fail(name, "is singular or ill-conditioned");
    }
    Mat3 avg{};
    for (int i = 0; i < 9; ++i) avg[i] = 0.5 * (m.color_matrix_1[i] + m.color_matrix_2[i]);
    if (!(condition_number(avg) < kMaxColorMatrixCondition)) {
        fail("color_matrix_1/color_matrix_2", "average is singular or ill-conditioned");
    }
    if (m.wb_gains) {
        for (double g : *m.wb_gains) {
            if (!(g > 0.0) || !std::isfinite(g)) fail("wb_gains", "must be positive and finite");
        }
    }
    if (m.vignette_gain) {
        if (m.vignette_gain->size() != cfa.size()) fail("vignette_gain", "size does not match height*width");
        for (float g : *m.vignette_gain) {
            if (!(g > 0.0f) || !std::isfinite(g)) fail("vignette_gain", "must be positive and finite");
        }
    }
    for (const auto& p : m.bad_pixels) {
        if (p.y < 0 || p.y >= height || p.x < 0 || p.x >= width) {
            fail("bad_pixels", "coordinate (" + std::to_string(p.y) + ", " + std::to_string(p.x) +
                                   ") is outside the image");
        }
    }
}

} // namespace isp
