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
#include <span>
#include <vector>

#include "isp/image.hpp"
#include "isp/raw.hpp"

// Fixed raw preparation: bad pixel removal, level normalization, vignetting
// compensation and initial demosaicking, in that order.
namespace isp {

// Normalized-convolution demosaic weights: a missing sample of channel c is the
// kernel-weighted mean of the measured c samples in its neighbourhood.
struct DemosaicKernels {
    int size = 3; // odd
    std::array<std::vector<float>, 3> weights; // size*size each, row-major

    // Bilinear interpolation.
    static DemosaicKernels bilinear();
    void validate() const;
};

struct PrepareOptions {
    bool detect_outliers = false; // also replace statistical outliers
    double outlier_mads = 8.0;
    DemosaicKernels kernels = DemosaicKernels::bilinear();
};

// (v - black) / (white - black), clamped below at 0 only.
std::vector<float> normalize_levels(std::span<const std::uint16_t> cfa, int black, int white);
std::vector<float> normalize_levels(std::span<const std::uint16_t> cfa, int height, int width, CfaPattern pattern,
                                    const std::array<int, 3>& black, const std::array<int, 3>& white);

// Replaces listed sites (and optional outliers) with the median of the same
// channel samples in the surrounding 5x5 window.
std::vector<std::uint16_t> remove_bad_pixels(std::span<const std::uint16_t> cfa, int height, int width,
                                             CfaPattern pattern, std::span<const PixelCoord> bad,
                                             const PrepareOptions& opts = {});

void apply_vignette_gain(std::span<float> mosaic, std::span<const float> gain);

CameraImage initial_demosaic(std::span<const float> mosaic, int height, int width, CfaPattern pattern,
                             const DemosaicKernels& kernels = DemosaicKernels::bilinear());

CameraImage prepare(const RawImage& raw, const PrepareOptions& opts = {});

// Mirror index without repeating the edge sample; keeps Bayer phase.
inline int reflect101(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

} // namespace isp
