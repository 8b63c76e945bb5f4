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

#include "isp/prep.hpp"

#include <algorithm>
#include <cmath>

namespace isp {

DemosaicKernels DemosaicKernels::bilinear() {
    DemosaicKernels k;
    k.size = 3;
    const std::vector<float> rb{1, 2, 1, 2, 4, 2, 1, 2, 1};
    const std::vector<float> g{0, 1, 0, 1, 4, 1, 0, 1, 0};
    k.weights = {rb, g, rb};
    return k;
}

void DemosaicKernels::validate() const {
    if (size < 1 || size % 2 == 0) throw ValidationError("demosaic kernel size must be a positive odd number");
    for (const auto& w : weights) {
        if (w.size() != static_cast<std::size_t>(size) * size) {
            throw ValidationError("demosaic kernel has " + std::to_string(w.size()) + " weights, expected " +
                                  std::to_string(size * size));
        }
    }
}

std::vector<float> normalize_levels(std::span<const std::uint16_t> cfa, int black, int white) {
    if (white <= black) throw ValidationError("white level must exceed black level");
    const float inv = 1.0f / static_cast<float>(white - black);
    std::vector<float> out(cfa.size());
    for (std::size_t i = 0; i < cfa.size(); ++i) {
        out[i] = std::max(0.0f, static_cast<float>(static_cast<int>(cfa[i]) - black) * inv);
    }
    return out;
}

std::vector<float> normalize_levels(std::span<const std::uint16_t> cfa, int height, int width, CfaPattern pattern,
                                    const std::array<int, 3>& black, const std::array<int, 3>& white) {
    if (cfa.size() != static_cast<std::size_t>(height) * width) throw ShapeError("mosaic size mismatch");
    std::array<float, 3> inv{};
    for (int c = 0; c < 3; ++c) {
        if (white[c] <= black[c]) throw ValidationError("white level must exceed black level");
        inv[c] = 1.0f / static_cast<float>(white[c] - black[c]);
    }
    std::vector<float> out(cfa.size());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int c = cfa_channel(pattern, y, x);
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            out[i] = std::max(0.0f, static_cast<float>(static_cast<int>(cfa[i]) - black[c]) * inv[c]);
        }
    }
    return out;
}

namespace {

double median(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    const double hi = v[n / 2];
    if (n % 2) return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + n / 2));
}

} // namespace

std::vector<std::uint16_t> remove_bad_pixels(std::span<const std::uint16_t> cfa, int height, int width,
                                             CfaPattern pattern, std::span<const PixelCoord> bad,
                                             const PrepareOptions& opts) {
    (void)pattern; // same-channel neighbours sit at even offsets for every Bayer layout
    if (cfa.size() != static_cast<std::size_t>(height) * width) throw ShapeError("mosaic size mismatch");
    std::vector<std::uint8_t> flagged(cfa.size(), 0);
    for (const auto& p : bad) {
        if (p.y < 0 || p.y >= height || p.x < 0 || p.x >= width) {
            throw ValidationError("bad pixel coordinate outside the image");
        }
        flagged[static_cast<std::size_t>(p.y) * width + p.x] = 1;
    }

    std::vector<double> nb;
    auto neighbours = [&](int y, int x) {
        nb.clear();
        for (int dy = -2; dy <= 2; dy += 2) {
            for (int dx = -2; dx <= 2; dx += 2) {
                if (!dy && !dx) continue;
                const int yy = y + dy, xx = x + dx;
                if (yy < 0 || yy >= height || xx < 0 || xx >= width) continue;
                const std::size_t j = static_cast<std::size_t>(yy) * width + xx;
                if (flagged[j] == 1) continue;
                nb.push_back(cfa[j]);
            }
        }
    };

    if (opts.detect_outliers) {
        std::vector<double> dev;
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * width + x;
                if (flagged[i]) continue;
                neighbours(y, x);
                if (nb.size() < 3) continue;
                const double med = median(nb);
                dev.clear();
                for (double v : nb) dev.push_back(std::abs(v - med));
                const double mad = std::max(median(dev), 1.0);
                if (std::abs(cfa[i] - med) > opts.outlier_mads * mad) flagged[i] = 2;
            }
        }
    }

    std::vector<std::uint16_t> out(cfa.begin(), cfa.end());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            if (!flagged[i]) continue;
            nb.clear();
            for (int dy = -2; dy <= 2; dy += 2) {
                for (int dx = -2; dx <= 2; dx += 2) {
                    const int yy = y + dy, xx = x + dx;
                    if ((!dy && !dx) || yy < 0 || yy >= height || xx < 0 || xx >= width) continue;
                    const std::size_t j = static_cast<std::size_t>(yy) * width + xx;
                    if (!flagged[j]) nb.push_back(cfa[j]);
                }
            }
            if (!nb.empty()) out[i] = static_cast<std::uint16_t>(std::lround(median(nb)));
        }
    }
    return out;
}

void apply_vignette_gain(std::span<float> mosaic, std::span<const float> gain) {
    if (gain.size() != mosaic.size()) throw ShapeError("vignette gain map size does not match the mosaic");
    for (std::size_t i = 0; i < mosaic.size(); ++i) mosaic[i] *= gain[i];
}

CameraImage initial_demosaic(std::span<const float> mosaic, int height, int width, CfaPattern pattern,
                             const DemosaicKernels& kernels) {
    kernels.validate();
    if (height <= 0 || width <= 0 || height % 2 || width % 2) {
        throw ValidationError("demosaic needs positive even extents, got " + std::to_string(height) + "x" +
                              std::to_string(width));
    }
    if (mosaic.size() != static_cast<std::size_t>(height) * width) throw ShapeError("mosaic size mismatch");
    const int r = kernels.size / 2;
    CameraImage out(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int own = cfa_channel(pattern, y, x);
            const float v = mosaic[static_cast<std::size_t>(y) * width + x];
            for (int c = 0; c < 3; ++c) {
                if (c == own) {
                    out.at(y, x, c) = v;
                    continue;
                }
                const auto& w = kernels.weights[c];
                double num = 0.0, den = 0.0;
                for (int dy = -r; dy <= r; ++dy) {
                    for (int dx = -r; dx <= r; ++dx) {
                        // The reflected site has the same Bayer phase as the virtual one.
                        if (cfa_channel(pattern, y + dy, x + dx) != c) continue;
                        const double k = w[(dy + r) * kernels.size + dx + r];
                        if (k == 0.0) continue;
                        const int yy = reflect101(y + dy, height), xx = reflect101(x + dx, width);
                        num += k * mosaic[static_cast<std::size_t>(yy) * width + xx];
                        den += k;
                    }
                }
                out.at(y, x, c) = den > 0.0 ? static_cast<float>(num / den) : 0.0f;
            }
        }
    }
    return out;
}

CameraImage prepare(const RawImage& raw, const PrepareOptions& opts) {
    raw.validate();
    const auto& meta = raw.metadata;
    std::vector<std::uint16_t> cleaned;
    std::span<const std::uint16_t> cfa = raw.cfa;
    if (!meta.bad_pixels.empty() || opts.detect_outliers) {
        cleaned = remove_bad_pixels(raw.cfa, raw.height, raw.width, raw.pattern, meta.bad_pixels, opts);
        cfa = cleaned;
    }
    auto mosaic = normalize_levels(cfa, raw.height, raw.width, raw.pattern, raw.black_level, raw.white_level);
    if (meta.vignette_gain) apply_vignette_gain(mosaic, *meta.vignette_gain);
    return initial_demosaic(mosaic, raw.height, raw.width, raw.pattern, opts.kernels);
}

} // namespace isp
