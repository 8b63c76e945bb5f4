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

#include "isp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace isp::metrics {

namespace {

void check_same(std::span<const float> a, std::span<const float> b, const char* what) {
    if (a.size() != b.size()) {
        throw ShapeError(std::string(what) + ": sizes differ (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    }
    if (a.empty() || a.size() % 3) throw ShapeError(std::string(what) + ": expected non-empty 3-channel data");
}

double clamp01(float v) { return std::clamp(static_cast<double>(v), 0.0, 1.0); }

// Separable valid-region filter of a single plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1, oh = h - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * plane[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

} // namespace

double psnr(std::span<const float> pred, std::span<const float> gt, double peak) {
    check_same(pred, gt, "psnr");
    if (!(peak > 0.0)) throw ValidationError("psnr: peak must be positive");
    double sse = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp(static_cast<double>(pred[i]), 0.0, peak);
        const double g = std::clamp(static_cast<double>(gt[i]), 0.0, peak);
        sse += (p - g) * (p - g);
    }
    const double mse = sse / static_cast<double>(pred.size());
    if (mse == 0.0) return kInfinitePsnr;
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(std::span<const float> pred, std::span<const float> gt, int height, int width, const SsimOptions& o) {
    check_same(pred, gt, "ssim");
    if (pred.size() != static_cast<std::size_t>(height) * width * 3) {
        throw ShapeError("ssim: extents do not match data");
    }
    if (height < o.window || width < o.window) {
        throw ValidationError("ssim: image " + std::to_string(height) + "x" + std::to_string(width) +
                              " is smaller than the " + std::to_string(o.window) + "x" + std::to_string(o.window) +
                              " window");
    }
    std::vector<double> k(o.window);
    double ks = 0.0;
    for (int i = 0; i < o.window; ++i) {
        const double d = i - (o.window - 1) / 2.0;
        k[i] = std::exp(-d * d / (2.0 * o.sigma * o.sigma));
        ks += k[i];
    }
    for (double& v : k) v /= ks;
    const double c1 = (o.k1 * 1.0) * (o.k1 * 1.0), c2 = (o.k2 * 1.0) * (o.k2 * 1.0);
    const std::size_t plane = static_cast<std::size_t>(height) * width;

    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
        for (std::size_t p = 0; p < plane; ++p) {
            x[p] = clamp01(pred[p * 3 + c]);
            y[p] = clamp01(gt[p * 3 + c]);
            xx[p] = x[p] * x[p];
            yy[p] = y[p] * y[p];
            xy[p] = x[p] * y[p];
        }
        const auto mx = filter_valid(x, height, width, k), my = filter_valid(y, height, width, k);
        const auto sxx = filter_valid(xx, height, width, k), syy = filter_valid(yy, height, width, k);
        const auto sxy = filter_valid(xy, height, width, k);
        double acc = 0.0;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
            acc += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
                   ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        total += acc / static_cast<double>(mx.size());
    }
    return total / 3.0;
}

double color_error(std::span<const float> pred, std::span<const float> gt, double lo, double hi) {
    check_same(pred, gt, "color_error");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pred.size(); i += 3) {
        double luma = 0.0, dot = 0.0, np = 0.0, ng = 0.0;
        for (int c = 0; c < 3; ++c) {
            luma += kLumaWeights[c] * gt[i + c];
            dot += static_cast<double>(pred[i + c]) * gt[i + c];
            np += static_cast<double>(pred[i + c]) * pred[i + c];
            ng += static_cast<double>(gt[i + c]) * gt[i + c];
        }
        if (!(luma > lo && luma < hi) || np == 0.0 || ng == 0.0) continue;
        const double cosine = std::clamp(dot / std::sqrt(np * ng), -1.0, 1.0);
        sum += std::acos(cosine) * 180.0 / std::numbers::pi;
        ++count;
    }
    if (count == 0) throw NumericError("color_error: no valid pixels in the luminance mask");
    return sum / static_cast<double>(count);
}

double histogram_divergence(std::span<const float> before, std::span<const float> after, int bins) {
    check_same(before, after, "histogram_divergence");
    if (bins < 1) throw ValidationError("histogram_divergence: bins must be positive");
    auto histogram = [bins](std::span<const float> img) {
        std::vector<double> h(bins, 0.0);
        const std::size_t n = img.size() / 3;
        for (std::size_t i = 0; i < img.size(); i += 3) {
            double l = 0.0;
            for (int c = 0; c < 3; ++c) l += kLumaWeights[c] * clamp01(img[i + c]);
            const int b = std::min(bins - 1, static_cast<int>(l * bins));
            h[b] += 1.0;
        }
        for (double& v : h) v /= static_cast<double>(n);
        return h;
    };
    const auto a = histogram(before), b = histogram(after);
    double d = 0.0;
    for (int i = 0; i < bins; ++i) d += std::abs(a[i] - b[i]);
    return d;
}

} // namespace isp::metrics
