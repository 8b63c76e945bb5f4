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

#include <cstddef>
#include <vector>

// Direct nested-loop reference implementations. They deliberately share no
// code with the library kernels.
namespace isp::testing {

// input [n, cin, h, w], weight [cout, cin, kh, kw]; zero padding `pad`.
inline std::vector<double> conv2d_direct(const std::vector<double>& x, int n, int cin, int h, int w,
                                         const std::vector<double>& wt, int cout, int kh, int kw,
                                         const std::vector<double>& bias, int stride, int dilation, int pad,
                                         int& hout, int& wout) {
    hout = (h + 2 * pad - dilation * (kh - 1) - 1) / stride + 1;
    wout = (w + 2 * pad - dilation * (kw - 1) - 1) / stride + 1;
    std::vector<double> out(static_cast<std::size_t>(n) * cout * hout * wout, 0.0);
    for (int b = 0; b < n; ++b)
        for (int o = 0; o < cout; ++o)
            for (int oy = 0; oy < hout; ++oy)
                for (int ox = 0; ox < wout; ++ox) {
                    double acc = bias.empty() ? 0.0 : bias[o];
                    for (int c = 0; c < cin; ++c)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int iy = oy * stride - pad + ky * dilation;
                                const int ix = ox * stride - pad + kx * dilation;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                acc += x[((static_cast<std::size_t>(b) * cin + c) * h + iy) * w + ix] *
                                       wt[((static_cast<std::size_t>(o) * cin + c) * kh + ky) * kw + kx];
                            }
                    out[((static_cast<std::size_t>(b) * cout + o) * hout + oy) * wout + ox] = acc;
                }
    return out;
}

// y[b, o] = sum_i w[o, i] x[b, i] + bias[o]
inline std::vector<double> matvec_direct(const std::vector<double>& x, int batch, int in, const std::vector<double>& w,
                                         int out, const std::vector<double>& bias) {
    std::vector<double> y(static_cast<std::size_t>(batch) * out);
    for (int b = 0; b < batch; ++b)
        for (int o = 0; o < out; ++o) {
            double acc = bias[o];
            for (int i = 0; i < in; ++i) acc += w[o * in + i] * x[b * in + i];
            y[b * out + o] = acc;
        }
    return y;
}

} // namespace isp::testing
