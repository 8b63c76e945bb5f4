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

#include "isp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <type_traits>

#include <Eigen/Core>

namespace isp::ad {

namespace {

// Reduction accumulator: at least double precision.
template <typename T>
using Acc = std::conditional_t<(sizeof(T) > sizeof(double)), T, double>;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
void require_ndim(const Tensor<T>& t, int n, const char* op, const char* arg) {
    if (!t.defined()) {
        throw ShapeError(std::string(op) + ": " + arg + " is undefined");
    }
    if (t.ndim() != n) {
        throw ShapeError(std::string(op) + ": " + arg + " must be " + std::to_string(n) + "-D, got shape " +
                         to_string(t.shape()));
    }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
    }
}

void require_dim(int got, int want, const char* op, const std::string& what) {
    if (got != want) {
        throw ShapeError(std::string(op) + ": " + what + " is " + std::to_string(got) + ", expected " +
                         std::to_string(want));
    }
}

template <typename T>
std::vector<T>* grad_of(detail::Storage<T>* s) {
    return s->requires_grad ? &s->grad : nullptr;
}

int conv_padding(int kernel, const Conv2dOptions& opts) {
    if (opts.padding == Padding::None) return 0;
    if (kernel % 2 == 0) {
        throw ValidationError("conv2d: same padding needs an odd kernel extent, got " + std::to_string(kernel));
    }
    return opts.dilation * (kernel - 1) / 2;
}

} // namespace

int conv_output_extent(int input, int kernel, const Conv2dOptions& opts) {
    if (opts.stride < 1) throw ValidationError("conv2d: stride must be positive");
    if (opts.dilation < 1) throw ValidationError("conv2d: dilation must be positive");
    const int pad = conv_padding(kernel, opts);
    const int effective = opts.dilation * (kernel - 1) + 1;
    const int span = input + 2 * pad - effective;
    if (span < 0) return 0;
    return span / opts.stride + 1;
}

// conv2d ----------------------------------------------------------------------

template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Conv2dOptions& opts) {
    require_ndim(input, 4, "conv2d", "input");
    require_ndim(weight, 4, "conv2d", "weight");
    const int batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    require_dim(weight.dim(1), cin, "conv2d", "weight in_ch (dimension 1)");
    if (bias.defined()) {
        require_ndim(bias, 1, "conv2d", "bias");
        require_dim(bias.dim(0), cout, "conv2d", "bias length (dimension 0)");
    }

    const int pad_h = conv_padding(kh, opts);
    const int pad_w = conv_padding(kw, opts);
    const int hout = conv_output_extent(h, kh, opts);
    const int wout = conv_output_extent(w, kw, opts);
    if (hout <= 0 || wout <= 0) {
        throw ShapeError("conv2d: spatial extent " + std::to_string(h) + "x" + std::to_string(w) +
                         " is smaller than the effective kernel extent");
    }

    const int stride = opts.stride, dil = opts.dilation;
    const int k = cin * kh * kw;
    const int p = hout * wout;
    auto cols = std::make_shared<std::vector<T>>(static_cast<std::size_t>(batch) * k * p);
    std::vector<T> out(static_cast<std::size_t>(batch) * cout * p);

    const T* x = input.data().data();
    for (int b = 0; b < batch; ++b) {
        T* col = cols->data() + static_cast<std::size_t>(b) * k * p;
        const T* xb = x + static_cast<std::size_t>(b) * cin * h * w;
        for (int c = 0; c < cin; ++c) {
            for (int ky = 0; ky < kh; ++ky) {
                for (int kx = 0; kx < kw; ++kx) {
                    T* row = col + static_cast<std::size_t>((c * kh + ky) * kw + kx) * p;
                    for (int oy = 0; oy < hout; ++oy) {
                        const int iy = oy * stride - pad_h + ky * dil;
                        T* dst = row + static_cast<std::size_t>(oy) * wout;
                        if (iy < 0 || iy >= h) {
                            std::fill(dst, dst + wout, T(0));
                            continue;
                        }
                        const T* src = xb + (static_cast<std::size_t>(c) * h + iy) * w;
                        for (int ox = 0; ox < wout; ++ox) {
                            const int ix = ox * stride - pad_w + kx * dil;
                            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
                        }
                    }
                }
            }
        }
        Eigen::Map<const RowMat<T>> wm(weight.data().data(), cout, k);
        Eigen::Map<const RowMat<T>> cm(col, k, p);
        Eigen::Map<RowMat<T>> om(out.data() + static_cast<std::size_t>(b) * cout * p, cout, p);
        om.noalias() = wm * cm;
        if (bias.defined()) {
            for (int o = 0; o < cout; ++o) om.row(o).array() += bias.data()[o];
        }
    }

    auto* xs = input.storage();
    auto* ws = weight.storage();
    auto* bs = bias.defined() ? bias.storage() : nullptr;
    return tape.emit(
        {batch, cout, hout, wout}, std::move(out), {&input, &weight, &bias},
        [=](const detail::Storage<T>& o) {
            const std::vector<T>& g = o.grad;
            std::vector<T> dcol(static_cast<std::size_t>(k) * p);
            for (int b = 0; b < batch; ++b) {
                const T* col = cols->data() + static_cast<std::size_t>(b) * k * p;
                Eigen::Map<const RowMat<T>> gm(g.data() + static_cast<std::size_t>(b) * cout * p, cout, p);
                Eigen::Map<const RowMat<T>> cm(col, k, p);
                Eigen::Map<const RowMat<T>> wm(ws->data.data(), cout, k);
                if (auto* gw = grad_of(ws)) {
                    Eigen::Map<RowMat<T>> gwm(gw->data(), cout, k);
                    gwm.noalias() += gm * cm.transpose();
                }
                if (bs) {
                    if (auto* gb = grad_of(bs)) {
                        // Plain loop: Eigen reductions peel by address, which breaks bit reproducibility.
                        for (int o = 0; o < cout; ++o) {
                            const T* r = g.data() + (static_cast<std::size_t>(b) * cout + o) * p;
                            T acc = T(0);
                            for (int i = 0; i < p; ++i) acc += r[i];
                            (*gb)[o] += acc;
                        }
                    }
                }
                if (auto* gx = grad_of(xs)) {
                    Eigen::Map<RowMat<T>> dm(dcol.data(), k, p);
                    dm.noalias() = wm.transpose() * gm;
                    T* gxb = gx->data() + static_cast<std::size_t>(b) * cin * h * w;
                    for (int c = 0; c < cin; ++c) {
                        for (int ky = 0; ky < kh; ++ky) {
                            for (int kx = 0; kx < kw; ++kx) {
                                const T* row = dcol.data() + static_cast<std::size_t>((c * kh + ky) * kw + kx) * p;
                                for (int oy = 0; oy < hout; ++oy) {
                                    const int iy = oy * stride - pad_h + ky * dil;
                                    if (iy < 0 || iy >= h) continue;
                                    T* dst = gxb + (static_cast<std::size_t>(c) * h + iy) * w;
                                    const T* src = row + static_cast<std::size_t>(oy) * wout;
                                    for (int ox = 0; ox < wout; ++ox) {
                                        const int ix = ox * stride - pad_w + kx * dil;
                                        if (ix >= 0 && ix < w) dst[ix] += src[ox];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
}

// pooling / affine ------------------------------------------------------------

template <typename T>
Tensor<T> global_avg_pool(Tape<T>& tape, const Tensor<T>& input) {
    require_ndim(input, 4, "global_avg_pool", "input");
    const int batch = input.dim(0), ch = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (h < 1 || w < 1) throw ShapeError("global_avg_pool: empty spatial plane");
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<T> out(static_cast<std::size_t>(batch) * ch);
    const T* x = input.data().data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        Acc<T> acc = 0.0;
        for (std::size_t j = 0; j < plane; ++j) acc += x[i * plane + j];
        out[i] = static_cast<T>(acc / static_cast<Acc<T>>(plane));
    }
    auto* xs = input.storage();
    return tape.emit({batch, ch, 1, 1}, std::move(out), {&input}, [=](const detail::Storage<T>& o) {
        const std::vector<T>& g = o.grad;
        if (auto* gx = grad_of(xs)) {
            const T inv = T(1) / static_cast<T>(plane);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const T v = g[i] * inv;
                for (std::size_t j = 0; j < plane; ++j) (*gx)[i * plane + j] += v;
            }
        }
    });
}

template <typename T>
Tensor<T> fully_connected(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
    require_ndim(input, 2, "fully_connected", "input");
    require_ndim(weight, 2, "fully_connected", "weight");
    require_ndim(bias, 1, "fully_connected", "bias");
    const int batch = input.dim(0), in = input.dim(1), outn = weight.dim(0);
    require_dim(weight.dim(1), in, "fully_connected", "weight in (dimension 1)");
    require_dim(bias.dim(0), outn, "fully_connected", "bias length (dimension 0)");

    std::vector<T> out(static_cast<std::size_t>(batch) * outn);
    const T* x = input.data().data();
    const T* wt = weight.data().data();
    const T* bv = bias.data().data();
    for (int b = 0; b < batch; ++b) {
        for (int o = 0; o < outn; ++o) {
            T acc = bv[o];
            for (int i = 0; i < in; ++i) acc += wt[o * in + i] * x[b * in + i];
            out[b * outn + o] = acc;
        }
    }
    auto *xs = input.storage(), *ws = weight.storage(), *bs = bias.storage();
    return tape.emit({batch, outn}, std::move(out), {&input, &weight, &bias}, [=](const detail::Storage<T>& o) {
        const std::vector<T>& g = o.grad;
        auto* gx = grad_of(xs);
        auto* gw = grad_of(ws);
        auto* gb = grad_of(bs);
        for (int b = 0; b < batch; ++b) {
            for (int o = 0; o < outn; ++o) {
                const T go = g[b * outn + o];
                if (gb) (*gb)[o] += go;
                for (int i = 0; i < in; ++i) {
                    if (gw) (*gw)[o * in + i] += go * xs->data[b * in + i];
                    if (gx) (*gx)[b * in + i] += go * ws->data[o * in + i];
                }
            }
        }
    });
}

template <typename T>
Tensor<T> mul_per_channel(Tape<T>& tape, const Tensor<T>& feature, const Tensor<T>& scale_t) {
    require_ndim(feature, 4, "mul_per_channel", "feature");
    require_ndim(scale_t, 2, "mul_per_channel", "scale");
    const int batch = feature.dim(0), ch = feature.dim(1);
    require_dim(scale_t.dim(0), batch, "mul_per_channel", "scale batch (dimension 0)");
    require_dim(scale_t.dim(1), ch, "mul_per_channel", "scale channels (dimension 1)");
    const std::size_t plane = static_cast<std::size_t>(feature.dim(2)) * feature.dim(3);
    std::vector<T> out(feature.numel());
    const T* f = feature.data().data();
    const T* s = scale_t.data().data();
    for (std::size_t bc = 0; bc < static_cast<std::size_t>(batch) * ch; ++bc) {
        for (std::size_t j = 0; j < plane; ++j) out[bc * plane + j] = f[bc * plane + j] * s[bc];
    }
    auto *fs = feature.storage(), *ss = scale_t.storage();
    return tape.emit(feature.shape(), std::move(out), {&feature, &scale_t}, [=](const detail::Storage<T>& o) {
        const std::vector<T>& g = o.grad;
        auto* gf = grad_of(fs);
        auto* gs = grad_of(ss);
        for (std::size_t bc = 0; bc < static_cast<std::size_t>(batch) * ch; ++bc) {
            T acc = 0;
            for (std::size_t j = 0; j < plane; ++j) {
                const std::size_t i = bc * plane + j;
                if (gf) (*gf)[i] += g[i] * ss->data[bc];
                acc += g[i] * fs->data[i];
            }
            if (gs) (*gs)[bc] += acc;
        }
    });
}

template <typename T>
Tensor<T> channel_affine(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& shift) {
    require_ndim(x, 4, "channel_affine", "x");
    require_ndim(gain, 1, "channel_affine", "gain");
    require_ndim(shift, 1, "channel_affine", "shift");
    const int batch = x.dim(0), ch = x.dim(1);
    require_dim(gain.dim(0), ch, "channel_affine", "gain length (dimension 0)");
    require_dim(shift.dim(0), ch, "channel_affine", "shift length (dimension 0)");
    const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    std::vector<T> out(x.numel());
    for (int b = 0; b < batch; ++b) {
        for (int c = 0; c < ch; ++c) {
            const std::size_t base = (static_cast<std::size_t>(b) * ch + c) * plane;
            for (std::size_t j = 0; j < plane; ++j) {
                out[base + j] = x.data()[base + j] * gain.data()[c] + shift.data()[c];
            }
        }
    }
    auto *xs = x.storage(), *gs = gain.storage(), *ss = shift.storage();
    return tape.emit(x.shape(), std::move(out), {&x, &gain, &shift}, [=](const detail::Storage<T>& o) {
        const std::vector<T>& g = o.grad;
        auto* gx = grad_of(xs);
        auto* gg = grad_of(gs);
        auto* gsh = grad_of(ss);
        for (int b = 0; b < batch; ++b) {
            for (int c = 0; c < ch; ++c) {
                const std::size_t base = (static_cast<std::size_t>(b) * ch + c) * plane;
                T acc_g = 0, acc_s = 0;
                for (std::size_t j = 0; j < plane; ++j) {
                    const T go = g[base + j];
                    if (gx) (*gx)[base + j] += go * gs->data[c];
                    acc_g += go * xs->data[base + j];
                    acc_s += go;
                }
                if (gg) (*gg)[c] += acc_g;
                if (gsh) (*gsh)[c] += acc_s;
            }
        }
    });
}

template <typename T>
Tensor<T> instance_norm(Tape<T>& tape, const Tensor<T>& x, T eps) {
    require_ndim(x, 4, "instance_norm", "x");
    const std::size_t planes = static_cast<std::size_t>(x.dim(0)) * x.dim(1);
    const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    std::vector<T> out(x.numel());
    auto inv_std = std::make_shared<std::vector<Acc<T>>>(planes);
    const T* xv = x.data().data();
    for (std::size_t p = 0; p < planes; ++p) {
        const T* src = xv + p * plane;
        Acc<T> m = 0.0;
        for (std::size_t j = 0; j < plane; ++j) m += src[j];
        m /= static_cast<Acc<T>>(plane);
        Acc<T> v = 0.0;
        for (std::size_t j = 0; j < plane; ++j) {
            const Acc<T> d = src[j] - m;
            v += d * d;
        }
        v /= static_cast<Acc<T>>(plane);
        const Acc<T> inv = 1.0 / std::sqrt(v + static_cast<Acc<T>>(eps));
        (*inv_std)[p] = inv;
        for (std::size_t j = 0; j < plane; ++j) out[p * plane + j] = static_cast<T>((src[j] - m) * inv);
    }
    auto* xs = x.storage();
    return tape.emit(x.shape(), std::move(out), {&x}, [=](const detail::Storage<T>& o) {
        auto* gx = grad_of(xs);
        if (!gx) return;
        for (std::size_t p = 0; p < planes; ++p) {
            const T* y = o.data.data() + p * plane;
            const T* gp = o.grad.data() + p * plane;
            Acc<T> mg = 0.0, mgy = 0.0;
            for (std::size_t j = 0; j < plane; ++j) {
                mg += gp[j];
                mgy += static_cast<Acc<T>>(gp[j]) * y[j];
            }
            mg /= static_cast<Acc<T>>(plane);
            mgy /= static_cast<Acc<T>>(plane);
            const Acc<T> inv = (*inv_std)[p];
            for (std::size_t j = 0; j < plane; ++j) {
                (*gx)[p * plane + j] += static_cast<T>(inv * (gp[j] - mg - y[j] * mgy));
            }
        }
    });
}

template <typename T>
Tensor<T> channel_mix(Tape<T>& tape, const Tensor<T>& x, const std::array<double, 9>& m) {
    require_ndim(x, 4, "channel_mix", "x");
    require_dim(x.dim(1), 3, "channel_mix", "channel count (dimension 1)");
    const int batch = x.dim(0);
    const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    std::array<T, 9> mt{};
    for (int i = 0; i < 9; ++i) mt[i] = static_cast<T>(m[i]);
    std::vector<T> out(x.numel());
    const T* xv = x.data().data();
    for (int b = 0; b < batch; ++b) {
        const T* src = xv + static_cast<std::size_t>(b) * 3 * plane;
        T* dst = out.data() + static_cast<std::size_t>(b) * 3 * plane;
        for (std::size_t j = 0; j < plane; ++j) {
            // Accumulated in double so results match the image-domain conversions bit for bit.
            const double c0 = src[j], c1 = src[plane + j], c2 = src[2 * plane + j];
            for (int i = 0; i < 3; ++i) {
                dst[i * plane + j] = static_cast<T>(m[i * 3] * c0 + m[i * 3 + 1] * c1 + m[i * 3 + 2] * c2);
            }
        }
    }
    auto* xs = x.storage();
    return tape.emit(x.shape(), std::move(out), {&x}, [=](const detail::Storage<T>& o) {
        auto* gx = grad_of(xs);
        if (!gx) return;
        for (int b = 0; b < batch; ++b) {
            const T* g = o.grad.data() + static_cast<std::size_t>(b) * 3 * plane;
            T* dst = gx->data() + static_cast<std::size_t>(b) * 3 * plane;
            for (std::size_t j = 0; j < plane; ++j) {
                const T g0 = g[j], g1 = g[plane + j], g2 = g[2 * plane + j];
                for (int c = 0; c < 3; ++c) dst[c * plane + j] += mt[c] * g0 + mt[3 + c] * g1 + mt[6 + c] * g2;
            }
        }
    });
}

// elementwise -----------------------------------------------------------------

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "add");
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    auto *as = a.storage(), *bs = b.storage();
    return tape.emit(a.shape(), std::move(out), {&a, &b}, [=](const detail::Storage<T>& o) {
        if (auto* ga = grad_of(as)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) (*ga)[i] += o.grad[i];
        }
        if (auto* gb = grad_of(bs)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) (*gb)[i] += o.grad[i];
        }
    });
}

template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "sub");
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    auto *as = a.storage(), *bs = b.storage();
    return tape.emit(a.shape(), std::move(out), {&a, &b}, [=](const detail::Storage<T>& o) {
        if (auto* ga = grad_of(as)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) (*ga)[i] += o.grad[i];
        }
        if (auto* gb = grad_of(bs)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) (*gb)[i] -= o.grad[i];
        }
    });
}

template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "mul");
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    auto *as = a.storage(), *bs = b.storage();
    return tape.emit(a.shape(), std::move(out), {&a, &b}, [=](const detail::Storage<T>& o) {
        if (auto* ga = grad_of(as)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) (*ga)[i] += o.grad[i] * bs->data[i];
        }
        if (auto* gb = grad_of(bs)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) (*gb)[i] += o.grad[i] * as->data[i];
        }
    });
}

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& x, T factor) {
    std::vector<T> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * factor;
    auto* xs = x.storage();
    return tape.emit(x.shape(), std::move(out), {&x}, [=](const detail::Storage<T>& o) {
        if (auto* gx = grad_of(xs)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) (*gx)[i] += o.grad[i] * factor;
        }
    });
}

template <typename T>
Tensor<T> leaky_relu(Tape<T>& tape, const Tensor<T>& x, T slope) {
    std::vector<T> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const T v = x.data()[i];
        out[i] = v > T(0) ? v : v * slope;
    }
    auto* xs = x.storage();
    return tape.emit(x.shape(), std::move(out), {&x}, [=](const detail::Storage<T>& o) {
        if (auto* gx = grad_of(xs)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) {
                (*gx)[i] += xs->data[i] > T(0) ? o.grad[i] : o.grad[i] * slope;
            }
        }
    });
}

template <typename T>
Tensor<T> abs(Tape<T>& tape, const Tensor<T>& x) {
    std::vector<T> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(x.data()[i]);
    auto* xs = x.storage();
    return tape.emit(x.shape(), std::move(out), {&x}, [=](const detail::Storage<T>& o) {
        if (auto* gx = grad_of(xs)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) {
                const T v = xs->data[i];
                const T sign = v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
                (*gx)[i] += o.grad[i] * sign;
            }
        }
    });
}

template <typename T>
Tensor<T> log_clamped(Tape<T>& tape, const Tensor<T>& x, T eps) {
    if (!(eps > T(0))) throw ValidationError("log_clamped: epsilon must be positive");
    std::vector<T> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(x.data()[i], eps));
    auto* xs = x.storage();
    return tape.emit(x.shape(), std::move(out), {&x}, [=](const detail::Storage<T>& o) {
        if (auto* gx = grad_of(xs)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) {
                const T v = xs->data[i];
                if (v >= eps) (*gx)[i] += o.grad[i] / v;
            }
        }
    });
}

// layout ----------------------------------------------------------------------

template <typename T>
Tensor<T> concat_channels(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    require_ndim(a, 4, "concat_channels", "a");
    require_ndim(b, 4, "concat_channels", "b");
    require_dim(b.dim(0), a.dim(0), "concat_channels", "batch (dimension 0)");
    require_dim(b.dim(2), a.dim(2), "concat_channels", "height (dimension 2)");
    require_dim(b.dim(3), a.dim(3), "concat_channels", "width (dimension 3)");
    const int batch = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    const std::size_t plane = static_cast<std::size_t>(a.dim(2)) * a.dim(3);
    const std::size_t na = ca * plane, nb = cb * plane;
    std::vector<T> out(static_cast<std::size_t>(batch) * (na + nb));
    for (int n = 0; n < batch; ++n) {
        std::copy_n(a.data().data() + n * na, na, out.data() + n * (na + nb));
        std::copy_n(b.data().data() + n * nb, nb, out.data() + n * (na + nb) + na);
    }
    auto *as = a.storage(), *bs = b.storage();
    return tape.emit({batch, ca + cb, a.dim(2), a.dim(3)}, std::move(out), {&a, &b},
                     [=](const detail::Storage<T>& o) {
                         auto* ga = grad_of(as);
                         auto* gb = grad_of(bs);
                         for (int n = 0; n < batch; ++n) {
                             const T* src = o.grad.data() + n * (na + nb);
                             if (ga) {
                                 for (std::size_t i = 0; i < na; ++i) (*ga)[n * na + i] += src[i];
                             }
                             if (gb) {
                                 for (std::size_t i = 0; i < nb; ++i) (*gb)[n * nb + i] += src[na + i];
                             }
                         }
                     });
}

template <typename T>
Tensor<T> upsample_nearest2x(Tape<T>& tape, const Tensor<T>& x) {
    require_ndim(x, 4, "upsample_nearest2x", "x");
    const int planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    const int h2 = 2 * h, w2 = 2 * w;
    std::vector<T> out(static_cast<std::size_t>(planes) * h2 * w2);
    const T* src = x.data().data();
    for (int p = 0; p < planes; ++p) {
        for (int y = 0; y < h2; ++y) {
            const T* srow = src + (static_cast<std::size_t>(p) * h + y / 2) * w;
            T* drow = out.data() + (static_cast<std::size_t>(p) * h2 + y) * w2;
            for (int xx = 0; xx < w2; ++xx) drow[xx] = srow[xx / 2];
        }
    }
    auto* xs = x.storage();
    return tape.emit({x.dim(0), x.dim(1), h2, w2}, std::move(out), {&x}, [=](const detail::Storage<T>& o) {
        auto* gx = grad_of(xs);
        if (!gx) return;
        for (int p = 0; p < planes; ++p) {
            for (int y = 0; y < h2; ++y) {
                const T* grow = o.grad.data() + (static_cast<std::size_t>(p) * h2 + y) * w2;
                T* drow = gx->data() + (static_cast<std::size_t>(p) * h + y / 2) * w;
                for (int xx = 0; xx < w2; ++xx) drow[xx / 2] += grow[xx];
            }
        }
    });
}

template <typename T>
Tensor<T> reshape(Tape<T>& tape, const Tensor<T>& x, Shape shape) {
    if (numel(shape) != x.numel()) {
        throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
    }
    std::vector<T> out(x.data().begin(), x.data().end());
    auto* xs = x.storage();
    return tape.emit(std::move(shape), std::move(out), {&x}, [=](const detail::Storage<T>& o) {
        if (auto* gx = grad_of(xs)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) (*gx)[i] += o.grad[i];
        }
    });
}

// reductions ------------------------------------------------------------------

template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x) {
    Acc<T> acc = 0.0;
    for (T v : x.data()) acc += v;
    auto* xs = x.storage();
    return tape.emit({1}, {static_cast<T>(acc)}, {&x}, [=](const detail::Storage<T>& o) {
        if (auto* gx = grad_of(xs)) {
            for (T& g : *gx) g += o.grad[0];
        }
    });
}

template <typename T>
Tensor<T> mean(Tape<T>& tape, const Tensor<T>& x) {
    if (x.numel() == 0) throw ShapeError("mean of an empty tensor");
    Acc<T> acc = 0.0;
    for (T v : x.data()) acc += v;
    const Acc<T> n = static_cast<Acc<T>>(x.numel());
    auto* xs = x.storage();
    return tape.emit({1}, {static_cast<T>(acc / n)}, {&x}, [=](const detail::Storage<T>& o) {
        if (auto* gx = grad_of(xs)) {
            const T v = static_cast<T>(o.grad[0] / n);
            for (T& g : *gx) g += v;
        }
    });
}

#define ISP_INSTANTIATE_OPS(T)                                                                                 \
    template Tensor<T> conv2d(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                  \
                              const Conv2dOptions&);                                                           \
    template Tensor<T> global_avg_pool(Tape<T>&, const Tensor<T>&);                                            \
    template Tensor<T> fully_connected(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);        \
    template Tensor<T> mul_per_channel(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                          \
    template Tensor<T> channel_affine(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);         \
    template Tensor<T> instance_norm(Tape<T>&, const Tensor<T>&, T);                                           \
    template Tensor<T> channel_mix(Tape<T>&, const Tensor<T>&, const std::array<double, 9>&);                  \
    template Tensor<T> add(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                      \
    template Tensor<T> sub(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                      \
    template Tensor<T> mul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                      \
    template Tensor<T> scale(Tape<T>&, const Tensor<T>&, T);                                                   \
    template Tensor<T> leaky_relu(Tape<T>&, const Tensor<T>&, T);                                              \
    template Tensor<T> abs(Tape<T>&, const Tensor<T>&);                                                        \
    template Tensor<T> log_clamped(Tape<T>&, const Tensor<T>&, T);                                             \
    template Tensor<T> concat_channels(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                          \
    template Tensor<T> upsample_nearest2x(Tape<T>&, const Tensor<T>&);                                         \
    template Tensor<T> reshape(Tape<T>&, const Tensor<T>&, Shape);                                             \
    template Tensor<T> sum(Tape<T>&, const Tensor<T>&);                                                        \
    template Tensor<T> mean(Tape<T>&, const Tensor<T>&);

ISP_INSTANTIATE_OPS(float)
ISP_INSTANTIATE_OPS(double)
ISP_INSTANTIATE_OPS(long double)

#undef ISP_INSTANTIATE_OPS

} // namespace isp::ad
