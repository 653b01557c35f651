#pragma once

// Templated forward/reverse kernels for the fixed layer vocabulary. The
// float instantiation is the production path; tests instantiate double to
// verify the backward pass against central finite differences.

#include <cmath>
#include <cstddef>
#include <string>

#include "mfid/errors.hpp"
#include "mfid/sut.hpp"

namespace mfid::detail {

// Scratch for the stride-2 deinterleave trick: even[j] = row[2j],
// odd[j] = row[2j+1], so every kernel tap reads a contiguous array.
template <class T>
struct ConvScratch {
    std::vector<T> even, odd, acc_e, acc_o;
};

template <class T>
void conv3x3_forward(const float* w, const float* bias, const T* in, T* out, int in_c,
                     int out_c, int h, int wd, int oh, int ow, int stride,
                     ConvScratch<T>& scratch) {
    for (int oc = 0; oc < out_c; ++oc) {
        T* op = out + static_cast<size_t>(oc) * oh * ow;
        const T b = static_cast<T>(bias[oc]);
        for (int i = 0; i < oh * ow; ++i) op[i] = b;
    }
    if (stride == 1) {
        for (int oc = 0; oc < out_c; ++oc) {
            T* op = out + static_cast<size_t>(oc) * oh * ow;
            for (int ic = 0; ic < in_c; ++ic) {
                const T* ip = in + static_cast<size_t>(ic) * h * wd;
                const float* w9 = w + (static_cast<size_t>(oc) * in_c + ic) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    const T k0 = static_cast<T>(w9[ky * 3 + 0]);
                    const T k1 = static_cast<T>(w9[ky * 3 + 1]);
                    const T k2 = static_cast<T>(w9[ky * 3 + 2]);
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        const T* irow = ip + static_cast<size_t>(iy) * wd;
                        T* orow = op + static_cast<size_t>(oy) * ow;
                        orow[0] += k1 * irow[0] + (wd > 1 ? k2 * irow[1] : T(0));
                        for (int ox = 1; ox < ow - 1; ++ox)
                            orow[ox] += k0 * irow[ox - 1] + k1 * irow[ox] + k2 * irow[ox + 1];
                        if (ow > 1)
                            orow[ow - 1] += k0 * irow[ow - 2] + k1 * irow[ow - 1] +
                                            (ow < wd ? k2 * irow[ow] : T(0));
                    }
                }
            }
        }
        return;
    }
    // stride 2: ix = 2*ox - 1, taps hit odd[ox-1], even[ox], odd[ox]
    const int half = (wd + 1) / 2;
    scratch.even.resize(static_cast<size_t>(half) + 1);
    scratch.odd.resize(static_cast<size_t>(half) + 1);
    for (int ic = 0; ic < in_c; ++ic) {
        const T* ip = in + static_cast<size_t>(ic) * h * wd;
        for (int iy = 0; iy < h; ++iy) {
            const T* irow = ip + static_cast<size_t>(iy) * wd;
            T* ev = scratch.even.data();
            T* od = scratch.odd.data();
            for (int j = 0; j < half; ++j) {
                ev[j] = irow[2 * j];
                od[j] = (2 * j + 1 < wd) ? irow[2 * j + 1] : T(0);
            }
            for (int oc = 0; oc < out_c; ++oc) {
                const float* w9 = w + (static_cast<size_t>(oc) * in_c + ic) * 9;
                T* op = out + static_cast<size_t>(oc) * oh * ow;
                for (int ky = 0; ky < 3; ++ky) {
                    const int oy2 = iy + 1 - ky;  // oy * 2 == iy + 1 - ky
                    if (oy2 < 0 || (oy2 & 1) || oy2 / 2 >= oh) continue;
                    const int oy = oy2 / 2;
                    const T k0 = static_cast<T>(w9[ky * 3 + 0]);
                    const T k1 = static_cast<T>(w9[ky * 3 + 1]);
                    const T k2 = static_cast<T>(w9[ky * 3 + 2]);
                    T* orow = op + static_cast<size_t>(oy) * ow;
                    orow[0] += k1 * ev[0] + k2 * od[0];
                    for (int ox = 1; ox < ow; ++ox)
                        orow[ox] += k0 * od[ox - 1] + k1 * ev[ox] + k2 * od[ox];
                }
            }
        }
    }
}

template <class T>
void conv3x3_backward_input(const float* w, const T* dout, T* din, int in_c, int out_c,
                            int h, int wd, int oh, int ow, int stride,
                            ConvScratch<T>& scratch) {
    for (size_t i = 0; i < static_cast<size_t>(in_c) * h * wd; ++i) din[i] = T(0);
    if (stride == 1) {
        for (int oc = 0; oc < out_c; ++oc) {
            const T* dop = dout + static_cast<size_t>(oc) * oh * ow;
            for (int ic = 0; ic < in_c; ++ic) {
                T* dip = din + static_cast<size_t>(ic) * h * wd;
                const float* w9 = w + (static_cast<size_t>(oc) * in_c + ic) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    const T k0 = static_cast<T>(w9[ky * 3 + 0]);
                    const T k1 = static_cast<T>(w9[ky * 3 + 1]);
                    const T k2 = static_cast<T>(w9[ky * 3 + 2]);
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        T* drow = dip + static_cast<size_t>(iy) * wd;
                        const T* dorow = dop + static_cast<size_t>(oy) * ow;
                        // din[ox-1..ox+1] += k * g; shift to contiguous loops
                        for (int ox = 1; ox < ow; ++ox) drow[ox - 1] += k0 * dorow[ox];
                        for (int ox = 0; ox < ow; ++ox) drow[ox] += k1 * dorow[ox];
                        for (int ox = 0; ox < ow && ox + 1 < wd; ++ox)
                            drow[ox + 1] += k2 * dorow[ox];
                    }
                }
            }
        }
        return;
    }
    const int half = (wd + 1) / 2;
    scratch.acc_e.resize(static_cast<size_t>(half) + 1);
    scratch.acc_o.resize(static_cast<size_t>(half) + 1);
    for (int ic = 0; ic < in_c; ++ic) {
        T* dip = din + static_cast<size_t>(ic) * h * wd;
        for (int iy = 0; iy < h; ++iy) {
            T* ae = scratch.acc_e.data();
            T* ao = scratch.acc_o.data();
            for (int j = 0; j <= half; ++j) {
                ae[j] = T(0);
                ao[j] = T(0);
            }
            bool touched = false;
            for (int oc = 0; oc < out_c; ++oc) {
                const float* w9 = w + (static_cast<size_t>(oc) * in_c + ic) * 9;
                const T* dop = dout + static_cast<size_t>(oc) * oh * ow;
                for (int ky = 0; ky < 3; ++ky) {
                    const int oy2 = iy + 1 - ky;
                    if (oy2 < 0 || (oy2 & 1) || oy2 / 2 >= oh) continue;
                    const int oy = oy2 / 2;
                    const T k0 = static_cast<T>(w9[ky * 3 + 0]);
                    const T k1 = static_cast<T>(w9[ky * 3 + 1]);
                    const T k2 = static_cast<T>(w9[ky * 3 + 2]);
                    const T* dorow = dop + static_cast<size_t>(oy) * ow;
                    touched = true;
                    ao[0] += k2 * dorow[0];
                    ae[0] += k1 * dorow[0];
                    for (int ox = 1; ox < ow; ++ox) {
                        const T g = dorow[ox];
                        ao[ox - 1] += k0 * g;
                        ae[ox] += k1 * g;
                        ao[ox] += k2 * g;
                    }
                }
            }
            if (!touched) continue;
            T* drow = dip + static_cast<size_t>(iy) * wd;
            for (int j = 0; j < half; ++j) {
                drow[2 * j] += ae[j];
                if (2 * j + 1 < wd) drow[2 * j + 1] += ao[j];
            }
        }
    }
}

template <class T>
void conv3x3_backward_weights(const T* in, const T* dout, float* dw, float* db, int in_c,
                              int out_c, int h, int wd, int oh, int ow, int stride) {
    for (int oc = 0; oc < out_c; ++oc) {
        const T* dop = dout + static_cast<size_t>(oc) * oh * ow;
        T bacc = T(0);
        for (int i = 0; i < oh * ow; ++i) bacc += dop[i];
        db[oc] += static_cast<float>(bacc);
        for (int ic = 0; ic < in_c; ++ic) {
            const T* ip = in + static_cast<size_t>(ic) * h * wd;
            float* w9 = dw + (static_cast<size_t>(oc) * in_c + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                T a0 = T(0), a1 = T(0), a2 = T(0);
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - 1;
                    if (iy < 0 || iy >= h) continue;
                    const T* irow = ip + static_cast<size_t>(iy) * wd;
                    const T* dorow = dop + static_cast<size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - 1;
                        const T g = dorow[ox];
                        if (ix >= 0) a0 += g * irow[ix];
                        if (ix + 1 < wd) a1 += g * irow[ix + 1];
                        if (ix + 2 < wd) a2 += g * irow[ix + 2];
                    }
                }
                w9[ky * 3 + 0] += static_cast<float>(a0);
                w9[ky * 3 + 1] += static_cast<float>(a1);
                w9[ky * 3 + 2] += static_cast<float>(a2);
            }
        }
    }
}

template <class T>
void conv1x1_forward(const float* w, const float* bias, const T* in, T* out, int in_c,
                     int out_c, int pixels) {
    for (int oc = 0; oc < out_c; ++oc) {
        T* op = out + static_cast<size_t>(oc) * pixels;
        const T b = static_cast<T>(bias[oc]);
        for (int i = 0; i < pixels; ++i) op[i] = b;
        for (int ic = 0; ic < in_c; ++ic) {
            const T k = static_cast<T>(w[static_cast<size_t>(oc) * in_c + ic]);
            const T* ip = in + static_cast<size_t>(ic) * pixels;
            for (int i = 0; i < pixels; ++i) op[i] += k * ip[i];
        }
    }
}

template <class T>
void conv1x1_backward_input(const float* w, const T* dout, T* din, int in_c, int out_c,
                            int pixels) {
    for (size_t i = 0; i < static_cast<size_t>(in_c) * pixels; ++i) din[i] = T(0);
    for (int oc = 0; oc < out_c; ++oc) {
        const T* dop = dout + static_cast<size_t>(oc) * pixels;
        for (int ic = 0; ic < in_c; ++ic) {
            const T k = static_cast<T>(w[static_cast<size_t>(oc) * in_c + ic]);
            T* dip = din + static_cast<size_t>(ic) * pixels;
            for (int i = 0; i < pixels; ++i) dip[i] += k * dop[i];
        }
    }
}

template <class T>
void conv1x1_backward_weights(const T* in, const T* dout, float* dw, float* db, int in_c,
                              int out_c, int pixels) {
    for (int oc = 0; oc < out_c; ++oc) {
        const T* dop = dout + static_cast<size_t>(oc) * pixels;
        T bacc = T(0);
        for (int i = 0; i < pixels; ++i) bacc += dop[i];
        db[oc] += static_cast<float>(bacc);
        for (int ic = 0; ic < in_c; ++ic) {
            const T* ip = in + static_cast<size_t>(ic) * pixels;
            T acc = T(0);
            for (int i = 0; i < pixels; ++i) acc += dop[i] * ip[i];
            dw[static_cast<size_t>(oc) * in_c + ic] += static_cast<float>(acc);
        }
    }
}

// Bilinear upsample by an integer factor with cell-center alignment; the
// adjoint scatters with the same weights.
template <class T>
void upsample_forward(const T* in, T* out, int c, int h, int w, int factor) {
    const int oh = h * factor, ow = w * factor;
    const float s = 1.f / static_cast<float>(factor);
    for (int y = 0; y < oh; ++y) {
        const float fy = (static_cast<float>(y) + 0.5f) * s - 0.5f;
        int y0 = static_cast<int>(std::floor(fy));
        const float wy = fy - static_cast<float>(y0);
        int y1 = y0 + 1;
        y0 = y0 < 0 ? 0 : (y0 >= h ? h - 1 : y0);
        y1 = y1 < 0 ? 0 : (y1 >= h ? h - 1 : y1);
        for (int x = 0; x < ow; ++x) {
            const float fx = (static_cast<float>(x) + 0.5f) * s - 0.5f;
            int x0 = static_cast<int>(std::floor(fx));
            const float wx = fx - static_cast<float>(x0);
            int x1 = x0 + 1;
            x0 = x0 < 0 ? 0 : (x0 >= w ? w - 1 : x0);
            x1 = x1 < 0 ? 0 : (x1 >= w ? w - 1 : x1);
            for (int ch = 0; ch < c; ++ch) {
                const T* ip = in + static_cast<size_t>(ch) * h * w;
                out[(static_cast<size_t>(ch) * oh + y) * ow + x] =
                    static_cast<T>((1.f - wy) * (1.f - wx)) * ip[static_cast<size_t>(y0) * w + x0] +
                    static_cast<T>((1.f - wy) * wx) * ip[static_cast<size_t>(y0) * w + x1] +
                    static_cast<T>(wy * (1.f - wx)) * ip[static_cast<size_t>(y1) * w + x0] +
                    static_cast<T>(wy * wx) * ip[static_cast<size_t>(y1) * w + x1];
            }
        }
    }
}

template <class T>
void upsample_backward(const T* dout, T* din, int c, int h, int w, int factor) {
    const int oh = h * factor, ow = w * factor;
    const float s = 1.f / static_cast<float>(factor);
    for (size_t i = 0; i < static_cast<size_t>(c) * h * w; ++i) din[i] = T(0);
    for (int y = 0; y < oh; ++y) {
        const float fy = (static_cast<float>(y) + 0.5f) * s - 0.5f;
        int y0 = static_cast<int>(std::floor(fy));
        const float wy = fy - static_cast<float>(y0);
        int y1 = y0 + 1;
        y0 = y0 < 0 ? 0 : (y0 >= h ? h - 1 : y0);
        y1 = y1 < 0 ? 0 : (y1 >= h ? h - 1 : y1);
        for (int x = 0; x < ow; ++x) {
            const float fx = (static_cast<float>(x) + 0.5f) * s - 0.5f;
            int x0 = static_cast<int>(std::floor(fx));
            const float wx = fx - static_cast<float>(x0);
            int x1 = x0 + 1;
            x0 = x0 < 0 ? 0 : (x0 >= w ? w - 1 : x0);
            x1 = x1 < 0 ? 0 : (x1 >= w ? w - 1 : x1);
            for (int ch = 0; ch < c; ++ch) {
                const T g = dout[(static_cast<size_t>(ch) * oh + y) * ow + x];
                T* dp = din + static_cast<size_t>(ch) * h * w;
                dp[static_cast<size_t>(y0) * w + x0] += static_cast<T>((1.f - wy) * (1.f - wx)) * g;
                dp[static_cast<size_t>(y0) * w + x1] += static_cast<T>((1.f - wy) * wx) * g;
                dp[static_cast<size_t>(y1) * w + x0] += static_cast<T>(wy * (1.f - wx)) * g;
                dp[static_cast<size_t>(y1) * w + x1] += static_cast<T>(wy * wx) * g;
            }
        }
    }
}

// Reusable forward/backward state for one SUT. act[0] is the planar input;
// act[i+1] is layer i's output.
template <class T>
struct SutRunnerT {
    const ReferenceSut* sut;
    std::vector<std::vector<T>> act;
    std::vector<std::vector<T>> grad;
    ConvScratch<T> scratch;

    explicit SutRunnerT(const ReferenceSut& s) : sut(&s) {
        act.resize(s.layers.size() + 1);
        grad.resize(s.layers.size() + 1);
        for (size_t i = 0; i < s.shapes.size(); ++i) {
            const auto& sh = s.shapes[i];
            act[i].resize(static_cast<size_t>(sh[0]) * sh[1] * sh[2]);
            grad[i].resize(act[i].size());
        }
    }

    std::span<const T> forward(std::span<const float> hwc) {
        const auto& s = *sut;
        const int h = s.in_h, w = s.in_w, c = s.in_c;
        if (hwc.size() != static_cast<size_t>(h) * w * c)
            throw DimensionError("sut forward: input shape mismatch");
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    act[0][(static_cast<size_t>(ch) * h + y) * w + x] =
                        static_cast<T>(hwc[(static_cast<size_t>(y) * w + x) * c + ch]);

        for (size_t li = 0; li < s.layers.size(); ++li) {
            const auto& L = s.layers[li];
            const auto& in_sh = s.shapes[li];
            const auto& out_sh = s.shapes[li + 1];
            const T* in = act[li].data();
            T* out = act[li + 1].data();
            switch (L.kind) {
                case LayerKind::conv3x3:
                    conv3x3_forward(s.weights[li].data(),
                                    s.weights[li].data() + static_cast<size_t>(L.out_c) * L.in_c * 9,
                                    in, out, L.in_c, L.out_c, in_sh[1], in_sh[2], out_sh[1],
                                    out_sh[2], L.stride, scratch);
                    break;
                case LayerKind::conv1x1:
                    conv1x1_forward(s.weights[li].data(),
                                    s.weights[li].data() + static_cast<size_t>(L.out_c) * L.in_c,
                                    in, out, L.in_c, L.out_c, in_sh[1] * in_sh[2]);
                    break;
                case LayerKind::relu:
                    for (size_t i = 0; i < act[li].size(); ++i)
                        out[i] = in[i] > T(0) ? in[i] : T(0);
                    break;
                case LayerKind::sigmoid:
                    for (size_t i = 0; i < act[li].size(); ++i)
                        out[i] = T(1) / (T(1) + std::exp(-in[i]));
                    break;
                case LayerKind::global_avg_pool: {
                    const T inv = T(1) / static_cast<T>(in_sh[1] * in_sh[2]);
                    for (int ch = 0; ch < in_sh[0]; ++ch) {
                        T acc = T(0);
                        const T* ip = in + static_cast<size_t>(ch) * in_sh[1] * in_sh[2];
                        for (int i = 0; i < in_sh[1] * in_sh[2]; ++i) acc += ip[i];
                        out[ch] = acc * inv;
                    }
                    break;
                }
                case LayerKind::dense: {
                    const float* W = s.weights[li].data();
                    const float* b = W + static_cast<size_t>(L.out_dim) * L.in_dim;
                    for (int o = 0; o < L.out_dim; ++o) {
                        T acc = static_cast<T>(b[o]);
                        const float* wrow = W + static_cast<size_t>(o) * L.in_dim;
                        for (int i = 0; i < L.in_dim; ++i)
                            acc += static_cast<T>(wrow[i]) * in[i];
                        out[o] = acc;
                    }
                    break;
                }
                case LayerKind::upsample_bilinear:
                    upsample_forward(in, out, in_sh[0], in_sh[1], in_sh[2], L.factor);
                    break;
            }
            // poison check: any non-finite value contaminates the sum
            T probe = T(0);
            for (size_t i = 0; i < act[li + 1].size(); ++i) probe += out[i];
            if (!std::isfinite(static_cast<double>(probe)))
                throw NumericError("non-finite activation at layer " + std::to_string(li));
        }
        return std::span<const T>(act.back());
    }

    // Reverse pass for d(objective)/d(input); forward() must have run on the
    // same input. Writes the HWC pixel gradient into grad_hwc.
    void backward_input(std::span<const T> dout, std::vector<T>& grad_hwc) {
        const auto& s = *sut;
        if (dout.size() != act.back().size())
            throw DimensionError("sut backward: output adjoint shape mismatch");
        grad.back().assign(dout.begin(), dout.end());
        for (size_t li = s.layers.size(); li-- > 0;) {
            const auto& L = s.layers[li];
            const auto& in_sh = s.shapes[li];
            const auto& out_sh = s.shapes[li + 1];
            const T* g_out = grad[li + 1].data();
            T* g_in = grad[li].data();
            switch (L.kind) {
                case LayerKind::conv3x3:
                    conv3x3_backward_input(s.weights[li].data(), g_out, g_in, L.in_c, L.out_c,
                                           in_sh[1], in_sh[2], out_sh[1], out_sh[2], L.stride,
                                           scratch);
                    break;
                case LayerKind::conv1x1:
                    conv1x1_backward_input(s.weights[li].data(), g_out, g_in, L.in_c, L.out_c,
                                           in_sh[1] * in_sh[2]);
                    break;
                case LayerKind::relu:
                    for (size_t i = 0; i < grad[li].size(); ++i)
                        g_in[i] = act[li][i] > T(0) ? g_out[i] : T(0);
                    break;
                case LayerKind::sigmoid:
                    for (size_t i = 0; i < grad[li].size(); ++i) {
                        const T y = act[li + 1][i];
                        g_in[i] = g_out[i] * y * (T(1) - y);
                    }
                    break;
                case LayerKind::global_avg_pool: {
                    const T inv = T(1) / static_cast<T>(in_sh[1] * in_sh[2]);
                    for (int ch = 0; ch < in_sh[0]; ++ch) {
                        const T g = g_out[ch] * inv;
                        T* gp = g_in + static_cast<size_t>(ch) * in_sh[1] * in_sh[2];
                        for (int i = 0; i < in_sh[1] * in_sh[2]; ++i) gp[i] = g;
                    }
                    break;
                }
                case LayerKind::dense: {
                    const float* W = s.weights[li].data();
                    for (int i = 0; i < L.in_dim; ++i) g_in[i] = T(0);
                    for (int o = 0; o < L.out_dim; ++o) {
                        const T g = g_out[o];
                        const float* wrow = W + static_cast<size_t>(o) * L.in_dim;
                        for (int i = 0; i < L.in_dim; ++i)
                            g_in[i] += static_cast<T>(wrow[i]) * g;
                    }
                    break;
                }
                case LayerKind::upsample_bilinear:
                    upsample_backward(g_out, g_in, in_sh[0], in_sh[1], in_sh[2], L.factor);
                    break;
            }
        }
        const auto& s0 = s.shapes[0];
        grad_hwc.resize(static_cast<size_t>(s0[1]) * s0[2] * s0[0]);
        for (int ch = 0; ch < s0[0]; ++ch)
            for (int y = 0; y < s0[1]; ++y)
                for (int x = 0; x < s0[2]; ++x)
                    grad_hwc[(static_cast<size_t>(y) * s0[2] + x) * s0[0] + ch] =
                        grad[0][(static_cast<size_t>(ch) * s0[1] + y) * s0[2] + x];
    }
};

}  // namespace mfid::detail
