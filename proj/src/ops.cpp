#include "chunksr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "chunksr/kernels.hpp"

namespace chunksr::ops {
namespace {

// Copies image ni of `t` into a zero-padded [C][h+2p][w+2p] buffer. Negative
// p crops instead (used by the backward pass when padding exceeds k-1).
void pad_image(const Tensor& t, int ni, int p, std::vector<float>& buf) {
    const int hp = t.h + 2 * p;
    const int wp = t.w + 2 * p;
    buf.assign(static_cast<size_t>(t.c) * hp * wp, 0.0f);
    if (p >= 0) {
        for (int ci = 0; ci < t.c; ++ci) {
            const float* src = t.plane(ni, ci);
            float* dst =
                buf.data() + (static_cast<size_t>(ci) * hp + p) * wp + p;
            for (int y = 0; y < t.h; ++y) {
                std::memcpy(dst + static_cast<size_t>(y) * wp,
                            src + static_cast<size_t>(y) * t.w,
                            sizeof(float) * t.w);
            }
        }
    } else {
        const int crop = -p;
        for (int ci = 0; ci < t.c; ++ci) {
            const float* src = t.plane(ni, ci) +
                               static_cast<size_t>(crop) * t.w + crop;
            float* dst = buf.data() + static_cast<size_t>(ci) * hp * wp;
            for (int y = 0; y < hp; ++y) {
                std::memcpy(dst + static_cast<size_t>(y) * wp,
                            src + static_cast<size_t>(y) * t.w,
                            sizeof(float) * wp);
            }
        }
    }
}

void check_conv_shapes(const Tensor& input, int c_in, int c_out, int k,
                       int padding) {
    if (input.c != c_in) {
        throw std::invalid_argument(
            "conv2d: input channels (" + std::to_string(input.c) +
            ") do not match kernel C_in (" + std::to_string(c_in) + ")");
    }
    if (padding < 0) throw std::invalid_argument("conv2d: negative padding");
    if (k < 1 || c_out < 1) throw std::invalid_argument("conv2d: bad kernel");
    const int ho = input.h + 2 * padding - k + 1;
    const int wo = input.w + 2 * padding - k + 1;
    if (ho < 1 || wo < 1) {
        throw std::invalid_argument(
            "conv2d: kernel " + std::to_string(k) + " larger than padded input " +
            std::to_string(input.h + 2 * padding) + "x" +
            std::to_string(input.w + 2 * padding));
    }
}

// Catmull-Rom weight, a = -0.5
inline double cubic_weight(double t) {
    t = std::abs(t);
    if (t <= 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
    if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weights,
                      const std::vector<float>& bias, int padding) {
    if (static_cast<int>(bias.size()) != weights.n && !bias.empty()) {
        throw std::invalid_argument("conv2d: bias length " +
                                    std::to_string(bias.size()) +
                                    " != C_out " + std::to_string(weights.n));
    }
    if (weights.h != weights.w) {
        throw std::invalid_argument("conv2d: non-square kernel");
    }
    check_conv_shapes(input, weights.c, weights.n, weights.h, padding);
    Tensor out;
    conv2d_forward_raw(input, weights.data.data(),
                       bias.empty() ? nullptr : bias.data(), weights.n,
                       weights.h, padding, out);
    return out;
}

void conv2d_forward_raw(const Tensor& input, const float* w, const float* bias,
                        int c_out, int k, int padding, Tensor& out) {
    const int ho = input.h + 2 * padding - k + 1;
    const int wo = input.w + 2 * padding - k + 1;
    if (ho < 1 || wo < 1) {
        throw std::invalid_argument("conv2d: empty output");
    }
    out = Tensor(input.n, c_out, ho, wo);
    const auto& K = kern::active_kernels();
    std::vector<float> padbuf;
    for (int ni = 0; ni < input.n; ++ni) {
        pad_image(input, ni, padding, padbuf);
        K.conv_fwd(padbuf.data(), input.c, input.h + 2 * padding,
                   input.w + 2 * padding, w, bias, c_out, k, out.image(ni));
    }
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights,
                          int padding, const Tensor& grad_output) {
    check_conv_shapes(input, weights.c, weights.n, weights.h, padding);
    const int k = weights.h;
    const int ho = input.h + 2 * padding - k + 1;
    const int wo = input.w + 2 * padding - k + 1;
    if (grad_output.n != input.n || grad_output.c != weights.n ||
        grad_output.h != ho || grad_output.w != wo) {
        throw std::invalid_argument(
            "conv2d_backward: grad_output shape " + grad_output.shape_str() +
            " does not match forward output (" + std::to_string(input.n) + "," +
            std::to_string(weights.n) + "," + std::to_string(ho) + "," +
            std::to_string(wo) + ")");
    }
    ConvGrads grads;
    std::vector<double> gw(weights.numel(), 0.0);
    std::vector<double> gb(weights.n, 0.0);
    conv2d_backward_raw(input, weights.data.data(), weights.n, k, padding,
                        grad_output, gw.data(), gb.data(), &grads.grad_input);
    grads.grad_weights = Tensor(weights.n, weights.c, k, k);
    for (size_t i = 0; i < gw.size(); ++i) {
        grads.grad_weights.data[i] = static_cast<float>(gw[i]);
    }
    grads.grad_bias.resize(weights.n);
    for (int i = 0; i < weights.n; ++i) {
        grads.grad_bias[i] = static_cast<float>(gb[i]);
    }
    return grads;
}

void conv2d_backward_raw(const Tensor& input, const float* w, int c_out, int k,
                         int padding, const Tensor& grad_output,
                         double* gw_acc, double* gb_acc, Tensor* grad_input) {
    const auto& K = kern::active_kernels();
    std::vector<float> padbuf;
    for (int ni = 0; ni < input.n; ++ni) {
        pad_image(input, ni, padding, padbuf);
        K.conv_grad_w(padbuf.data(), input.c, input.h + 2 * padding,
                      input.w + 2 * padding, grad_output.image(ni), c_out, k,
                      gw_acc, gb_acc);
    }
    if (grad_input) {
        // full correlation of grad_output with the flipped kernel; q turns
        // negative (a crop) when padding exceeds k-1
        const int q = k - 1 - padding;
        *grad_input = Tensor(input.n, input.c, input.h, input.w);
        std::vector<float> gopad;
        for (int ni = 0; ni < input.n; ++ni) {
            pad_image(grad_output, ni, q, gopad);
            K.conv_grad_input(gopad.data(), c_out, grad_output.h + 2 * q,
                              grad_output.w + 2 * q, w, input.c, k,
                              grad_input->image(ni));
        }
    }
}

Tensor activation_forward(Act kind, const Tensor& x) {
    Tensor y(x.n, x.c, x.h, x.w);
    const auto& K = kern::active_kernels();
    if (kind == Act::relu) {
        K.relu_fwd(x.data.data(), y.data.data(), x.numel());
    } else {
        K.tanh_fwd(x.data.data(), y.data.data(), x.numel());
    }
    return y;
}

Tensor activation_backward(Act kind, const Tensor& x, const Tensor& grad) {
    require_same_shape(x, grad, "activation_backward");
    Tensor gx(x.n, x.c, x.h, x.w);
    const auto& K = kern::active_kernels();
    if (kind == Act::relu) {
        K.relu_bwd(x.data.data(), grad.data.data(), gx.data.data(), x.numel());
    } else {
        Tensor y(x.n, x.c, x.h, x.w);
        K.tanh_fwd(x.data.data(), y.data.data(), x.numel());
        K.tanh_bwd(y.data.data(), grad.data.data(), gx.data.data(), x.numel());
    }
    return gx;
}

Tensor pixel_shuffle(const Tensor& input, int r) {
    if (r < 1) throw std::invalid_argument("pixel_shuffle: r < 1");
    if (input.c % (r * r) != 0) {
        throw std::invalid_argument(
            "pixel_shuffle: channels (" + std::to_string(input.c) +
            ") not divisible by r^2 (" + std::to_string(r * r) + ")");
    }
    const int co = input.c / (r * r);
    Tensor out(input.n, co, input.h * r, input.w * r);
    for (int ni = 0; ni < input.n; ++ni) {
        for (int ci = 0; ci < co; ++ci) {
            float* op = out.plane(ni, ci);
            for (int i = 0; i < r; ++i) {
                for (int j = 0; j < r; ++j) {
                    const float* ip = input.plane(ni, ci * r * r + i * r + j);
                    for (int y = 0; y < input.h; ++y) {
                        float* orow =
                            op + (static_cast<size_t>(y) * r + i) * out.w + j;
                        const float* irow = ip + static_cast<size_t>(y) * input.w;
                        for (int x = 0; x < input.w; ++x) {
                            orow[static_cast<size_t>(x) * r] = irow[x];
                        }
                    }
                }
            }
        }
    }
    return out;
}

Tensor pixel_shuffle_backward(const Tensor& grad_output, int r) {
    if (r < 1) throw std::invalid_argument("pixel_shuffle: r < 1");
    if (grad_output.h % r != 0 || grad_output.w % r != 0) {
        throw std::invalid_argument("pixel_shuffle_backward: dims " +
                                    grad_output.shape_str() +
                                    " not divisible by r");
    }
    const int h = grad_output.h / r;
    const int w = grad_output.w / r;
    Tensor gin(grad_output.n, grad_output.c * r * r, h, w);
    for (int ni = 0; ni < grad_output.n; ++ni) {
        for (int ci = 0; ci < grad_output.c; ++ci) {
            const float* gp = grad_output.plane(ni, ci);
            for (int i = 0; i < r; ++i) {
                for (int j = 0; j < r; ++j) {
                    float* ip = gin.plane(ni, ci * r * r + i * r + j);
                    for (int y = 0; y < h; ++y) {
                        const float* grow =
                            gp + (static_cast<size_t>(y) * r + i) * grad_output.w +
                            j;
                        float* irow = ip + static_cast<size_t>(y) * w;
                        for (int x = 0; x < w; ++x) {
                            irow[x] = grow[static_cast<size_t>(x) * r];
                        }
                    }
                }
            }
        }
    }
    return gin;
}

Tensor bicubic_resize_to(const Tensor& input, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) {
        throw std::invalid_argument("bicubic_resize: empty output " +
                                    std::to_string(out_h) + "x" +
                                    std::to_string(out_w));
    }
    Tensor out(input.n, input.c, out_h, out_w);
    const double ry = static_cast<double>(input.h) / out_h;
    const double rx = static_cast<double>(input.w) / out_w;

    // per-axis taps and weights, shared across channels/images
    std::vector<int> ty(static_cast<size_t>(out_h) * 4);
    std::vector<double> wy(static_cast<size_t>(out_h) * 4);
    std::vector<int> tx(static_cast<size_t>(out_w) * 4);
    std::vector<double> wx(static_cast<size_t>(out_w) * 4);
    auto fill_axis = [](int n_out, double ratio, int n_in, int* taps,
                        double* wts) {
        for (int i = 0; i < n_out; ++i) {
            const double src = (i + 0.5) * ratio - 0.5;
            const int base = static_cast<int>(std::floor(src)) - 1;
            for (int j = 0; j < 4; ++j) {
                const int p = base + j;
                taps[i * 4 + j] = std::clamp(p, 0, n_in - 1);
                wts[i * 4 + j] = cubic_weight(src - p);
            }
        }
    };
    fill_axis(out_h, ry, input.h, ty.data(), wy.data());
    fill_axis(out_w, rx, input.w, tx.data(), wx.data());

    for (int ni = 0; ni < input.n; ++ni) {
        for (int ci = 0; ci < input.c; ++ci) {
            const float* ip = input.plane(ni, ci);
            float* op = out.plane(ni, ci);
            for (int y = 0; y < out_h; ++y) {
                for (int x = 0; x < out_w; ++x) {
                    double acc = 0.0;
                    for (int j = 0; j < 4; ++j) {
                        const float* row =
                            ip + static_cast<size_t>(ty[y * 4 + j]) * input.w;
                        double rowacc = 0.0;
                        for (int i = 0; i < 4; ++i) {
                            rowacc += wx[x * 4 + i] *
                                      static_cast<double>(row[tx[x * 4 + i]]);
                        }
                        acc += wy[y * 4 + j] * rowacc;
                    }
                    op[static_cast<size_t>(y) * out_w + x] =
                        static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

Tensor bicubic_resize(const Tensor& input, double scale) {
    if (scale <= 0.0) throw std::invalid_argument("bicubic_resize: scale <= 0");
    // epsilon guards binary representation of rational scales like 1/3
    const int out_h = static_cast<int>(std::floor(input.h * scale + 1e-6));
    const int out_w = static_cast<int>(std::floor(input.w * scale + 1e-6));
    return bicubic_resize_to(input, out_h, out_w);
}

L1Result l1_loss(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "l1_loss");
    const auto& K = kern::active_kernels();
    const size_t n = pred.numel();
    L1Result res;
    res.loss = K.sum_abs_diff(pred.data.data(), target.data.data(), n) /
               static_cast<double>(n);
    res.grad_pred = Tensor(pred.n, pred.c, pred.h, pred.w);
    const float gscale = static_cast<float>(1.0 / static_cast<double>(n));
    K.sign_scale(pred.data.data(), target.data.data(), gscale,
                 res.grad_pred.data.data(), n);
    return res;
}

void adam_step(std::vector<float>& params, const std::vector<float>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || state.m.size() != params.size() ||
        state.v.size() != params.size()) {
        throw std::invalid_argument(
            "adam_step: length mismatch (params " +
            std::to_string(params.size()) + ", grads " +
            std::to_string(grads.size()) + ", state " +
            std::to_string(state.m.size()) + ")");
    }
    state.t += 1;
    state.b1t *= state.beta1;
    state.b2t *= state.beta2;
    const double bc1 = 1.0 - state.b1t;
    const double bc2 = 1.0 - state.b2t;
    kern::active_kernels().adam_step(params.data(), state.m.data(),
                                     state.v.data(), grads.data(),
                                     params.size(), state.lr, state.beta1,
                                     state.beta2, state.eps, bc1, bc2);
}

double psnr(const Tensor& a, const Tensor& b, double max_value, double cap_db) {
    require_same_shape(a, b, "psnr");
    if (max_value <= 0.0) throw std::invalid_argument("psnr: max_value <= 0");
    const double sq =
        kern::active_kernels().sum_sq_diff(a.data.data(), b.data.data(),
                                           a.numel());
    if (sq == 0.0) return cap_db;
    const double mse = sq / static_cast<double>(a.numel());
    const double v = 10.0 * std::log10(max_value * max_value / mse);
    return std::min(v, cap_db);
}

}  // namespace chunksr::ops
