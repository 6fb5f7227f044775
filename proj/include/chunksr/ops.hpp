#pragma once

#include <cstdint>
#include <vector>

#include "chunksr/tensor.hpp"

namespace chunksr::ops {

enum class Act { relu, tanh };

// Cross-correlation with zero padding, stride 1.
// weights: (C_out, C_in, k, k); output (N, C_out, H+2p-k+1, W+2p-k+1).
Tensor conv2d_forward(const Tensor& input, const Tensor& weights,
                      const std::vector<float>& bias, int padding);

struct ConvGrads {
    Tensor grad_input;
    Tensor grad_weights;
    std::vector<float> grad_bias;
};

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights,
                          int padding, const Tensor& grad_output);

// Raw-pointer variants used by the model graph (no weight tensor copies).
void conv2d_forward_raw(const Tensor& input, const float* w, const float* bias,
                        int c_out, int k, int padding, Tensor& out);
// Accumulates weight/bias grads into f64 buffers; writes grad_input if
// grad_input != nullptr.
void conv2d_backward_raw(const Tensor& input, const float* w, int c_out, int k,
                         int padding, const Tensor& grad_output,
                         double* gw_acc, double* gb_acc, Tensor* grad_input);

Tensor activation_forward(Act kind, const Tensor& x);
// Derivative taken at the forward input x.
Tensor activation_backward(Act kind, const Tensor& x, const Tensor& grad);

// out[n, c, y*r+i, x*r+j] = in[n, c*r*r + i*r + j, y, x]
Tensor pixel_shuffle(const Tensor& input, int r);
// Inverse index permutation; routes gradients back to the forward layout.
Tensor pixel_shuffle_backward(const Tensor& grad_output, int r);

// Catmull-Rom bicubic (a = -0.5), edge clamp, pixel-center alignment.
Tensor bicubic_resize(const Tensor& input, double scale);
Tensor bicubic_resize_to(const Tensor& input, int out_h, int out_w);

struct L1Result {
    double loss;
    Tensor grad_pred;
};
// Mean absolute error; grad = sign(pred - target) / numel, sign(0) = 0.
L1Result l1_loss(const Tensor& pred, const Tensor& target);

struct AdamState {
    std::vector<float> m, v;
    int64_t t = 0;
    double lr = 1e-4;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    // running beta powers, avoids std::pow
    double b1t = 1.0, b2t = 1.0;

    AdamState() = default;
    AdamState(size_t n, double lr_) : m(n, 0.0f), v(n, 0.0f), lr(lr_) {}
};

void adam_step(std::vector<float>& params, const std::vector<float>& grads,
               AdamState& state);

// 10*log10(max_value^2 / MSE), capped at 100 dB when MSE == 0.
double psnr(const Tensor& a, const Tensor& b, double max_value,
            double cap_db = 100.0);

}  // namespace chunksr::ops
