#pragma once

#include <cstddef>
#include <cstdint>

namespace chunksr::kern {

// Inner-loop kernels behind the tensor ops. Two variants exist: a scalar
// reference and an AVX2 one, selected once at runtime. Both follow the same
// pinned arithmetic contract so their results are bit-identical:
//   - dot products accumulate in f64, in (c, ky, kx) order, one accumulator
//     per output element, fused multiply-add;
//   - cross-element reductions use four f64 lanes (lane = index & 3 within a
//     row), combined as (l0+l1) + (l2+l3);
//   - elementwise f32 math uses an identical unfused operation sequence.
// Equivalence is asserted bit-for-bit in tests/test_kernels.cpp.
struct Kernels {
    const char* name;

    // inpad: [c_in][hp][wp] zero-padded single image,
    // w: [c_out][c_in][k][k], bias: [c_out] (may be null),
    // out: [c_out][ho][wo] with ho = hp-k+1, wo = wp-k+1.
    void (*conv_fwd)(const float* inpad, int c_in, int hp, int wp,
                     const float* w, const float* bias, int c_out, int k,
                     float* out);

    // gopad: [c_out][hp][wp] padded grad-output; gin: [c_in][ho][wo];
    // weights applied 180-degree flipped.
    void (*conv_grad_input)(const float* gopad, int c_out, int hp, int wp,
                            const float* w, int c_in, int k, float* gin);

    // Accumulates one image's weight/bias gradient contributions:
    //   gw_acc[co][ci][ky][kx] += sum_{y,x} go[co][y][x] * inpad[ci][y+ky][x+kx]
    //   gb_acc[co]             += sum_{y,x} go[co][y][x]
    // go: [c_out][ho][wo], same geometry as conv_fwd.
    void (*conv_grad_w)(const float* inpad, int c_in, int hp, int wp,
                        const float* go, int c_out, int k,
                        double* gw_acc, double* gb_acc);

    void (*relu_fwd)(const float* x, float* y, size_t n);
    void (*relu_bwd)(const float* x, const float* g, float* gx, size_t n);
    void (*tanh_fwd)(const float* x, float* y, size_t n);
    // gx = g * (1 - y*y), y is the forward output
    void (*tanh_bwd)(const float* y, const float* g, float* gx, size_t n);

    // y += a * x, plain f32 multiply then add
    void (*axpy)(float* y, const float* x, float a, size_t n);

    // out[i] = s * sign(a[i] - b[i]), sign(0) = 0
    void (*sign_scale)(const float* a, const float* b, float s, float* out,
                       size_t n);

    double (*sum_abs_diff)(const float* a, const float* b, size_t n);
    double (*sum_sq_diff)(const float* a, const float* b, size_t n);

    // One Adam update over n coordinates. Per-element math in f64, storage
    // f32. bc1/bc2 are the bias corrections 1-b1^t and 1-b2^t.
    void (*adam_step)(float* p, float* m, float* v, const float* g, size_t n,
                      double lr, double b1, double b2, double eps, double bc1,
                      double bc2);
};

const Kernels& scalar_kernels();
const Kernels& avx2_kernels();  // valid only when avx2_compiled()

bool avx2_compiled();
bool avx2_supported();  // runtime CPUID check

// AVX2 when compiled in, supported and not disabled, otherwise scalar.
// Disabled via set_simd_enabled(false) or env CHUNKSR_SIMD=0.
const Kernels& active_kernels();
void set_simd_enabled(bool enabled);
bool simd_enabled();

}  // namespace chunksr::kern
