// Scalar reference kernels. Compiled with -ffp-contract=off so the f32
// sequences stay unfused and match the AVX2 variant bit-for-bit.

#include <cmath>

#include "chunksr/kernels.hpp"

namespace chunksr::kern {
namespace {

void conv_fwd_scalar(const float* inpad, int c_in, int hp, int wp,
                     const float* w, const float* bias, int c_out, int k,
                     float* out) {
    const int ho = hp - k + 1;
    const int wo = wp - k + 1;
    for (int co = 0; co < c_out; ++co) {
        const double b = bias ? static_cast<double>(bias[co]) : 0.0;
        const float* wbase = w + static_cast<size_t>(co) * c_in * k * k;
        float* outp = out + static_cast<size_t>(co) * ho * wo;
        for (int y = 0; y < ho; ++y) {
            for (int x = 0; x < wo; ++x) {
                double acc = b;
                const float* wk = wbase;
                for (int ci = 0; ci < c_in; ++ci) {
                    const float* ip =
                        inpad + (static_cast<size_t>(ci) * hp + y) * wp + x;
                    for (int ky = 0; ky < k; ++ky) {
                        const float* row = ip + static_cast<size_t>(ky) * wp;
                        for (int kx = 0; kx < k; ++kx) {
                            acc = std::fma(static_cast<double>(wk[ky * k + kx]),
                                           static_cast<double>(row[kx]), acc);
                        }
                    }
                    wk += k * k;
                }
                outp[static_cast<size_t>(y) * wo + x] = static_cast<float>(acc);
            }
        }
    }
}

void conv_grad_input_scalar(const float* gopad, int c_out, int hp, int wp,
                            const float* w, int c_in, int k, float* gin) {
    const int ho = hp - k + 1;
    const int wo = wp - k + 1;
    for (int ci = 0; ci < c_in; ++ci) {
        float* gp = gin + static_cast<size_t>(ci) * ho * wo;
        for (int y = 0; y < ho; ++y) {
            for (int x = 0; x < wo; ++x) {
                double acc = 0.0;
                for (int co = 0; co < c_out; ++co) {
                    const float* op =
                        gopad + (static_cast<size_t>(co) * hp + y) * wp + x;
                    const float* wk =
                        w + (static_cast<size_t>(co) * c_in + ci) * k * k;
                    for (int ky = 0; ky < k; ++ky) {
                        const float* row = op + static_cast<size_t>(ky) * wp;
                        const float* wrow = wk + (k - 1 - ky) * k;
                        for (int kx = 0; kx < k; ++kx) {
                            acc = std::fma(static_cast<double>(wrow[k - 1 - kx]),
                                           static_cast<double>(row[kx]), acc);
                        }
                    }
                }
                gp[static_cast<size_t>(y) * wo + x] = static_cast<float>(acc);
            }
        }
    }
}

void conv_grad_w_scalar(const float* inpad, int c_in, int hp, int wp,
                        const float* go, int c_out, int k, double* gw_acc,
                        double* gb_acc) {
    const int ho = hp - k + 1;
    const int wo = wp - k + 1;
    for (int co = 0; co < c_out; ++co) {
        const float* gplane = go + static_cast<size_t>(co) * ho * wo;
        // bias: 4-lane sum over the plane, lane = x & 3 per row
        {
            double lane[4] = {0.0, 0.0, 0.0, 0.0};
            for (int y = 0; y < ho; ++y) {
                const float* grow = gplane + static_cast<size_t>(y) * wo;
                for (int x = 0; x < wo; ++x) {
                    lane[x & 3] += static_cast<double>(grow[x]);
                }
            }
            gb_acc[co] += (lane[0] + lane[1]) + (lane[2] + lane[3]);
        }
        for (int ci = 0; ci < c_in; ++ci) {
            const float* iplane = inpad + static_cast<size_t>(ci) * hp * wp;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    double lane[4] = {0.0, 0.0, 0.0, 0.0};
                    for (int y = 0; y < ho; ++y) {
                        const float* grow = gplane + static_cast<size_t>(y) * wo;
                        const float* irow =
                            iplane + (static_cast<size_t>(y) + ky) * wp + kx;
                        for (int x = 0; x < wo; ++x) {
                            lane[x & 3] =
                                std::fma(static_cast<double>(grow[x]),
                                         static_cast<double>(irow[x]), lane[x & 3]);
                        }
                    }
                    gw_acc[((static_cast<size_t>(co) * c_in + ci) * k + ky) * k +
                           kx] += (lane[0] + lane[1]) + (lane[2] + lane[3]);
                }
            }
        }
    }
}

void relu_fwd_scalar(const float* x, float* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_scalar(const float* x, const float* g, float* gx, size_t n) {
    for (size_t i = 0; i < n; ++i) gx[i] = x[i] > 0.0f ? g[i] : 0.0f;
}

void tanh_fwd_scalar(const float* x, float* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh_bwd_scalar(const float* y, const float* g, float* gx, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        const float t = y[i] * y[i];
        const float u = 1.0f - t;
        gx[i] = g[i] * u;
    }
}

void axpy_scalar(float* y, const float* x, float a, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        const float t = a * x[i];
        y[i] = y[i] + t;
    }
}

void sign_scale_scalar(const float* a, const float* b, float s, float* out,
                       size_t n) {
    for (size_t i = 0; i < n; ++i) {
        out[i] = a[i] > b[i] ? s : (a[i] < b[i] ? -s : 0.0f);
    }
}

double sum_abs_diff_scalar(const float* a, const float* b, size_t n) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    for (size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        lane[i & 3] += std::abs(d);
    }
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double sum_sq_diff_scalar(const float* a, const float* b, size_t n) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    for (size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        lane[i & 3] = std::fma(d, d, lane[i & 3]);
    }
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void adam_step_scalar(float* p, float* m, float* v, const float* g, size_t n,
                      double lr, double b1, double b2, double eps, double bc1,
                      double bc2) {
    const double one_m_b1 = 1.0 - b1;
    const double one_m_b2 = 1.0 - b2;
    for (size_t i = 0; i < n; ++i) {
        const double gi = static_cast<double>(g[i]);
        const double t1 = b1 * static_cast<double>(m[i]);
        const double t2 = one_m_b1 * gi;
        const double m1 = t1 + t2;
        const double gg = gi * gi;
        const double t3 = b2 * static_cast<double>(v[i]);
        const double t4 = one_m_b2 * gg;
        const double v1 = t3 + t4;
        const double mh = m1 / bc1;
        const double vh = v1 / bc2;
        const double den = std::sqrt(vh) + eps;
        const double num = lr * mh;
        const double upd = num / den;
        p[i] = static_cast<float>(static_cast<double>(p[i]) - upd);
        m[i] = static_cast<float>(m1);
        v[i] = static_cast<float>(v1);
    }
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k = {
        "scalar",          conv_fwd_scalar,  conv_grad_input_scalar,
        conv_grad_w_scalar, relu_fwd_scalar, relu_bwd_scalar,
        tanh_fwd_scalar,   tanh_bwd_scalar,  axpy_scalar,
        sign_scale_scalar, sum_abs_diff_scalar, sum_sq_diff_scalar,
        adam_step_scalar,
    };
    return k;
}

}  // namespace chunksr::kern
