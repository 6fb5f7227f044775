// AVX2 kernel variants. Same pinned arithmetic as the scalar reference:
// f64 accumulators in identical order, so outputs are bit-identical. Tails
// either run the scalar code or are zero-padded, which leaves f64
// accumulators unchanged exactly.

#include "chunksr/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace chunksr::kern {
namespace {

inline void cvt8(const float* p, __m256d& lo, __m256d& hi) {
    const __m256 v = _mm256_loadu_ps(p);
    lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
    hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
}

void conv_fwd_avx2(const float* inpad, int c_in, int hp, int wp,
                   const float* w, const float* bias, int c_out, int k,
                   float* out) {
    const int ho = hp - k + 1;
    const int wo = wp - k + 1;
    const int wo8 = wo & ~7;
    for (int co = 0; co < c_out; ++co) {
        const double b = bias ? static_cast<double>(bias[co]) : 0.0;
        const float* wbase = w + static_cast<size_t>(co) * c_in * k * k;
        float* outp = out + static_cast<size_t>(co) * ho * wo;
        for (int y = 0; y < ho; ++y) {
            int x = 0;
            for (; x < wo8; x += 8) {
                __m256d acc_lo = _mm256_set1_pd(b);
                __m256d acc_hi = _mm256_set1_pd(b);
                const float* wk = wbase;
                for (int ci = 0; ci < c_in; ++ci) {
                    const float* ip =
                        inpad + (static_cast<size_t>(ci) * hp + y) * wp + x;
                    for (int ky = 0; ky < k; ++ky) {
                        const float* row = ip + static_cast<size_t>(ky) * wp;
                        for (int kx = 0; kx < k; ++kx) {
                            const __m256d wv = _mm256_set1_pd(
                                static_cast<double>(wk[ky * k + kx]));
                            __m256d lo, hi;
                            cvt8(row + kx, lo, hi);
                            acc_lo = _mm256_fmadd_pd(wv, lo, acc_lo);
                            acc_hi = _mm256_fmadd_pd(wv, hi, acc_hi);
                        }
                    }
                    wk += k * k;
                }
                float* op = outp + static_cast<size_t>(y) * wo + x;
                _mm_storeu_ps(op, _mm256_cvtpd_ps(acc_lo));
                _mm_storeu_ps(op + 4, _mm256_cvtpd_ps(acc_hi));
            }
            for (; x < wo; ++x) {
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

void conv_grad_input_avx2(const float* gopad, int c_out, int hp, int wp,
                          const float* w, int c_in, int k, float* gin) {
    const int ho = hp - k + 1;
    const int wo = wp - k + 1;
    const int wo8 = wo & ~7;
    for (int ci = 0; ci < c_in; ++ci) {
        float* gp = gin + static_cast<size_t>(ci) * ho * wo;
        for (int y = 0; y < ho; ++y) {
            int x = 0;
            for (; x < wo8; x += 8) {
                __m256d acc_lo = _mm256_setzero_pd();
                __m256d acc_hi = _mm256_setzero_pd();
                for (int co = 0; co < c_out; ++co) {
                    const float* op =
                        gopad + (static_cast<size_t>(co) * hp + y) * wp + x;
                    const float* wk =
                        w + (static_cast<size_t>(co) * c_in + ci) * k * k;
                    for (int ky = 0; ky < k; ++ky) {
                        const float* row = op + static_cast<size_t>(ky) * wp;
                        const float* wrow = wk + (k - 1 - ky) * k;
                        for (int kx = 0; kx < k; ++kx) {
                            const __m256d wv = _mm256_set1_pd(
                                static_cast<double>(wrow[k - 1 - kx]));
                            __m256d lo, hi;
                            cvt8(row + kx, lo, hi);
                            acc_lo = _mm256_fmadd_pd(wv, lo, acc_lo);
                            acc_hi = _mm256_fmadd_pd(wv, hi, acc_hi);
                        }
                    }
                }
                float* dst = gp + static_cast<size_t>(y) * wo + x;
                _mm_storeu_ps(dst, _mm256_cvtpd_ps(acc_lo));
                _mm_storeu_ps(dst + 4, _mm256_cvtpd_ps(acc_hi));
            }
            for (; x < wo; ++x) {
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

// 4-lane f64 row dot: lane = x & 3, tails zero-padded (exact no-ops).
inline __m256d row_dot4(const float* a, const float* b, int n, __m256d acc) {
    const int n4 = n & ~3;
    int x = 0;
    for (; x < n4; x += 4) {
        const __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(a + x));
        const __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(b + x));
        acc = _mm256_fmadd_pd(va, vb, acc);
    }
    if (x < n) {
        float ta[4] = {0.0f, 0.0f, 0.0f, 0.0f};
        float tb[4] = {0.0f, 0.0f, 0.0f, 0.0f};
        for (int j = 0; x + j < n; ++j) {
            ta[j] = a[x + j];
            tb[j] = b[x + j];
        }
        const __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(ta));
        const __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(tb));
        acc = _mm256_fmadd_pd(va, vb, acc);
    }
    return acc;
}

inline double combine4(__m256d acc) {
    double lane[4];
    _mm256_storeu_pd(lane, acc);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void conv_grad_w_avx2(const float* inpad, int c_in, int hp, int wp,
                      const float* go, int c_out, int k, double* gw_acc,
                      double* gb_acc) {
    const int ho = hp - k + 1;
    const int wo = wp - k + 1;
    for (int co = 0; co < c_out; ++co) {
        const float* gplane = go + static_cast<size_t>(co) * ho * wo;
        {
            __m256d acc = _mm256_setzero_pd();
            const int wo4 = wo & ~3;
            for (int y = 0; y < ho; ++y) {
                const float* grow = gplane + static_cast<size_t>(y) * wo;
                int x = 0;
                for (; x < wo4; x += 4) {
                    acc = _mm256_add_pd(acc,
                                        _mm256_cvtps_pd(_mm_loadu_ps(grow + x)));
                }
                if (x < wo) {
                    float t[4] = {0.0f, 0.0f, 0.0f, 0.0f};
                    for (int j = 0; x + j < wo; ++j) t[j] = grow[x + j];
                    acc = _mm256_add_pd(acc, _mm256_cvtps_pd(_mm_loadu_ps(t)));
                }
            }
            gb_acc[co] += combine4(acc);
        }
        for (int ci = 0; ci < c_in; ++ci) {
            const float* iplane = inpad + static_cast<size_t>(ci) * hp * wp;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    __m256d acc = _mm256_setzero_pd();
                    for (int y = 0; y < ho; ++y) {
                        const float* grow = gplane + static_cast<size_t>(y) * wo;
                        const float* irow =
                            iplane + (static_cast<size_t>(y) + ky) * wp + kx;
                        acc = row_dot4(grow, irow, wo, acc);
                    }
                    gw_acc[((static_cast<size_t>(co) * c_in + ci) * k + ky) * k +
                           kx] += combine4(acc);
                }
            }
        }
    }
}

void relu_fwd_avx2(const float* x, float* y, size_t n) {
    const size_t n8 = n & ~size_t(7);
    const __m256 zero = _mm256_setzero_ps();
    size_t i = 0;
    for (; i < n8; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_avx2(const float* x, const float* g, float* gx, size_t n) {
    const size_t n8 = n & ~size_t(7);
    const __m256 zero = _mm256_setzero_ps();
    size_t i = 0;
    for (; i < n8; i += 8) {
        const __m256 mask =
            _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
        _mm256_storeu_ps(gx + i, _mm256_and_ps(mask, _mm256_loadu_ps(g + i)));
    }
    for (; i < n; ++i) gx[i] = x[i] > 0.0f ? g[i] : 0.0f;
}

// std::tanh stays scalar on both paths so results do not depend on the
// selected variant.
void tanh_fwd_avx2(const float* x, float* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh_bwd_avx2(const float* y, const float* g, float* gx, size_t n) {
    const size_t n8 = n & ~size_t(7);
    const __m256 one = _mm256_set1_ps(1.0f);
    size_t i = 0;
    for (; i < n8; i += 8) {
        const __m256 yv = _mm256_loadu_ps(y + i);
        const __m256 t = _mm256_mul_ps(yv, yv);
        const __m256 u = _mm256_sub_ps(one, t);
        _mm256_storeu_ps(gx + i, _mm256_mul_ps(_mm256_loadu_ps(g + i), u));
    }
    for (; i < n; ++i) {
        const float t = y[i] * y[i];
        const float u = 1.0f - t;
        gx[i] = g[i] * u;
    }
}

void axpy_avx2(float* y, const float* x, float a, size_t n) {
    const size_t n8 = n & ~size_t(7);
    const __m256 av = _mm256_set1_ps(a);
    size_t i = 0;
    for (; i < n8; i += 8) {
        const __m256 t = _mm256_mul_ps(av, _mm256_loadu_ps(x + i));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), t));
    }
    for (; i < n; ++i) {
        const float t = a * x[i];
        y[i] = y[i] + t;
    }
}

void sign_scale_avx2(const float* a, const float* b, float s, float* out,
                     size_t n) {
    const size_t n8 = n & ~size_t(7);
    const __m256 sv = _mm256_set1_ps(s);
    const __m256 nv = _mm256_set1_ps(-s);
    size_t i = 0;
    for (; i < n8; i += 8) {
        const __m256 av = _mm256_loadu_ps(a + i);
        const __m256 bv = _mm256_loadu_ps(b + i);
        const __m256 pos =
            _mm256_and_ps(_mm256_cmp_ps(av, bv, _CMP_GT_OQ), sv);
        const __m256 neg =
            _mm256_and_ps(_mm256_cmp_ps(av, bv, _CMP_LT_OQ), nv);
        _mm256_storeu_ps(out + i, _mm256_or_ps(pos, neg));
    }
    for (; i < n; ++i) {
        out[i] = a[i] > b[i] ? s : (a[i] < b[i] ? -s : 0.0f);
    }
}

double sum_abs_diff_avx2(const float* a, const float* b, size_t n) {
    const size_t n4 = n & ~size_t(3);
    const __m256d signmask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i < n4; i += 4) {
        const __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
        const __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
        const __m256d d = _mm256_sub_pd(va, vb);
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(signmask, d));
    }
    double lane[4];
    _mm256_storeu_pd(lane, acc);
    for (; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        lane[i & 3] += std::abs(d);
    }
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double sum_sq_diff_avx2(const float* a, const float* b, size_t n) {
    const size_t n4 = n & ~size_t(3);
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i < n4; i += 4) {
        const __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
        const __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
        const __m256d d = _mm256_sub_pd(va, vb);
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double lane[4];
    _mm256_storeu_pd(lane, acc);
    for (; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        lane[i & 3] = std::fma(d, d, lane[i & 3]);
    }
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void adam_step_avx2(float* p, float* m, float* v, const float* g, size_t n,
                    double lr, double b1, double b2, double eps, double bc1,
                    double bc2) {
    const double one_m_b1 = 1.0 - b1;
    const double one_m_b2 = 1.0 - b2;
    const size_t n4 = n & ~size_t(3);
    const __m256d b1v = _mm256_set1_pd(b1);
    const __m256d b2v = _mm256_set1_pd(b2);
    const __m256d omb1 = _mm256_set1_pd(one_m_b1);
    const __m256d omb2 = _mm256_set1_pd(one_m_b2);
    const __m256d bc1v = _mm256_set1_pd(bc1);
    const __m256d bc2v = _mm256_set1_pd(bc2);
    const __m256d epsv = _mm256_set1_pd(eps);
    const __m256d lrv = _mm256_set1_pd(lr);
    size_t i = 0;
    for (; i < n4; i += 4) {
        const __m256d gi = _mm256_cvtps_pd(_mm_loadu_ps(g + i));
        const __m256d mi = _mm256_cvtps_pd(_mm_loadu_ps(m + i));
        const __m256d vi = _mm256_cvtps_pd(_mm_loadu_ps(v + i));
        const __m256d pi = _mm256_cvtps_pd(_mm_loadu_ps(p + i));
        const __m256d t1 = _mm256_mul_pd(b1v, mi);
        const __m256d t2 = _mm256_mul_pd(omb1, gi);
        const __m256d m1 = _mm256_add_pd(t1, t2);
        const __m256d gg = _mm256_mul_pd(gi, gi);
        const __m256d t3 = _mm256_mul_pd(b2v, vi);
        const __m256d t4 = _mm256_mul_pd(omb2, gg);
        const __m256d v1 = _mm256_add_pd(t3, t4);
        const __m256d mh = _mm256_div_pd(m1, bc1v);
        const __m256d vh = _mm256_div_pd(v1, bc2v);
        const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(vh), epsv);
        const __m256d num = _mm256_mul_pd(lrv, mh);
        const __m256d upd = _mm256_div_pd(num, den);
        _mm_storeu_ps(p + i, _mm256_cvtpd_ps(_mm256_sub_pd(pi, upd)));
        _mm_storeu_ps(m + i, _mm256_cvtpd_ps(m1));
        _mm_storeu_ps(v + i, _mm256_cvtpd_ps(v1));
    }
    for (; i < n; ++i) {
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

const Kernels& avx2_kernels() {
    static const Kernels k = {
        "avx2",           conv_fwd_avx2,  conv_grad_input_avx2,
        conv_grad_w_avx2, relu_fwd_avx2,  relu_bwd_avx2,
        tanh_fwd_avx2,    tanh_bwd_avx2,  axpy_avx2,
        sign_scale_avx2,  sum_abs_diff_avx2, sum_sq_diff_avx2,
        adam_step_avx2,
    };
    return k;
}

bool avx2_compiled() { return true; }

}  // namespace chunksr::kern

#else

namespace chunksr::kern {

const Kernels& avx2_kernels() { return scalar_kernels(); }
bool avx2_compiled() { return false; }

}  // namespace chunksr::kern

#endif
