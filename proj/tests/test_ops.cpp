// Tensor-op tests. Expected values come from independent f64 oracles kept in
// this file: a nested-loop convolution, direct bicubic kernel sums, a
// hand-rolled Adam trace and plain scalar-loop reductions. Gradient checks
// run central finite differences over the oracle forward.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "chunksr/ops.hpp"
#include "chunksr/rng.hpp"
#include "chunksr/tensor.hpp"
#include "doctest.h"

using namespace chunksr;
using ops::Act;

namespace {

bool close(double a, double b, double rtol, double atol = 1e-9) {
    return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

Tensor random_tensor(int n, int c, int h, int w, Rng& rng, float lo = -1.0f,
                     float hi = 1.0f) {
    Tensor t(n, c, h, w);
    for (auto& x : t.data) x = rng.uniform(lo, hi);
    return t;
}

// ---------------------------------------------------------------------------
// oracle: direct f64 convolution, loop order deliberately different from the
// implementation (kernel window outermost)
// ---------------------------------------------------------------------------
std::vector<double> oracle_conv(const std::vector<double>& in, int n, int c_in,
                                int h, int w, const std::vector<double>& wt,
                                int c_out, int k,
                                const std::vector<double>& bias, int pad) {
    const int ho = h + 2 * pad - k + 1;
    const int wo = w + 2 * pad - k + 1;
    std::vector<double> out(static_cast<size_t>(n) * c_out * ho * wo, 0.0);
    for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
            for (int ni = 0; ni < n; ++ni) {
                for (int co = 0; co < c_out; ++co) {
                    for (int ci = 0; ci < c_in; ++ci) {
                        const double wv =
                            wt[((static_cast<size_t>(co) * c_in + ci) * k + ky) *
                                   k +
                               kx];
                        for (int y = 0; y < ho; ++y) {
                            const int sy = y + ky - pad;
                            if (sy < 0 || sy >= h) continue;
                            for (int x = 0; x < wo; ++x) {
                                const int sx = x + kx - pad;
                                if (sx < 0 || sx >= w) continue;
                                out[((static_cast<size_t>(ni) * c_out + co) * ho +
                                     y) *
                                        wo +
                                    x] +=
                                    wv * in[((static_cast<size_t>(ni) * c_in +
                                              ci) *
                                                 h +
                                             sy) *
                                                w +
                                            sx];
                            }
                        }
                    }
                }
            }
        }
    }
    for (int ni = 0; ni < n; ++ni) {
        for (int co = 0; co < c_out; ++co) {
            for (int i = 0; i < ho * wo; ++i) {
                out[(static_cast<size_t>(ni) * c_out + co) * ho * wo + i] +=
                    bias[co];
            }
        }
    }
    return out;
}

std::vector<double> to_f64(const std::vector<float>& v) {
    return std::vector<double>(v.begin(), v.end());
}

// scalar functional <conv(in, w, b), G> evaluated with the oracle
double conv_functional(const std::vector<double>& in, int n, int c_in, int h,
                       int w, const std::vector<double>& wt, int c_out, int k,
                       const std::vector<double>& bias, int pad,
                       const std::vector<double>& g) {
    const auto out = oracle_conv(in, n, c_in, h, w, wt, c_out, k, bias, pad);
    double s = 0.0;
    for (size_t i = 0; i < out.size(); ++i) s += out[i] * g[i];
    return s;
}

}  // namespace

TEST_CASE("conv2d_forward: 1x1 identity kernel") {
    Rng rng(1);
    const Tensor in = random_tensor(2, 3, 4, 5, rng);
    Tensor w(3, 3, 1, 1);
    for (int co = 0; co < 3; ++co) w.at(co, co, 0, 0) = 1.0f;
    const Tensor out = ops::conv2d_forward(in, w, {0.0f, 0.0f, 0.0f}, 0);
    CHECK(out.same_shape(in));
    CHECK(std::memcmp(out.data.data(), in.data.data(),
                      in.numel() * sizeof(float)) == 0);
}

TEST_CASE("conv2d_forward: all-ones 3x3 on constant image") {
    const float c = 0.7f;
    Tensor in(1, 1, 6, 6);
    std::fill(in.data.begin(), in.data.end(), c);
    Tensor w(1, 1, 3, 3);
    std::fill(w.data.begin(), w.data.end(), 1.0f);
    const Tensor out = ops::conv2d_forward(in, w, {0.0f}, 1);
    CHECK(out.same_shape(in));
    for (int y = 1; y < 5; ++y) {
        for (int x = 1; x < 5; ++x) {
            CHECK(out.at(0, 0, y, x) == doctest::Approx(9.0 * c).epsilon(1e-6));
        }
    }
    // corner touches only 4 source pixels
    CHECK(out.at(0, 0, 0, 0) == doctest::Approx(4.0 * c).epsilon(1e-6));
}

TEST_CASE("conv2d_forward matches nested-loop oracle") {
    Rng rng(42);
    const Tensor in = random_tensor(2, 3, 5, 5, rng);
    const Tensor w = random_tensor(4, 3, 3, 3, rng);
    std::vector<float> bias(4);
    for (auto& b : bias) b = rng.uniform(-0.5f, 0.5f);
    for (int pad : {0, 1}) {
        const Tensor out = ops::conv2d_forward(in, w, bias, pad);
        const auto ref = oracle_conv(to_f64(in.data), 2, 3, 5, 5,
                                     to_f64(w.data), 4, 3, to_f64(bias), pad);
        REQUIRE(out.numel() == ref.size());
        for (size_t i = 0; i < ref.size(); ++i) {
            CHECK(close(out.data[i], ref[i], 1e-5, 1e-6));
        }
    }
}

TEST_CASE("conv2d_forward is linear in its input (zero bias)") {
    Rng rng(5);
    const Tensor x = random_tensor(1, 2, 7, 6, rng);
    const Tensor y = random_tensor(1, 2, 7, 6, rng);
    const Tensor w = random_tensor(3, 2, 3, 3, rng);
    const std::vector<float> bias(3, 0.0f);
    const float a = 0.6f, b = -1.3f;
    Tensor mix(1, 2, 7, 6);
    for (size_t i = 0; i < mix.numel(); ++i) {
        mix.data[i] = a * x.data[i] + b * y.data[i];
    }
    const Tensor fx = ops::conv2d_forward(x, w, bias, 1);
    const Tensor fy = ops::conv2d_forward(y, w, bias, 1);
    const Tensor fmix = ops::conv2d_forward(mix, w, bias, 1);
    for (size_t i = 0; i < fmix.numel(); ++i) {
        CHECK(close(fmix.data[i], a * fx.data[i] + b * fy.data[i], 1e-5, 1e-5));
    }
}

TEST_CASE("conv2d errors name the offending dimensions") {
    Rng rng(2);
    const Tensor in = random_tensor(1, 3, 4, 4, rng);
    const Tensor w = random_tensor(2, 4, 3, 3, rng);
    CHECK_THROWS_WITH_AS(ops::conv2d_forward(in, w, {0.f, 0.f}, 1),
                         doctest::Contains("channels"), std::invalid_argument);
    const Tensor w2 = random_tensor(2, 3, 3, 3, rng);
    Tensor bad_go(1, 2, 9, 9);
    CHECK_THROWS_AS(ops::conv2d_backward(in, w2, 1, bad_go),
                    std::invalid_argument);
}

TEST_CASE("conv2d_backward: zero grad_output gives zero gradients") {
    Rng rng(3);
    const Tensor in = random_tensor(2, 2, 5, 5, rng);
    const Tensor w = random_tensor(3, 2, 3, 3, rng);
    const Tensor go(2, 3, 5, 5);
    const auto grads = ops::conv2d_backward(in, w, 1, go);
    for (float v : grads.grad_input.data) CHECK(v == 0.0f);
    for (float v : grads.grad_weights.data) CHECK(v == 0.0f);
    for (float v : grads.grad_bias) CHECK(v == 0.0f);
}

TEST_CASE("conv2d_backward: grad_bias equals per-channel sum of grad_output") {
    Rng rng(4);
    const Tensor in = random_tensor(2, 2, 6, 5, rng);
    const Tensor w = random_tensor(3, 2, 3, 3, rng);
    const Tensor go = random_tensor(2, 3, 6, 5, rng);
    const auto grads = ops::conv2d_backward(in, w, 1, go);
    for (int co = 0; co < 3; ++co) {
        double s = 0.0;
        for (int ni = 0; ni < 2; ++ni) {
            const float* p = go.plane(ni, co);
            for (int i = 0; i < 6 * 5; ++i) s += p[i];
        }
        CHECK(close(grads.grad_bias[co], s, 1e-6, 1e-6));
    }
}

TEST_CASE("conv2d_backward matches finite differences on 1x2x6x6") {
    Rng rng(6);
    const int n = 1, c_in = 2, h = 6, w = 6, c_out = 3, k = 3, pad = 1;
    const Tensor in = random_tensor(n, c_in, h, w, rng);
    const Tensor wt = random_tensor(c_out, c_in, k, k, rng);
    std::vector<float> bias(c_out);
    for (auto& b : bias) b = rng.uniform(-0.5f, 0.5f);
    const Tensor go = random_tensor(n, c_out, h, w, rng);

    const auto grads = ops::conv2d_backward(in, wt, pad, go);

    const auto in_d = to_f64(in.data);
    const auto wt_d = to_f64(wt.data);
    const auto bias_d = to_f64(bias);
    const auto g_d = to_f64(go.data);
    const double hstep = 1e-3;

    auto fd = [&](std::vector<double> v, size_t idx,
                  auto&& eval) {  // central difference over the oracle
        v[idx] += hstep;
        const double sp = eval(v);
        v[idx] -= 2 * hstep;
        const double sm = eval(v);
        return (sp - sm) / (2 * hstep);
    };

    auto eval_in = [&](const std::vector<double>& v) {
        return conv_functional(v, n, c_in, h, w, wt_d, c_out, k, bias_d, pad,
                               g_d);
    };
    auto eval_w = [&](const std::vector<double>& v) {
        return conv_functional(in_d, n, c_in, h, w, v, c_out, k, bias_d, pad,
                               g_d);
    };
    auto eval_b = [&](const std::vector<double>& v) {
        return conv_functional(in_d, n, c_in, h, w, wt_d, c_out, k, v, pad,
                               g_d);
    };

    for (size_t i = 0; i < in.numel(); ++i) {
        CHECK(close(grads.grad_input.data[i], fd(in_d, i, eval_in), 1e-4, 1e-6));
    }
    for (size_t i = 0; i < wt.numel(); ++i) {
        CHECK(close(grads.grad_weights.data[i], fd(wt_d, i, eval_w), 1e-4,
                    1e-6));
    }
    for (size_t i = 0; i < bias.size(); ++i) {
        CHECK(close(grads.grad_bias[i], fd(bias_d, i, eval_b), 1e-4, 1e-6));
    }
}

TEST_CASE("conv2d_backward matches finite differences on randomized instances") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed * 131 + 17);
        const int n = 1 + rng.uniform_int(2);
        const int c_in = 1 + rng.uniform_int(3);
        const int c_out = 1 + rng.uniform_int(3);
        const int k = 1 + 2 * rng.uniform_int(2);  // 1 or 3
        const int h = k + 2 + rng.uniform_int(3);
        const int w = k + 2 + rng.uniform_int(3);
        // includes padding beyond k-1 (grad_input crops instead of padding)
        const int pad = rng.uniform_int(static_cast<uint32_t>(k) + 2);
        const Tensor in = random_tensor(n, c_in, h, w, rng);
        const Tensor wt = random_tensor(c_out, c_in, k, k, rng);
        std::vector<float> bias(c_out);
        for (auto& b : bias) b = rng.uniform(-0.5f, 0.5f);
        const Tensor go = random_tensor(n, c_out, h, w, rng);
        const auto grads = ops::conv2d_backward(in, wt, pad, go);

        const auto in_d = to_f64(in.data);
        const auto wt_d = to_f64(wt.data);
        const auto bias_d = to_f64(bias);
        const auto g_d = to_f64(go.data);
        const double hstep = 1e-3;
        // probe a handful of weight and input coordinates per seed
        for (int probe = 0; probe < 8; ++probe) {
            const size_t idx = rng.uniform_int(static_cast<uint32_t>(wt.numel()));
            auto v = wt_d;
            v[idx] += hstep;
            const double sp = conv_functional(in_d, n, c_in, h, w, v, c_out, k,
                                              bias_d, pad, g_d);
            v[idx] -= 2 * hstep;
            const double sm = conv_functional(in_d, n, c_in, h, w, v, c_out, k,
                                              bias_d, pad, g_d);
            const double fd = (sp - sm) / (2 * hstep);
            CHECK(close(grads.grad_weights.data[idx], fd, 1e-4, 1e-6));
        }
        for (int probe = 0; probe < 8; ++probe) {
            const size_t idx = rng.uniform_int(static_cast<uint32_t>(in.numel()));
            auto v = in_d;
            v[idx] += hstep;
            const double sp = conv_functional(v, n, c_in, h, w, wt_d, c_out, k,
                                              bias_d, pad, g_d);
            v[idx] -= 2 * hstep;
            const double sm = conv_functional(v, n, c_in, h, w, wt_d, c_out, k,
                                              bias_d, pad, g_d);
            const double fd = (sp - sm) / (2 * hstep);
            CHECK(close(grads.grad_input.data[idx], fd, 1e-4, 1e-6));
        }
    }
}

TEST_CASE("activations: pinned values and derivatives") {
    Tensor x(1, 1, 1, 3);
    x.data = {-1.0f, 0.0f, 2.0f};
    const Tensor r = ops::activation_forward(Act::relu, x);
    CHECK(r.data[0] == 0.0f);
    CHECK(r.data[1] == 0.0f);
    CHECK(r.data[2] == 2.0f);

    Tensor z(1, 1, 1, 1);
    z.data = {0.0f};
    const Tensor t = ops::activation_forward(Act::tanh, z);
    CHECK(t.data[0] == 0.0f);
    Tensor g1(1, 1, 1, 1);
    g1.data = {1.0f};
    const Tensor dt = ops::activation_backward(Act::tanh, z, g1);
    CHECK(dt.data[0] == 1.0f);
}

TEST_CASE("activation backward matches finite differences") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(900 + seed);
        Tensor x = random_tensor(1, 2, 4, 4, rng, -2.0f, 2.0f);
        // keep relu inputs away from the kink
        for (auto& v : x.data) {
            if (std::abs(v) < 0.01f) v = v < 0 ? v - 0.02f : v + 0.02f;
        }
        const Tensor g = random_tensor(1, 2, 4, 4, rng);
        for (Act kind : {Act::relu, Act::tanh}) {
            const Tensor gx = ops::activation_backward(kind, x, g);
            const double hstep = 1e-3;
            for (size_t i = 0; i < x.numel(); ++i) {
                auto f = [&](double xi) {
                    const double y =
                        kind == Act::relu ? (xi > 0 ? xi : 0.0) : std::tanh(xi);
                    return y * static_cast<double>(g.data[i]);
                };
                const double fd = (f(x.data[i] + hstep) - f(x.data[i] - hstep)) /
                                  (2 * hstep);
                CHECK(close(gx.data[i], fd, 1e-4, 1e-6));
            }
        }
    }
}

TEST_CASE("pixel_shuffle: layout rule on 1x4x1x1") {
    Tensor in(1, 4, 1, 1);
    in.data = {1.0f, 2.0f, 3.0f, 4.0f};
    const Tensor out = ops::pixel_shuffle(in, 2);
    CHECK(out.c == 1);
    CHECK(out.h == 2);
    CHECK(out.w == 2);
    CHECK(out.at(0, 0, 0, 0) == 1.0f);
    CHECK(out.at(0, 0, 0, 1) == 2.0f);
    CHECK(out.at(0, 0, 1, 0) == 3.0f);
    CHECK(out.at(0, 0, 1, 1) == 4.0f);
}

TEST_CASE("pixel_shuffle: r=1 identity, permutation props, errors") {
    Rng rng(8);
    const Tensor in = random_tensor(2, 8, 3, 5, rng);
    const Tensor id = ops::pixel_shuffle(in, 1);
    CHECK(std::memcmp(id.data.data(), in.data.data(),
                      in.numel() * sizeof(float)) == 0);

    const Tensor out = ops::pixel_shuffle(in, 2);
    CHECK(out.c == 2);
    CHECK(out.h == 6);
    CHECK(out.w == 10);
    // permutation: multiset of values preserved exactly
    auto a = in.data, b = out.data;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    // backward is the inverse index permutation
    const Tensor back = ops::pixel_shuffle_backward(out, 2);
    CHECK(std::memcmp(back.data.data(), in.data.data(),
                      in.numel() * sizeof(float)) == 0);
    const Tensor fwd_again = ops::pixel_shuffle(back, 2);
    CHECK(std::memcmp(fwd_again.data.data(), out.data.data(),
                      out.numel() * sizeof(float)) == 0);

    Tensor bad(1, 3, 2, 2);
    CHECK_THROWS_AS(ops::pixel_shuffle(bad, 2), std::invalid_argument);
}

namespace {

// independent bicubic oracle: general a-form kernel, direct 16-tap sum
double oracle_cubic(double t, double a) {
    t = std::abs(t);
    if (t <= 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
    if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
    return 0.0;
}

double oracle_bicubic_at(const Tensor& img, int ni, int ci, double sy,
                         double sx) {
    const int by = static_cast<int>(std::floor(sy)) - 1;
    const int bx = static_cast<int>(std::floor(sx)) - 1;
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
        for (int i = 0; i < 4; ++i) {
            const int py = std::clamp(by + j, 0, img.h - 1);
            const int px = std::clamp(bx + i, 0, img.w - 1);
            acc += oracle_cubic(sy - (by + j), -0.5) *
                   oracle_cubic(sx - (bx + i), -0.5) * img.at(ni, ci, py, px);
        }
    }
    return acc;
}

}  // namespace

TEST_CASE("bicubic_resize: constant preservation and scale-1 identity") {
    Tensor in(1, 2, 9, 7);
    std::fill(in.data.begin(), in.data.end(), 0.4375f);
    const Tensor down = ops::bicubic_resize(in, 1.0 / 3.0);
    CHECK(down.h == 3);
    CHECK(down.w == 2);
    for (float v : down.data) CHECK(std::abs(v - 0.4375f) <= 1e-6f);

    Rng rng(9);
    const Tensor r = random_tensor(1, 3, 6, 6, rng);
    const Tensor same = ops::bicubic_resize(r, 1.0);
    REQUIRE(same.same_shape(r));
    for (size_t i = 0; i < r.numel(); ++i) {
        CHECK(std::abs(same.data[i] - r.data[i]) <= 1e-6f);
    }
}

TEST_CASE("bicubic_resize: 8x8 ramp halved matches direct oracle") {
    Tensor in(1, 1, 8, 8);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            in.at(0, 0, y, x) = 0.1f * y + 0.07f * x;
        }
    }
    const Tensor out = ops::bicubic_resize(in, 0.5);
    REQUIRE(out.h == 4);
    REQUIRE(out.w == 4);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            const double sy = (y + 0.5) * 2.0 - 0.5;
            const double sx = (x + 0.5) * 2.0 - 0.5;
            CHECK(close(out.at(0, 0, y, x), oracle_bicubic_at(in, 0, 0, sy, sx),
                        1e-5, 1e-6));
        }
    }
}

TEST_CASE("bicubic_resize: translation equivariance on periodic interior") {
    const int h = 24, w = 24, shift = 2;  // one LR pixel at scale 1/2
    auto value = [&](int y, int x) {
        return 0.5f + 0.3f * std::sin(2.0f * 3.14159265f * x / 8.0f) *
                          std::cos(2.0f * 3.14159265f * y / 6.0f);
    };
    Tensor a(1, 1, h, w), b(1, 1, h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            a.at(0, 0, y, x) = value(y, x);
            b.at(0, 0, y, x) = value(y, x + shift);
        }
    }
    const Tensor da = ops::bicubic_resize(a, 0.5);
    const Tensor db = ops::bicubic_resize(b, 0.5);
    for (int y = 2; y < da.h - 2; ++y) {
        for (int x = 2; x < da.w - 2; ++x) {
            CHECK(close(db.at(0, 0, y, x), da.at(0, 0, y, x + shift / 2), 1e-5,
                        1e-5));
        }
    }
    CHECK_THROWS_AS(ops::bicubic_resize(a, 0.01), std::invalid_argument);
}

TEST_CASE("l1_loss: pinned values and gradient") {
    Tensor p(1, 1, 1, 1), t(1, 1, 1, 1);
    p.data = {0.5f};
    t.data = {0.25f};
    const auto r = ops::l1_loss(p, t);
    CHECK(r.loss == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(r.grad_pred.data[0] == 1.0f);

    const auto zero = ops::l1_loss(t, t);
    CHECK(zero.loss == 0.0);
    CHECK(zero.grad_pred.data[0] == 0.0f);

    Tensor wrong(1, 1, 1, 2);
    CHECK_THROWS_AS(ops::l1_loss(p, wrong), std::invalid_argument);
}

TEST_CASE("l1_loss gradient matches finite differences away from ties") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(40 + seed);
        Tensor pred = random_tensor(1, 2, 3, 4, rng);
        Tensor target = pred;
        for (auto& v : target.data) {
            const float off = rng.uniform(0.05f, 0.4f);
            v += (rng.uniform() < 0.5f ? off : -off);
        }
        const auto res = ops::l1_loss(pred, target);
        const double hstep = 1e-3;
        const double n = static_cast<double>(pred.numel());
        for (size_t i = 0; i < pred.numel(); ++i) {
            auto f = [&](double x) {
                double s = 0.0;
                for (size_t j = 0; j < pred.numel(); ++j) {
                    const double pj = j == i ? x : pred.data[j];
                    s += std::abs(pj - static_cast<double>(target.data[j]));
                }
                return s / n;
            };
            const double fd =
                (f(pred.data[i] + hstep) - f(pred.data[i] - hstep)) / (2 * hstep);
            CHECK(close(res.grad_pred.data[i], fd, 1e-4, 1e-7));
        }
    }
}

namespace {

// independent Adam trace: f64 math, f32 storage
struct AdamOracle {
    std::vector<float> m, v;
    double b1t = 1.0, b2t = 1.0;
    explicit AdamOracle(size_t n) : m(n, 0.0f), v(n, 0.0f) {}
    void step(std::vector<float>& p, const std::vector<float>& g, double lr) {
        b1t *= 0.9;
        b2t *= 0.999;
        for (size_t i = 0; i < p.size(); ++i) {
            const double m1 = 0.9 * m[i] + 0.1 * g[i];
            const double v1 =
                0.999 * v[i] + 0.001 * static_cast<double>(g[i]) * g[i];
            const double mh = m1 / (1.0 - b1t);
            const double vh = v1 / (1.0 - b2t);
            p[i] = static_cast<float>(p[i] - lr * mh / (std::sqrt(vh) + 1e-8));
            m[i] = static_cast<float>(m1);
            v[i] = static_cast<float>(v1);
        }
    }
};

}  // namespace

TEST_CASE("adam_step: zero grads leave params unchanged") {
    std::vector<float> p = {0.3f, -0.8f, 1.5f};
    const std::vector<float> g(3, 0.0f);
    ops::AdamState st(3, 1e-2);
    const auto before = p;
    ops::adam_step(p, g, st);
    CHECK(p == before);
    CHECK(st.t == 1);
}

TEST_CASE("adam_step: first step is approximately -lr*sign(g)") {
    std::vector<float> p = {1.0f, 1.0f};
    const std::vector<float> g = {0.02f, -0.7f};
    ops::AdamState st(2, 1e-2);
    ops::adam_step(p, g, st);
    CHECK(close(p[0], 1.0 - 1e-2, 1e-4));
    CHECK(close(p[1], 1.0 + 1e-2, 1e-4));
}

TEST_CASE("adam_step: length mismatch errors") {
    std::vector<float> p = {1.0f, 2.0f};
    std::vector<float> g = {1.0f};
    ops::AdamState st(2, 1e-2);
    CHECK_THROWS_AS(ops::adam_step(p, g, st), std::invalid_argument);
}

TEST_CASE("adam: 100 steps on a 2-param quadratic match the oracle trace") {
    // f(x) = (x0 - 0.7)^2 + 2 (x1 + 0.4)^2
    auto grad = [](const std::vector<float>& x) {
        return std::vector<float>{2.0f * (x[0] - 0.7f),
                                  4.0f * (x[1] + 0.4f)};
    };
    std::vector<float> p = {0.62f, -0.33f};
    std::vector<float> q = p;
    ops::AdamState st(2, 5e-3);
    AdamOracle oracle(2);
    for (int step = 0; step < 100; ++step) {
        const auto gp = grad(p);
        const auto gq = grad(q);
        ops::adam_step(p, gp, st);
        oracle.step(q, gq, 5e-3);
        CHECK(close(p[0], q[0], 1e-7, 1e-9));
        CHECK(close(p[1], q[1], 1e-7, 1e-9));
    }
    CHECK(std::abs(p[0] - 0.7f) < 1e-3f);
    CHECK(std::abs(p[1] + 0.4f) < 1e-3f);
}

TEST_CASE("psnr: cap, arithmetic and scalar-loop oracle") {
    Rng rng(10);
    const Tensor a = random_tensor(1, 3, 8, 8, rng, 0.0f, 1.0f);
    CHECK(ops::psnr(a, a, 1.0) == 100.0);

    // MSE exactly 0.01
    Tensor b = a;
    for (auto& v : b.data) v += 0.1f;
    const double p = ops::psnr(a, b, 1.0);
    CHECK(close(p, 20.0, 1e-5));

    const Tensor c = random_tensor(1, 3, 8, 8, rng, 0.0f, 1.0f);
    double mse = 0.0;
    for (size_t i = 0; i < a.numel(); ++i) {
        const double d = static_cast<double>(a.data[i]) - c.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.numel());
    const double want = 10.0 * std::log10(1.0 / mse);
    CHECK(std::abs(ops::psnr(a, c, 1.0) - want) <= 1e-6);

    Tensor wrong(1, 3, 8, 7);
    CHECK_THROWS_AS(ops::psnr(a, wrong, 1.0), std::invalid_argument);
}

TEST_CASE("operations are deterministic and produce finite values") {
    Rng rng(12);
    const Tensor in = random_tensor(2, 3, 9, 9, rng);
    const Tensor w = random_tensor(4, 3, 3, 3, rng);
    std::vector<float> bias(4, 0.1f);
    const Tensor o1 = ops::conv2d_forward(in, w, bias, 1);
    const Tensor o2 = ops::conv2d_forward(in, w, bias, 1);
    CHECK(std::memcmp(o1.data.data(), o2.data.data(),
                      o1.numel() * sizeof(float)) == 0);
    CHECK(all_finite(o1));

    const Tensor go = random_tensor(2, 4, 9, 9, rng);
    const auto g1 = ops::conv2d_backward(in, w, 1, go);
    const auto g2 = ops::conv2d_backward(in, w, 1, go);
    CHECK(std::memcmp(g1.grad_weights.data.data(), g2.grad_weights.data.data(),
                      g1.grad_weights.numel() * sizeof(float)) == 0);
    CHECK(all_finite(g1.grad_input));
    CHECK(all_finite(g1.grad_weights));

    const Tensor rs1 = ops::bicubic_resize(in, 2.0);
    const Tensor rs2 = ops::bicubic_resize(in, 2.0);
    CHECK(std::memcmp(rs1.data.data(), rs2.data.data(),
                      rs1.numel() * sizeof(float)) == 0);
    CHECK(all_finite(rs1));
}
