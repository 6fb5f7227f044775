#include "chunksr/model.hpp"
#include "chunksr/kernels.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "chunksr/rng.hpp"
#include "chunksr/threadpool.hpp"

namespace chunksr {
namespace {

constexpr int kImgChannels = 3;

void check_scale(int scale) {
    if (scale < 2 || scale > 4) {
        throw std::invalid_argument("unsupported scale " +
                                    std::to_string(scale) +
                                    " (supported: 2, 3, 4)");
    }
}

struct Trace {
    // per-layer cached tensor: conv input, relu input, tanh output
    std::vector<Tensor> cache;
    std::vector<Tensor> skip;  // residual stack
    Tensor out;
};

Tensor run_forward(const ModelParams& model, const Tensor& lr, Trace* trace) {
    const auto& arch = model.arch;
    if (lr.c != kImgChannels) {
        throw std::invalid_argument("forward: expected " +
                                    std::to_string(kImgChannels) +
                                    " input channels, got " +
                                    std::to_string(lr.c));
    }
    const auto layout = arch.param_layout();
    if (trace) trace->cache.resize(arch.layers.size());
    Tensor x = lr;
    size_t conv_idx = 0;
    std::vector<Tensor> skip;
    for (size_t li = 0; li < arch.layers.size(); ++li) {
        const LayerDesc& layer = arch.layers[li];
        switch (layer.kind) {
            case LayerDesc::conv: {
                const auto& slice = layout[conv_idx++];
                if (trace) trace->cache[li] = x;
                Tensor out;
                ops::conv2d_forward_raw(
                    x, model.theta.data() + slice.weight_offset,
                    model.theta.data() + slice.bias_offset, layer.c_out,
                    layer.k, (layer.k - 1) / 2, out);
                x = std::move(out);
                break;
            }
            case LayerDesc::act: {
                if (layer.activation == ops::Act::relu) {
                    if (trace) trace->cache[li] = x;
                    x = ops::activation_forward(ops::Act::relu, x);
                } else {
                    x = ops::activation_forward(ops::Act::tanh, x);
                    if (trace) trace->cache[li] = x;  // tanh backward uses y
                }
                break;
            }
            case LayerDesc::shuffle:
                x = ops::pixel_shuffle(x, layer.factor);
                break;
            case LayerDesc::upsample:
                x = ops::bicubic_resize_to(x, x.h * layer.factor,
                                           x.w * layer.factor);
                break;
            case LayerDesc::res_open:
                skip.push_back(x);
                break;
            case LayerDesc::res_close: {
                const Tensor& s = skip.back();
                require_same_shape(x, s, "residual add");
                for (size_t i = 0; i < x.numel(); ++i) x.data[i] += s.data[i];
                skip.pop_back();
                break;
            }
        }
    }
    if (trace) trace->out = x;
    return x;
}

// Accumulates the parameter gradient of <forward, grad_sr> into f64 buffer
// `grad_acc` (length P). Uses the cached trace from run_forward.
void run_backward(const ModelParams& model, const Trace& trace,
                  const Tensor& grad_sr, double* grad_acc) {
    const auto& arch = model.arch;
    const auto layout = arch.param_layout();
    size_t conv_total = 0;
    size_t first_conv = arch.layers.size();
    for (size_t li = 0; li < arch.layers.size(); ++li) {
        if (arch.layers[li].kind == LayerDesc::conv) {
            ++conv_total;
            if (first_conv == arch.layers.size()) first_conv = li;
        }
    }
    Tensor g = grad_sr;
    std::vector<Tensor> skip_grads;
    size_t conv_idx = conv_total;
    for (size_t li = arch.layers.size(); li-- > 0;) {
        const LayerDesc& layer = arch.layers[li];
        switch (layer.kind) {
            case LayerDesc::conv: {
                const auto& slice = layout[--conv_idx];
                const Tensor& input = trace.cache[li];
                Tensor gin;
                const bool need_gin = li > first_conv;
                ops::conv2d_backward_raw(
                    input, model.theta.data() + slice.weight_offset,
                    layer.c_out, layer.k, (layer.k - 1) / 2, g,
                    grad_acc + slice.weight_offset, grad_acc + slice.bias_offset,
                    need_gin ? &gin : nullptr);
                if (!need_gin) return;
                g = std::move(gin);
                break;
            }
            case LayerDesc::act: {
                Tensor gx(g.n, g.c, g.h, g.w);
                const auto& K = kern::active_kernels();
                if (layer.activation == ops::Act::relu) {
                    K.relu_bwd(trace.cache[li].data.data(), g.data.data(),
                               gx.data.data(), g.numel());
                } else {
                    K.tanh_bwd(trace.cache[li].data.data(), g.data.data(),
                               gx.data.data(), g.numel());
                }
                g = std::move(gx);
                break;
            }
            case LayerDesc::shuffle:
                g = ops::pixel_shuffle_backward(g, layer.factor);
                break;
            case LayerDesc::upsample:
                // non-parametric first layer; nothing below needs gradients
                return;
            case LayerDesc::res_close:
                skip_grads.push_back(g);
                break;
            case LayerDesc::res_open: {
                const Tensor& s = skip_grads.back();
                for (size_t i = 0; i < g.numel(); ++i) g.data[i] += s.data[i];
                skip_grads.pop_back();
                break;
            }
        }
    }
}

}  // namespace

const char* to_string(ArchId id) {
    switch (id) {
        case ArchId::espcn: return "espcn";
        case ArchId::srcnn: return "srcnn";
        case ArchId::edsr1: return "edsr1";
    }
    return "?";
}

ArchId arch_from_string(const std::string& s) {
    if (s == "espcn") return ArchId::espcn;
    if (s == "srcnn") return ArchId::srcnn;
    if (s == "edsr1") return ArchId::edsr1;
    throw std::invalid_argument("unknown architecture '" + s +
                                "' (expected espcn, srcnn or edsr1)");
}

ArchSpec ArchSpec::make(ArchId id, int scale) {
    check_scale(scale);
    ArchSpec spec;
    spec.id = id;
    spec.scale = scale;
    auto conv = [](int k, int ci, int co) {
        LayerDesc d;
        d.kind = LayerDesc::conv;
        d.k = k;
        d.c_in = ci;
        d.c_out = co;
        return d;
    };
    auto act = [](ops::Act a) {
        LayerDesc d;
        d.kind = LayerDesc::act;
        d.activation = a;
        return d;
    };
    auto tagged = [](LayerDesc::Kind kind, int factor = 0) {
        LayerDesc d;
        d.kind = kind;
        d.factor = factor;
        return d;
    };
    const int r2c = kImgChannels * scale * scale;
    switch (id) {
        case ArchId::espcn:
            spec.layers = {conv(5, kImgChannels, 64), act(ops::Act::tanh),
                           conv(3, 64, 32),           act(ops::Act::tanh),
                           conv(3, 32, r2c),
                           tagged(LayerDesc::shuffle, scale)};
            break;
        case ArchId::srcnn:
            spec.layers = {tagged(LayerDesc::upsample, scale),
                           conv(9, kImgChannels, 64),
                           act(ops::Act::relu),
                           conv(5, 64, 32),
                           act(ops::Act::relu),
                           conv(5, 32, kImgChannels)};
            break;
        case ArchId::edsr1:
            spec.layers = {conv(3, kImgChannels, 64),
                           tagged(LayerDesc::res_open),
                           conv(3, 64, 64),
                           act(ops::Act::relu),
                           conv(3, 64, 64),
                           tagged(LayerDesc::res_close),
                           conv(3, 64, r2c),
                           tagged(LayerDesc::shuffle, scale)};
            break;
        default:
            throw std::invalid_argument("unsupported architecture id");
    }
    return spec;
}

size_t ArchSpec::param_count() const {
    size_t total = 0;
    for (const auto& l : layers) {
        if (l.kind != LayerDesc::conv) continue;
        total += static_cast<size_t>(l.c_out) * l.c_in * l.k * l.k + l.c_out;
    }
    return total;
}

std::vector<ArchSpec::ParamSlice> ArchSpec::param_layout() const {
    std::vector<ParamSlice> out;
    size_t offset = 0;
    for (size_t li = 0; li < layers.size(); ++li) {
        const auto& l = layers[li];
        if (l.kind != LayerDesc::conv) continue;
        ParamSlice s;
        s.layer = static_cast<int>(li);
        s.weight_offset = offset;
        s.weight_count = static_cast<size_t>(l.c_out) * l.c_in * l.k * l.k;
        s.bias_offset = offset + s.weight_count;
        s.bias_count = l.c_out;
        offset = s.bias_offset + s.bias_count;
        out.push_back(s);
    }
    return out;
}

ModelParams build_model(ArchId id, int scale, uint64_t seed) {
    ModelParams m;
    m.arch = ArchSpec::make(id, scale);
    m.theta.assign(m.arch.param_count(), 0.0f);
    Rng rng(mix_seed(seed, static_cast<uint64_t>(id), scale));
    for (const auto& slice : m.arch.param_layout()) {
        const auto& l = m.arch.layers[slice.layer];
        const float bound =
            std::sqrt(6.0f / (static_cast<float>(l.c_in) * l.k * l.k));
        for (size_t i = 0; i < slice.weight_count; ++i) {
            m.theta[slice.weight_offset + i] = rng.uniform(-bound, bound);
        }
        // biases stay zero
    }
    m.provenance = Provenance::random;
    return m;
}

Tensor forward(const ModelParams& model, const Tensor& lr_image) {
    if (model.theta.size() != model.arch.param_count()) {
        throw std::invalid_argument("forward: theta length " +
                                    std::to_string(model.theta.size()) +
                                    " != arch parameter count " +
                                    std::to_string(model.arch.param_count()));
    }
    if (lr_image.n <= 1 || ThreadPool::instance().threads() <= 1) {
        return run_forward(model, lr_image, nullptr);
    }
    Tensor out;
    {
        // shape probe on image 0, then fill remaining images in parallel
        const Tensor first = run_forward(model, lr_image.slice_image(0), nullptr);
        out = Tensor(lr_image.n, first.c, first.h, first.w);
        std::memcpy(out.image(0), first.data.data(),
                    first.numel() * sizeof(float));
    }
    ThreadPool::instance().parallel_for(
        static_cast<size_t>(lr_image.n) - 1, [&](size_t i) {
            const int ni = static_cast<int>(i) + 1;
            const Tensor sr = run_forward(model, lr_image.slice_image(ni),
                                          nullptr);
            std::memcpy(out.image(ni), sr.data.data(),
                        sr.numel() * sizeof(float));
        });
    return out;
}

std::vector<float> backward(const ModelParams& model, const Tensor& lr_image,
                            const Tensor& grad_sr) {
    const size_t P = model.arch.param_count();
    std::vector<double> acc(P, 0.0);
    std::vector<std::vector<double>> per_image(lr_image.n);
    ThreadPool::instance().parallel_for(lr_image.n, [&](size_t ni) {
        Trace trace;
        const Tensor x = lr_image.slice_image(static_cast<int>(ni));
        const Tensor out = run_forward(model, x, &trace);
        if (!(grad_sr.c == out.c && grad_sr.h == out.h && grad_sr.w == out.w &&
              grad_sr.n == lr_image.n)) {
            throw std::invalid_argument(
                "backward: grad_sr shape " + grad_sr.shape_str() +
                " does not match forward output (" +
                std::to_string(lr_image.n) + "," + std::to_string(out.c) + "," +
                std::to_string(out.h) + "," + std::to_string(out.w) + ")");
        }
        per_image[ni].assign(P, 0.0);
        const Tensor g = grad_sr.slice_image(static_cast<int>(ni));
        run_backward(model, trace, g, per_image[ni].data());
    });
    for (int ni = 0; ni < lr_image.n; ++ni) {
        for (size_t i = 0; i < P; ++i) acc[i] += per_image[ni][i];
    }
    std::vector<float> grad(P);
    for (size_t i = 0; i < P; ++i) grad[i] = static_cast<float>(acc[i]);
    return grad;
}

LossGrad loss_and_grad(const ModelParams& model, const Tensor& lr_batch,
                       const Tensor& hr_batch) {
    const size_t P = model.arch.param_count();
    const int n = lr_batch.n;
    if (hr_batch.n != n) {
        throw std::invalid_argument("loss_and_grad: batch size mismatch");
    }
    std::vector<std::vector<double>> per_image(n);
    std::vector<double> abs_sums(n, 0.0);
    const auto& K = kern::active_kernels();
    const double total_numel =
        static_cast<double>(hr_batch.numel());
    const float gscale = static_cast<float>(1.0 / total_numel);
    ThreadPool::instance().parallel_for(n, [&](size_t ni) {
        Trace trace;
        const Tensor x = lr_batch.slice_image(static_cast<int>(ni));
        const Tensor out = run_forward(model, x, &trace);
        const Tensor target = hr_batch.slice_image(static_cast<int>(ni));
        require_same_shape(out, target, "loss_and_grad");
        abs_sums[ni] = K.sum_abs_diff(out.data.data(), target.data.data(),
                                      out.numel());
        Tensor g(out.n, out.c, out.h, out.w);
        K.sign_scale(out.data.data(), target.data.data(), gscale,
                     g.data.data(), out.numel());
        per_image[ni].assign(P, 0.0);
        run_backward(model, trace, g, per_image[ni].data());
    });
    LossGrad res;
    double loss = 0.0;
    for (int ni = 0; ni < n; ++ni) loss += abs_sums[ni];
    res.loss = loss / total_numel;
    std::vector<double> acc(P, 0.0);
    for (int ni = 0; ni < n; ++ni) {
        for (size_t i = 0; i < P; ++i) acc[i] += per_image[ni][i];
    }
    res.grad.resize(P);
    for (size_t i = 0; i < P; ++i) res.grad[i] = static_cast<float>(acc[i]);
    return res;
}

double batch_loss(const ModelParams& model, const Tensor& lr_batch,
                  const Tensor& hr_batch) {
    const Tensor out = forward(model, lr_batch);
    require_same_shape(out, hr_batch, "batch_loss");
    return kern::active_kernels().sum_abs_diff(out.data.data(),
                                               hr_batch.data.data(),
                                               out.numel()) /
           static_cast<double>(out.numel());
}

}  // namespace chunksr
