#include "chunksr/meta.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "chunksr/kernels.hpp"
#include "chunksr/ops.hpp"

namespace chunksr::meta {
namespace {

int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void copy_patch(const Tensor& src, int src_y, int src_x, Tensor& dst,
                int dst_index, int size) {
    for (int c = 0; c < src.c; ++c) {
        const float* sp = src.plane(0, c);
        float* dp = dst.plane(dst_index, c);
        for (int y = 0; y < size; ++y) {
            std::memcpy(dp + static_cast<size_t>(y) * size,
                        sp + (static_cast<size_t>(src_y + y)) * src.w + src_x,
                        sizeof(float) * size);
        }
    }
}

}  // namespace

Batch sample_task_batch(const MetaTask& task, int patch_size, int batch_size,
                        int frame_cap, Rng& rng) {
    auto& fsrc = *task.frames;
    const int scale = fsrc.scale();
    if (patch_size % scale != 0) {
        throw std::invalid_argument("patch size " + std::to_string(patch_size) +
                                    " must be divisible by scale " +
                                    std::to_string(scale));
    }
    if (fsrc.hr_h() < patch_size || fsrc.hr_w() < patch_size) {
        throw std::invalid_argument(
            "task " + task.name + ": frame 0 (" + std::to_string(fsrc.hr_w()) +
            "x" + std::to_string(fsrc.hr_h()) + ") smaller than patch " +
            std::to_string(patch_size));
    }
    const int frames = frame_cap > 0
                           ? std::min(frame_cap, fsrc.frame_count())
                           : fsrc.frame_count();
    // HR corners constrained to multiples of scale so LR patches align
    const int ny = (fsrc.hr_h() - patch_size) / scale + 1;
    const int nx = (fsrc.hr_w() - patch_size) / scale + 1;
    const int lr_patch = patch_size / scale;
    Batch b;
    b.hr = Tensor(batch_size, 3, patch_size, patch_size);
    b.lr = Tensor(batch_size, 3, lr_patch, lr_patch);
    for (int i = 0; i < batch_size; ++i) {
        const int f = static_cast<int>(rng.uniform_int(frames));
        const int y = scale * static_cast<int>(rng.uniform_int(ny));
        const int x = scale * static_cast<int>(rng.uniform_int(nx));
        const Tensor hr = fsrc.hr(f);
        const Tensor lr = fsrc.lr(f);
        copy_patch(hr, y, x, b.hr, i, patch_size);
        copy_patch(lr, y / scale, x / scale, b.lr, i, lr_patch);
    }
    return b;
}

ModelParams inner_update(const ModelParams& model, const Batch& batch,
                         double alpha, int steps) {
    if (steps < 1) {
        throw std::invalid_argument("inner_update: steps must be >= 1");
    }
    ModelParams adapted = model;
    for (int s = 0; s < steps; ++s) {
        const LossGrad lg = loss_and_grad(adapted, batch.lr, batch.hr);
        if (!std::isfinite(lg.loss)) {
            throw std::runtime_error("inner_update: loss diverged at step " +
                                     std::to_string(s));
        }
        kern::active_kernels().axpy(adapted.theta.data(), lg.grad.data(),
                                    static_cast<float>(-alpha),
                                    adapted.theta.size());
    }
    return adapted;
}

void outer_update(ModelParams& model,
                  const std::vector<std::vector<float>>& task_gradients,
                  double beta) {
    const size_t P = model.theta.size();
    std::vector<double> sum(P, 0.0);
    for (const auto& g : task_gradients) {
        if (g.size() != P) {
            throw std::invalid_argument(
                "outer_update: gradient length " + std::to_string(g.size()) +
                " != parameter count " + std::to_string(P));
        }
        for (size_t i = 0; i < P; ++i) sum[i] += g[i];
    }
    for (size_t i = 0; i < P; ++i) {
        model.theta[i] = static_cast<float>(
            static_cast<double>(model.theta[i]) - beta * sum[i]);
    }
}

ModelParams meta_train(const ModelParams& init,
                       const std::vector<MetaTask>& tasks,
                       const MetaConfig& config, std::ostream* log) {
    if (static_cast<int>(tasks.size()) < config.tasks_per_iter) {
        throw std::invalid_argument(
            "meta_train: need at least " +
            std::to_string(config.tasks_per_iter) + " tasks, got " +
            std::to_string(tasks.size()));
    }
    ModelParams model = init;
    model.provenance = Provenance::meta;
    model.chunk_id = -1;
    const int n = config.tasks_per_iter;
    Rng pick_rng(mix_seed(config.seed, 0x6d657461ull));
    ops::AdamState outer_state;
    if (config.outer_adam) {
        outer_state = ops::AdamState(model.theta.size(), config.outer_lr);
    }
    const int64_t t0 = now_ms();
    for (int iter = 0; iter < config.outer_iters; ++iter) {
        // sample n distinct tasks
        std::vector<int> ids(tasks.size());
        for (size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
        for (int i = 0; i < n; ++i) {
            const int j =
                i + static_cast<int>(pick_rng.uniform_int(
                        static_cast<uint32_t>(ids.size() - i)));
            std::swap(ids[i], ids[j]);
        }
        std::vector<std::vector<float>> grads(n);
        double meta_loss = 0.0;
        for (int slot = 0; slot < n; ++slot) {
            const MetaTask& task = tasks[ids[slot]];
            Rng task_rng(mix_seed(config.seed, iter, slot));
            try {
                ModelParams adapted = model;
                if (config.inner_steps > 0) {
                    const Batch support = sample_task_batch(
                        task, config.patch_size, config.batch_size_per_task,
                        config.frames_per_task, task_rng);
                    adapted = inner_update(model, support, config.inner_lr,
                                           config.inner_steps);
                }
                // first-order meta-gradient: task loss gradient at the
                // adapted parameters, on a fresh query batch
                const Batch query = sample_task_batch(
                    task, config.patch_size, config.batch_size_per_task,
                    config.frames_per_task, task_rng);
                const LossGrad lg = loss_and_grad(adapted, query.lr, query.hr);
                if (!std::isfinite(lg.loss)) {
                    throw std::runtime_error("meta loss diverged");
                }
                meta_loss += lg.loss;
                grads[slot] = std::move(lg.grad);
            } catch (const std::exception& e) {
                throw std::runtime_error(
                    "meta_train: iteration " + std::to_string(iter) + ", task " +
                    task.name + ": " + e.what());
            }
        }
        if (config.outer_adam) {
            std::vector<double> sum(model.theta.size(), 0.0);
            for (const auto& g : grads) {
                for (size_t i = 0; i < sum.size(); ++i) sum[i] += g[i];
            }
            std::vector<float> sum_f(sum.begin(), sum.end());
            ops::adam_step(model.theta, sum_f, outer_state);
        } else {
            outer_update(model, grads, config.outer_lr);
        }
        if (log) {
            (*log) << iter << "," << meta_loss << "," << (now_ms() - t0)
                   << "\n";
        }
    }
    return model;
}

ModelParams pretrain(const ModelParams& init, const MetaTask& images,
                     const PretrainConfig& config, std::ostream* log) {
    ModelParams model = init;
    model.provenance = Provenance::pretrained;
    model.chunk_id = -1;
    Rng rng(mix_seed(config.seed, 0x70726574ull));
    ops::AdamState state(model.theta.size(), config.lr);
    const int64_t t0 = now_ms();
    for (int step = 0; step < config.steps; ++step) {
        const Batch b = sample_task_batch(images, config.patch_size,
                                          config.batch_size, 0, rng);
        const LossGrad lg = loss_and_grad(model, b.lr, b.hr);
        if (!std::isfinite(lg.loss)) {
            throw std::runtime_error("pretrain: loss diverged at step " +
                                     std::to_string(step));
        }
        ops::adam_step(model.theta, lg.grad, state);
        if (log && (step % 50 == 0 || step + 1 == config.steps)) {
            (*log) << step << "," << lg.loss << "," << (now_ms() - t0) << "\n";
        }
    }
    return model;
}

}  // namespace chunksr::meta
