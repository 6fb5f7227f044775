#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "chunksr/dataset.hpp"
#include "chunksr/model.hpp"
#include "chunksr/rng.hpp"

namespace chunksr::meta {

// One video chunk of the meta dataset, treated as a task.
struct MetaTask {
    std::string name;
    std::shared_ptr<data::FrameSet> frames;
};

struct MetaConfig {
    double inner_lr = 0.5e-5;
    double outer_lr = 1e-3;
    int inner_steps = 2;
    int tasks_per_iter = 15;
    int frames_per_task = 50;  // caps the frames drawn from each task
    int patch_size = 144;      // HR pixels
    int batch_size_per_task = 16;
    int outer_iters = 1000;
    bool outer_adam = false;  // plain summed gradient step by default
    uint64_t seed = 0;
};

struct Batch {
    Tensor lr, hr;
};

// batch_size aligned HR/LR patch pairs; HR corners are uniform over valid
// positions constrained to multiples of scale. frame_cap <= 0 uses all
// frames.
Batch sample_task_batch(const MetaTask& task, int patch_size, int batch_size,
                        int frame_cap, Rng& rng);

// `steps` plain gradient-descent updates on the same batch, input unchanged.
ModelParams inner_update(const ModelParams& model, const Batch& batch,
                         double alpha, int steps);

// theta -= beta * sum(task_gradients), summed in f64 in task order.
void outer_update(ModelParams& model,
                  const std::vector<std::vector<float>>& task_gradients,
                  double beta);

// MAML-style loop: sample tasks, adapt each copy with inner updates, collect
// first-order meta-gradients at the adapted parameters, apply one outer
// update. Log line per outer iteration: "iter,meta_loss,elapsed_ms".
ModelParams meta_train(const ModelParams& init,
                       const std::vector<MetaTask>& tasks,
                       const MetaConfig& config, std::ostream* log);

struct PretrainConfig {
    int steps = 400;
    double lr = 1e-4;
    int batch_size = 16;
    int patch_size = 144;
    uint64_t seed = 0;
};

// Plain supervised Adam loop over one image set treated as a single task.
ModelParams pretrain(const ModelParams& init, const MetaTask& images,
                     const PretrainConfig& config, std::ostream* log);

}  // namespace chunksr::meta
