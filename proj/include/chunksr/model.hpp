#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chunksr/ops.hpp"
#include "chunksr/tensor.hpp"

namespace chunksr {

enum class ArchId : uint32_t { espcn = 0, srcnn = 1, edsr1 = 2 };

const char* to_string(ArchId id);
ArchId arch_from_string(const std::string& s);

enum class Provenance : uint32_t {
    random = 0,
    pretrained = 1,
    meta = 2,
    adapted = 3,
};

struct LayerDesc {
    enum Kind { conv, act, shuffle, upsample, res_open, res_close } kind;
    int k = 0, c_in = 0, c_out = 0;  // conv
    ops::Act activation = ops::Act::relu;
    int factor = 0;  // shuffle / upsample
};

// Fixed feed-forward chain (one residual skip for edsr1). Parameter layout is
// pinned: layers in order, per conv layer weights (out, in, ky, kx) row-major
// followed by that layer's biases.
struct ArchSpec {
    ArchId id = ArchId::espcn;
    int scale = 2;
    std::vector<LayerDesc> layers;

    static ArchSpec make(ArchId id, int scale);  // throws on unsupported pair

    size_t param_count() const;

    struct ParamSlice {
        int layer;  // index into layers
        size_t weight_offset, weight_count;
        size_t bias_offset, bias_count;
    };
    std::vector<ParamSlice> param_layout() const;
};

struct ModelParams {
    ArchSpec arch;
    std::vector<float> theta;
    Provenance provenance = Provenance::random;
    int32_t chunk_id = -1;  // meaningful for Provenance::adapted
};

// He-uniform weights, zero biases, deterministic in the seed.
ModelParams build_model(ArchId id, int scale, uint64_t seed);

// SR forward pass. Input (N, 3, h, w) -> (N, 3, h*scale, w*scale).
Tensor forward(const ModelParams& model, const Tensor& lr_image);

// Full parameter gradient of <forward(theta, lr), grad_sr> in flat layout.
std::vector<float> backward(const ModelParams& model, const Tensor& lr_image,
                            const Tensor& grad_sr);

struct LossGrad {
    double loss;
    std::vector<float> grad;
};

// L1 loss over the batch plus its parameter gradient; images are processed
// independently (parallel-safe) and per-image gradients are reduced in image
// order, so the result does not depend on the thread count.
LossGrad loss_and_grad(const ModelParams& model, const Tensor& lr_batch,
                       const Tensor& hr_batch);

double batch_loss(const ModelParams& model, const Tensor& lr_batch,
                  const Tensor& hr_batch);

}  // namespace chunksr
