#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "chunksr/codec.hpp"
#include "chunksr/model.hpp"
#include "chunksr/rng.hpp"
#include "chunksr/sampler.hpp"

namespace chunksr::adapt {

// Parameter coordinates selected as the p% most significant.
struct GradientMask {
    std::vector<uint32_t> indices;  // unique, ascending, < param_count
    size_t param_count = 0;
    double fraction = 0.0;  // p, in percent
};

struct AdaptConfig {
    double p1 = 20.0, p2 = 1.0;  // percent, first chunk vs later chunks
    int probe_steps = 10;
    double epochs = 0.1;
    double lr = 1e-4;
    int batch_size = 16;
    int patch_size = 144;
    int steps_override = -1;  // >= 0 forces the step count (0 allowed)
    uint64_t seed = 0;
};

// |mask| = max(1, round(p/100 * P))
size_t mask_size_for(double p, size_t param_count);

// Top-p% coordinates by |delta| magnitude, ties broken by ascending index.
GradientMask mask_from_deltas(const std::vector<float>& abs_delta, double p);

// Runs probe_steps full-parameter Adam steps on a copy of `reference`, then
// masks the coordinates that moved most. When probe_delta is non-null it
// receives |theta_probe - theta_reference|.
GradientMask probe_and_mask(const ModelParams& reference,
                            const std::vector<sampler::PatchPair>& pairs,
                            const AdaptConfig& config, double p, Rng& rng,
                            std::vector<float>* probe_delta = nullptr);

struct FinetuneResult {
    ModelParams adapted;
    codec::SparseDelta delta;
    int steps = 0;
};

// Adam fine-tuning with gradients zeroed outside the mask before every step;
// coordinates outside the mask stay bit-identical to the reference.
FinetuneResult masked_finetune(const ModelParams& reference,
                               const GradientMask& mask,
                               const std::vector<sampler::PatchPair>& pairs,
                               const AdaptConfig& config, int steps, Rng& rng);

// steps = max(1, round(epochs * ceil(pairs_per_epoch / batch_size)))
int epochs_to_steps(double epochs, size_t pairs_per_epoch, int batch_size);

// Deterministic per-chunk stream seeds; purpose 0 = probe, 1 = finetune.
uint64_t chunk_seed(uint64_t seed, int chunk_id, int purpose);

struct ChunkReport {
    int chunk_id = -1;
    size_t mask_size = 0;
    int steps = 0;
    double train_psnr_db = 0.0;
    int64_t elapsed_ms = 0;
    uint64_t model_hash = 0;
    size_t pair_count = 0;
    size_t candidate_cells = 0;
    size_t selected_cells = 0;
    size_t forward_count = 0;
};

struct EmtResult {
    std::vector<codec::SparseDelta> deltas;
    std::vector<GradientMask> masks;
    std::vector<ChunkReport> report;
    size_t total_private_params = 0;  // sum of mask sizes
};

// Pair provider: chunk id and the reference model (the previous chunk's
// adapted model) -> training pairs.
using PairProvider =
    std::function<sampler::ChunkPairs(int chunk_id, const ModelParams& ref)>;

// Sequential partial adaptation over an ordered chunk list: the first chunk
// adapts from `meta` with fraction p1, later chunks from the previous adapted
// model with fraction p2.
EmtResult emt_run(const ModelParams& meta, const std::vector<int>& chunk_ids,
                  const AdaptConfig& config, const PairProvider& provider);

// Aggregate-MSE PSNR of the model over a pair set (training-fit metric).
double pairs_psnr(const ModelParams& model,
                  const std::vector<sampler::PatchPair>& pairs);

}  // namespace chunksr::adapt
