#include "chunksr/adapt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "chunksr/kernels.hpp"
#include "chunksr/meta.hpp"
#include "chunksr/ops.hpp"

namespace chunksr::adapt {
namespace {

int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Draws batch_size pairs uniformly (with replacement) and stacks them.
meta::Batch draw_batch(const std::vector<sampler::PatchPair>& pairs,
                       int batch_size, Rng& rng) {
    const auto& first = pairs.front();
    meta::Batch b;
    b.lr = Tensor(batch_size, first.lr.c, first.lr.h, first.lr.w);
    b.hr = Tensor(batch_size, first.hr.c, first.hr.h, first.hr.w);
    for (int i = 0; i < batch_size; ++i) {
        const auto& p =
            pairs[rng.uniform_int(static_cast<uint32_t>(pairs.size()))];
        std::copy(p.lr.data.begin(), p.lr.data.end(),
                  b.lr.data.begin() + static_cast<size_t>(i) * p.lr.numel());
        std::copy(p.hr.data.begin(), p.hr.data.end(),
                  b.hr.data.begin() + static_cast<size_t>(i) * p.hr.numel());
    }
    return b;
}

}  // namespace

size_t mask_size_for(double p, size_t param_count) {
    const long k = std::lround(p / 100.0 * static_cast<double>(param_count));
    return static_cast<size_t>(
        std::min(static_cast<long>(param_count), std::max(1l, k)));
}

GradientMask mask_from_deltas(const std::vector<float>& abs_delta, double p) {
    if (p <= 0.0 || p > 100.0) {
        throw std::invalid_argument("mask fraction must be in (0, 100]");
    }
    const size_t P = abs_delta.size();
    const size_t k = mask_size_for(p, P);
    std::vector<uint32_t> order(P);
    std::iota(order.begin(), order.end(), 0u);
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end(),
                     [&](uint32_t a, uint32_t b) {
                         const float ma = std::abs(abs_delta[a]);
                         const float mb = std::abs(abs_delta[b]);
                         if (ma != mb) return ma > mb;
                         return a < b;  // ties: ascending index
                     });
    order.resize(k);
    std::sort(order.begin(), order.end());
    GradientMask mask;
    mask.indices = std::move(order);
    mask.param_count = P;
    mask.fraction = p;
    return mask;
}

GradientMask probe_and_mask(const ModelParams& reference,
                            const std::vector<sampler::PatchPair>& pairs,
                            const AdaptConfig& config, double p, Rng& rng,
                            std::vector<float>* probe_delta) {
    if (pairs.empty()) {
        throw std::invalid_argument("probe_and_mask: empty chunk");
    }
    if (config.probe_steps < 1) {
        throw std::invalid_argument("probe_and_mask: probe_steps must be >= 1");
    }
    ModelParams probe = reference;
    ops::AdamState state(probe.theta.size(), config.lr);
    for (int s = 0; s < config.probe_steps; ++s) {
        const meta::Batch b = draw_batch(pairs, config.batch_size, rng);
        const LossGrad lg = loss_and_grad(probe, b.lr, b.hr);
        if (!std::isfinite(lg.loss)) {
            throw std::runtime_error("probe_and_mask: loss diverged at step " +
                                     std::to_string(s));
        }
        ops::adam_step(probe.theta, lg.grad, state);
    }
    std::vector<float> delta(probe.theta.size());
    for (size_t i = 0; i < delta.size(); ++i) {
        delta[i] = std::abs(probe.theta[i] - reference.theta[i]);
    }
    if (probe_delta) *probe_delta = delta;
    return mask_from_deltas(delta, p);
}

int epochs_to_steps(double epochs, size_t pairs_per_epoch, int batch_size) {
    if (epochs <= 0.0 || pairs_per_epoch == 0 || batch_size < 1) {
        throw std::invalid_argument("epochs_to_steps: inputs must be positive");
    }
    const double steps_per_epoch = std::ceil(
        static_cast<double>(pairs_per_epoch) / static_cast<double>(batch_size));
    const long steps = std::lround(epochs * steps_per_epoch);
    return static_cast<int>(std::max(1l, steps));
}

FinetuneResult masked_finetune(const ModelParams& reference,
                               const GradientMask& mask,
                               const std::vector<sampler::PatchPair>& pairs,
                               const AdaptConfig& config, int steps, Rng& rng) {
    if (mask.param_count != reference.theta.size()) {
        throw std::invalid_argument(
            "masked_finetune: mask parameter count " +
            std::to_string(mask.param_count) + " != model parameter count " +
            std::to_string(reference.theta.size()));
    }
    if (steps > 0 && pairs.empty()) {
        throw std::invalid_argument("masked_finetune: no training pairs");
    }
    FinetuneResult res;
    res.adapted = reference;
    res.steps = steps;
    ops::AdamState state(reference.theta.size(), config.lr);
    std::vector<float> masked_grad(reference.theta.size(), 0.0f);
    for (int s = 0; s < steps; ++s) {
        const meta::Batch b = draw_batch(pairs, config.batch_size, rng);
        const LossGrad lg = loss_and_grad(res.adapted, b.lr, b.hr);
        if (!std::isfinite(lg.loss)) {
            throw std::runtime_error(
                "masked_finetune: loss diverged at step " + std::to_string(s) +
                " of " + std::to_string(steps));
        }
        // gradients outside the mask are zeroed; Adam moments there stay zero
        std::fill(masked_grad.begin(), masked_grad.end(), 0.0f);
        for (uint32_t idx : mask.indices) masked_grad[idx] = lg.grad[idx];
        ops::adam_step(res.adapted.theta, masked_grad, state);
    }
    res.adapted.provenance = Provenance::adapted;
    res.delta = codec::encode_delta(reference, res.adapted, mask.indices);
    return res;
}

uint64_t chunk_seed(uint64_t seed, int chunk_id, int purpose) {
    return mix_seed(seed, 0x636b0000ull + static_cast<uint64_t>(chunk_id),
                    purpose);
}

EmtResult emt_run(const ModelParams& meta, const std::vector<int>& chunk_ids,
                  const AdaptConfig& config, const PairProvider& provider) {
    if (chunk_ids.empty()) {
        throw std::invalid_argument("emt_run: need at least one chunk");
    }
    EmtResult result;
    ModelParams reference = meta;
    bool first = true;
    for (int chunk_id : chunk_ids) {
        const int64_t t0 = now_ms();
        try {
            const sampler::ChunkPairs chunk_pairs =
                provider(chunk_id, reference);
            const double p = first ? config.p1 : config.p2;
            Rng probe_rng(chunk_seed(config.seed, chunk_id, 0));
            const GradientMask mask = probe_and_mask(
                reference, chunk_pairs.pairs, config, p, probe_rng);
            const int steps =
                config.steps_override >= 0
                    ? config.steps_override
                    : epochs_to_steps(config.epochs, chunk_pairs.pairs.size(),
                                      config.batch_size);
            Rng ft_rng(chunk_seed(config.seed, chunk_id, 1));
            FinetuneResult ft = masked_finetune(reference, mask,
                                                chunk_pairs.pairs, config,
                                                steps, ft_rng);
            ft.adapted.chunk_id = chunk_id;
            ft.delta.chunk_id = chunk_id;

            ChunkReport rep;
            rep.chunk_id = chunk_id;
            rep.mask_size = mask.indices.size();
            rep.steps = steps;
            rep.train_psnr_db = pairs_psnr(ft.adapted, chunk_pairs.pairs);
            rep.model_hash = codec::params_hash(ft.adapted.theta);
            rep.pair_count = chunk_pairs.pairs.size();
            rep.candidate_cells = chunk_pairs.candidate_cells;
            rep.selected_cells = chunk_pairs.selected_cells;
            rep.forward_count = chunk_pairs.forward_count;
            rep.elapsed_ms = now_ms() - t0;
            result.total_private_params += mask.indices.size();
            result.masks.push_back(mask);
            result.deltas.push_back(ft.delta);
            result.report.push_back(rep);
            reference = std::move(ft.adapted);
            first = false;
        } catch (const std::exception& e) {
            throw std::runtime_error("emt_run: chunk " +
                                     std::to_string(chunk_id) + ": " +
                                     e.what());
        }
    }
    return result;
}

double pairs_psnr(const ModelParams& model,
                  const std::vector<sampler::PatchPair>& pairs) {
    double sq = 0.0;
    double numel = 0.0;
    const auto& K = kern::active_kernels();
    for (const auto& p : pairs) {
        const Tensor sr = forward(model, p.lr);
        sq += K.sum_sq_diff(sr.data.data(), p.hr.data.data(), sr.numel());
        numel += static_cast<double>(sr.numel());
    }
    if (sq == 0.0) return 100.0;
    const double mse = sq / numel;
    return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

}  // namespace chunksr::adapt
