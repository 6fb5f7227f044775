#include <algorithm>
#include <cstring>
#include <filesystem>
#include <numeric>

#include "chunksr/adapt.hpp"
#include "chunksr/meta.hpp"
#include "chunksr/dataset.hpp"
#include "chunksr/ops.hpp"
#include "chunksr/synth.hpp"
#include "doctest.h"

using namespace chunksr;
namespace fs = std::filesystem;

namespace {

// independent full-sort oracle: stable sort by |delta| descending keeps
// ascending-index order among ties
std::vector<uint32_t> sort_oracle(const std::vector<float>& deltas, double p) {
    std::vector<uint32_t> order(deltas.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](uint32_t a, uint32_t b) {
                         return std::abs(deltas[a]) > std::abs(deltas[b]);
                     });
    const long want = std::lround(p / 100.0 * static_cast<double>(deltas.size()));
    const size_t k = std::min(deltas.size(),
                              static_cast<size_t>(std::max(1l, want)));
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

struct VideoFixture {
    fs::path dir;
    data::ChunkManifest manifest;
    std::shared_ptr<data::FrameSet> frames;
    std::vector<sampler::PatchPair> pairs;

    explicit VideoFixture(int chunks = 2, int frames_per_chunk = 4) {
        dir = fs::temp_directory_path() / "chunksr_adapt_fx";
        fs::remove_all(dir);
        synth::VideoSpec spec;
        spec.width = 96;
        spec.height = 96;
        spec.chunks = chunks;
        spec.frames_per_chunk = frames_per_chunk;
        spec.fps = frames_per_chunk;
        spec.iframe_interval = 2;
        spec.seed = 12;
        synth::video(dir / "v", spec);
        manifest = data::ingest(dir / "v", spec.fps, 2,
                                dir / "v" / "iframes.txt");
        data::chunkify(manifest, 1.0);
        frames = data::FrameSet::open(manifest);
        pairs = sampler::collect_pairs_all(*frames, manifest, 0, 32).pairs;
    }
    ~VideoFixture() { fs::remove_all(dir); }
};

adapt::AdaptConfig small_config() {
    adapt::AdaptConfig ac;
    ac.patch_size = 32;
    ac.batch_size = 4;
    ac.probe_steps = 3;
    ac.lr = 1e-3;
    ac.seed = 5;
    return ac;
}

}  // namespace

TEST_CASE("mask_from_deltas: pinned example and bounds") {
    // P = 10, p = 20 -> top-2 by magnitude
    const std::vector<float> deltas = {0.9f, 0.1f, 0.05f, 0.8f, 0.0f,
                                       0.0f, 0.0f, 0.0f,  0.0f, 0.0f};
    const auto mask = adapt::mask_from_deltas(deltas, 20.0);
    CHECK(mask.indices == std::vector<uint32_t>{0, 3});
    CHECK(mask.param_count == 10);

    // p = 100 -> everything
    const auto full = adapt::mask_from_deltas(deltas, 100.0);
    CHECK(full.indices.size() == 10);

    // minimum one coordinate
    const auto tiny = adapt::mask_from_deltas(deltas, 1.0);
    CHECK(tiny.indices.size() == 1);
    CHECK(tiny.indices[0] == 0);

    CHECK(adapt::mask_size_for(20.0, 26796) == 5359);
    CHECK(adapt::mask_size_for(1.0, 26796) == 268);
    CHECK_THROWS_AS(adapt::mask_from_deltas(deltas, 0.0),
                    std::invalid_argument);
}

TEST_CASE("mask_from_deltas equals the full-sort oracle, ties included") {
    Rng rng(31);
    for (int it = 0; it < 100; ++it) {
        const size_t P = 50 + rng.uniform_int(400);
        std::vector<float> deltas(P);
        for (auto& d : deltas) {
            // coarse quantization manufactures plenty of ties
            d = 0.05f * static_cast<float>(rng.uniform_int(8));
            if (rng.uniform() < 0.5f) d = -d;
        }
        const double p = 0.5 + 99.0 * rng.uniform();
        const auto mask = adapt::mask_from_deltas(deltas, p);
        const auto want = sort_oracle(deltas, p);
        CHECK(mask.indices == want);
    }
}

TEST_CASE("probe_and_mask: deterministic, reference untouched, errors") {
    VideoFixture fx;
    const ModelParams ref = build_model(ArchId::espcn, 2, 41);
    const auto theta_copy = ref.theta;
    const auto ac = small_config();
    Rng r1(7), r2(7);
    const auto m1 = adapt::probe_and_mask(ref, fx.pairs, ac, 5.0, r1);
    const auto m2 = adapt::probe_and_mask(ref, fx.pairs, ac, 5.0, r2);
    CHECK(m1.indices == m2.indices);
    CHECK(ref.theta == theta_copy);
    CHECK(m1.indices.size() == adapt::mask_size_for(5.0, ref.theta.size()));
    CHECK(std::is_sorted(m1.indices.begin(), m1.indices.end()));

    Rng r3(7);
    CHECK_THROWS_WITH_AS(adapt::probe_and_mask(ref, {}, ac, 5.0, r3),
                         doctest::Contains("empty chunk"),
                         std::invalid_argument);
}

TEST_CASE("epochs_to_steps: pinned examples") {
    CHECK(adapt::epochs_to_steps(1.0, 160, 16) == 10);
    CHECK(adapt::epochs_to_steps(0.1, 160, 16) == 1);
    CHECK(adapt::epochs_to_steps(3.0, 160, 16) == 30);
    CHECK(adapt::epochs_to_steps(0.0001, 10, 16) == 1);  // never zero
    CHECK(adapt::epochs_to_steps(1.0, 17, 16) == 2);     // ceil within epoch
    CHECK_THROWS_AS(adapt::epochs_to_steps(0.0, 10, 16),
                    std::invalid_argument);
}

TEST_CASE("masked_finetune: zero steps, mask contract, full-mask equivalence") {
    VideoFixture fx;
    const ModelParams ref = build_model(ArchId::espcn, 2, 42);
    const auto ac = small_config();

    // zero steps: adapted == reference, empty delta
    Rng r0(9);
    const auto none = adapt::masked_finetune(
        ref, adapt::mask_from_deltas(std::vector<float>(ref.theta.size(), 1.f),
                                     5.0),
        fx.pairs, ac, 0, r0);
    CHECK(none.adapted.theta == ref.theta);
    CHECK(none.delta.entries.empty());

    // outside-mask coordinates stay bit-exact
    Rng r1(9);
    std::vector<float> probe_delta(ref.theta.size(), 0.0f);
    for (size_t i = 0; i < probe_delta.size(); i += 7) probe_delta[i] = 1.0f;
    const auto mask = adapt::mask_from_deltas(probe_delta, 10.0);
    const auto ft = adapt::masked_finetune(ref, mask, fx.pairs, ac, 4, r1);
    size_t mi = 0;
    size_t changed = 0;
    for (uint32_t i = 0; i < ref.theta.size(); ++i) {
        while (mi < mask.indices.size() && mask.indices[mi] < i) ++mi;
        const bool in_mask = mi < mask.indices.size() && mask.indices[mi] == i;
        if (!in_mask) {
            CHECK(std::memcmp(&ft.adapted.theta[i], &ref.theta[i], 4) == 0);
        } else if (ft.adapted.theta[i] != ref.theta[i]) {
            ++changed;
        }
    }
    CHECK(changed > 0);
    CHECK(changed == ft.delta.entries.size());
    for (const auto& [idx, v] : ft.delta.entries) {
        CHECK(std::binary_search(mask.indices.begin(), mask.indices.end(),
                                 idx));
    }

    // full mask reproduces unmasked fine-tuning bit-for-bit
    adapt::GradientMask full;
    full.param_count = ref.theta.size();
    full.fraction = 100.0;
    full.indices.resize(ref.theta.size());
    std::iota(full.indices.begin(), full.indices.end(), 0u);
    Rng r2(11);
    const auto masked = adapt::masked_finetune(ref, full, fx.pairs, ac, 3, r2);

    // plain Adam fine-tune written out longhand as the oracle
    ModelParams plain = ref;
    ops::AdamState st(plain.theta.size(), ac.lr);
    Rng r3(11);
    for (int s = 0; s < 3; ++s) {
        meta::Batch b;
        {
            const auto& first = fx.pairs.front();
            b.lr = Tensor(ac.batch_size, 3, first.lr.h, first.lr.w);
            b.hr = Tensor(ac.batch_size, 3, first.hr.h, first.hr.w);
            for (int i = 0; i < ac.batch_size; ++i) {
                const auto& p = fx.pairs[r3.uniform_int(
                    static_cast<uint32_t>(fx.pairs.size()))];
                std::copy(p.lr.data.begin(), p.lr.data.end(),
                          b.lr.data.begin() +
                              static_cast<size_t>(i) * p.lr.numel());
                std::copy(p.hr.data.begin(), p.hr.data.end(),
                          b.hr.data.begin() +
                              static_cast<size_t>(i) * p.hr.numel());
            }
        }
        const LossGrad lg = loss_and_grad(plain, b.lr, b.hr);
        ops::adam_step(plain.theta, lg.grad, st);
    }
    CHECK(masked.adapted.theta == plain.theta);

    // mask size mismatch
    adapt::GradientMask bad;
    bad.param_count = 7;
    Rng r4(1);
    CHECK_THROWS_AS(adapt::masked_finetune(ref, bad, fx.pairs, ac, 1, r4),
                    std::invalid_argument);
}

TEST_CASE("emt_run: mask accounting matches the compression arithmetic") {
    VideoFixture fx(3, 2);
    const ModelParams meta_model = build_model(ArchId::espcn, 2, 43);
    const size_t P = meta_model.theta.size();
    adapt::AdaptConfig ac = small_config();
    ac.p1 = 20.0;
    ac.p2 = 1.0;
    ac.steps_override = 1;
    ac.probe_steps = 1;
    adapt::PairProvider provider = [&](int cid, const ModelParams&) {
        return sampler::collect_pairs_all(*fx.frames, fx.manifest, cid, 32);
    };
    const auto res = adapt::emt_run(meta_model, {0, 1, 2}, ac, provider);
    REQUIRE(res.masks.size() == 3);
    CHECK(res.masks[0].indices.size() == adapt::mask_size_for(20.0, P));
    CHECK(res.masks[1].indices.size() == adapt::mask_size_for(1.0, P));
    CHECK(res.masks[2].indices.size() == adapt::mask_size_for(1.0, P));
    CHECK(res.total_private_params ==
          adapt::mask_size_for(20.0, P) + 2 * adapt::mask_size_for(1.0, P));

    // sequential reconstruction identity over the chain
    ModelParams cur = meta_model;
    for (size_t j = 0; j < res.deltas.size(); ++j) {
        cur = codec::apply_delta(cur, res.deltas[j]);
        CHECK(codec::params_hash(cur.theta) == res.report[j].model_hash);
        CHECK(res.deltas[j].entries.size() <= res.masks[j].indices.size());
    }

    // determinism: identical seed and config give bit-identical deltas
    const auto res2 = adapt::emt_run(meta_model, {0, 1, 2}, ac, provider);
    for (size_t j = 0; j < res.deltas.size(); ++j) {
        CHECK(res.deltas[j].parent_hash == res2.deltas[j].parent_hash);
        REQUIRE(res.deltas[j].entries.size() == res2.deltas[j].entries.size());
        for (size_t i = 0; i < res.deltas[j].entries.size(); ++i) {
            CHECK(res.deltas[j].entries[i] == res2.deltas[j].entries[i]);
        }
    }

    CHECK_THROWS_AS(adapt::emt_run(meta_model, {}, ac, provider),
                    std::invalid_argument);
}

TEST_CASE("emt_run: single chunk at p1=100 equals whole-model fine-tuning") {
    VideoFixture fx(1, 4);
    const ModelParams meta_model = build_model(ArchId::espcn, 2, 44);
    adapt::AdaptConfig ac = small_config();
    ac.p1 = 100.0;
    ac.steps_override = 3;
    ac.seed = 21;
    adapt::PairProvider provider = [&](int cid, const ModelParams&) {
        return sampler::collect_pairs_all(*fx.frames, fx.manifest, cid, 32);
    };
    const auto res = adapt::emt_run(meta_model, {0}, ac, provider);
    REQUIRE(res.masks.size() == 1);
    CHECK(res.masks[0].indices.size() == meta_model.theta.size());

    // the same fine-tune done directly with the full mask and the chunk's
    // derived stream seed
    adapt::GradientMask full;
    full.param_count = meta_model.theta.size();
    full.fraction = 100.0;
    full.indices.resize(full.param_count);
    std::iota(full.indices.begin(), full.indices.end(), 0u);
    const auto pairs =
        sampler::collect_pairs_all(*fx.frames, fx.manifest, 0, 32);
    Rng ft_rng(adapt::chunk_seed(ac.seed, 0, 1));
    const auto direct = adapt::masked_finetune(meta_model, full, pairs.pairs,
                                               ac, 3, ft_rng);
    const ModelParams reconstructed =
        codec::apply_delta(meta_model, res.deltas[0]);
    CHECK(reconstructed.theta == direct.adapted.theta);
}

TEST_CASE("monotone self-fit: adapted model fits its chunk at least as well") {
    VideoFixture fx(3, 4);
    const ModelParams meta_model = build_model(ArchId::espcn, 2, 45);
    adapt::AdaptConfig ac = small_config();
    ac.steps_override = 6;
    ac.lr = 1e-3;
    adapt::PairProvider provider = [&](int cid, const ModelParams&) {
        return sampler::collect_pairs_all(*fx.frames, fx.manifest, cid, 32);
    };
    const auto res = adapt::emt_run(meta_model, {0, 1, 2}, ac, provider);
    ModelParams prev = meta_model;
    for (size_t j = 0; j < res.deltas.size(); ++j) {
        const auto pairs = sampler::collect_pairs_all(
            *fx.frames, fx.manifest, static_cast<int>(j), 32);
        const double before = adapt::pairs_psnr(prev, pairs.pairs);
        const ModelParams cur = codec::apply_delta(prev, res.deltas[j]);
        const double after = adapt::pairs_psnr(cur, pairs.pairs);
        CHECK(after >= before);
        prev = cur;
    }
}
