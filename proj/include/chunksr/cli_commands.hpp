#pragma once

#include <cstdint>
#include <string>

#include "chunksr/adapt.hpp"
#include "chunksr/meta.hpp"
#include "chunksr/sampler.hpp"
#include "chunksr/synth.hpp"

namespace chunksr::cli {

struct RunConfig {
    // shared
    std::string arch = "espcn";
    int scale = 2;
    uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency
    std::string out_dir;  // empty: $CHUNKSR_OUT_DIR or "."
    std::string preset = "S";  // S | M | L | custom

    // synth
    std::string synth_kind = "video";  // video | meta | images
    synth::VideoSpec video;
    int synth_tasks = 3, synth_frames = 20, synth_count = 8;
    int synth_width = 144, synth_height = 144;

    // ingest
    std::string frames_dir;
    double fps = 30.0;
    double chunk_seconds = 5.0;
    std::string iframe_sidecar;
    int iframes_per_group = 0;  // 0 = single group

    // meta-train
    std::string pretrain_dir;
    std::string meta_dir;
    meta::MetaConfig mc;
    meta::PretrainConfig pc;

    // adapt / apply / evaluate
    std::string manifest_path;
    std::string model_path;
    std::string models_dir;
    std::string init = "meta";  // meta | pretrained
    adapt::AdaptConfig ac;
    sampler::SamplerConfig sc;
    bool no_cps = false;
    int chunks_limit = 0;  // 0 = all chunks
    std::string dump_psnr_maps;
    std::string deltas_dir;
    std::string sr_dir;
};

// S: 0.1 epoch, p1=20, p2=1; M: 3 epochs, p1=20, p2=1; L: 3 epochs, p1=100,
// p2=1.
void apply_preset(RunConfig& cfg);

std::string default_out_dir();

int cmd_synth(const RunConfig& cfg);
int cmd_ingest(const RunConfig& cfg);
int cmd_meta_train(const RunConfig& cfg);
int cmd_adapt(const RunConfig& cfg);
int cmd_apply(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);

// Full argv entry point (flag parsing + dispatch); returns the process exit
// code and never throws.
int main_cli(int argc, const char* const* argv);

}  // namespace chunksr::cli
