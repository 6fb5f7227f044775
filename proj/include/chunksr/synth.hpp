#pragma once

#include <cstdint>
#include <filesystem>

namespace chunksr::synth {

// Procedural desk-scale datasets: moving textured patterns with distinct
// per-chunk content. All output is deterministic in the seed.
struct VideoSpec {
    int width = 144, height = 144;
    double fps = 8.0;
    int frames_per_chunk = 8;
    int chunks = 9;
    int iframe_interval = 4;
    uint64_t seed = 1;
    // relative parameter change between neighboring chunks; small values keep
    // chunks temporally consistent while still giving each chunk its own look
    double drift = 0.10;
};

// Writes frame_%05d.png plus an iframes.txt sidecar (one index per line).
void video(const std::filesystem::path& dir, const VideoSpec& spec);

// task_%02d/ subdirectories of short moving-texture clips; each task draws
// from a different texture family.
void meta_tasks(const std::filesystem::path& dir, int tasks, int frames,
                int width, int height, uint64_t seed);

// Smooth still images (gradients plus soft blobs); a stand-in corpus for
// generic pretraining data, deliberately unlike the video textures.
void still_images(const std::filesystem::path& dir, int count, int width,
                  int height, uint64_t seed);

}  // namespace chunksr::synth
