#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "chunksr/dataset.hpp"
#include "chunksr/model.hpp"

namespace chunksr::sampler {

struct SamplerConfig {
    double r = 20.0;       // percent of hardest patch positions
    int patch_size = 144;  // HR pixels, equal to the training patch size
    double psnr_cap = 100.0;
};

// Non-overlapping patch grid anchored at (0,0); partial border cells are
// excluded.
struct PsnrMap {
    int frame_id = -1;
    int rows = 0, cols = 0;
    int patch_size = 0;
    std::vector<double> psnr_db;  // rows * cols, row-major

    double at(int r, int c) const { return psnr_db[static_cast<size_t>(r) * cols + c]; }
};

struct PatchPositions {
    int iframe_id = -1;
    std::vector<std::pair<int, int>> cells;  // (row, col)
    double r = 0.0;
};

// Forward pass of the previous chunk's adapted model on one LR I-frame.
Tensor sr_iframe(const ModelParams& prev_model, const Tensor& iframe_lr);

PsnrMap psnr_map(const Tensor& sr, const Tensor& hr, int patch_size,
                 double cap_db = 100.0);

// Cells with the lowest PSNR; |cells| = max(1, round(r/100 * rows*cols)),
// ties broken by (row, col) ascending.
PatchPositions select_positions(const PsnrMap& map, double r);

// One aligned LR/HR patch pair.
struct PatchPair {
    Tensor lr, hr;  // (1, 3, p/s, p/s) and (1, 3, p, p)
    int frame_id = -1;
    int y = 0, x = 0;  // HR pixel coordinates of the top-left corner
};

// Positions propagated unchanged to every frame in [range.begin, range.end).
std::vector<std::pair<int, int>> cell_pixel_coords(const PatchPositions& pos,
                                                   int patch_size);

// Extracts aligned pairs for the given frames and HR pixel coordinates.
std::vector<PatchPair> extract_pairs(
    data::FrameSet& frames, const std::vector<int>& frame_ids,
    const std::vector<std::pair<int, int>>& coords, int patch_size);

struct ChunkPairs {
    std::vector<PatchPair> pairs;
    size_t candidate_cells = 0;  // grid cells per frame
    size_t selected_cells = 0;   // total selected positions over I-frames
    size_t forward_count = 0;    // model evaluations performed
    std::vector<PsnrMap> maps;   // per evaluated I-frame, for debug dumps
};

// Challenging Patch Sampling for one chunk: evaluate `prev_model` on the
// chunk's I-frames only, pick the r% hardest grid cells per I-frame and
// propagate them to the in-between frames (clipped at the chunk boundary).
// A chunk with no I-frame falls back to evaluating its first frame.
ChunkPairs collect_pairs_cps(const ModelParams& prev_model,
                             data::FrameSet& frames,
                             const data::ChunkManifest& manifest, int chunk_id,
                             const SamplerConfig& config);

// All grid cells on all frames of the chunk.
ChunkPairs collect_pairs_all(data::FrameSet& frames,
                             const data::ChunkManifest& manifest, int chunk_id,
                             int patch_size);

}  // namespace chunksr::sampler
