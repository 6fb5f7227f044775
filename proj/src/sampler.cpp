#include "chunksr/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "chunksr/kernels.hpp"

namespace chunksr::sampler {
namespace {

size_t positions_for(double r, size_t cells) {
    const long k = std::lround(r / 100.0 * static_cast<double>(cells));
    return static_cast<size_t>(std::max(1l, k));
}

Tensor crop(const Tensor& src, int y, int x, int size) {
    Tensor out(1, src.c, size, size);
    for (int c = 0; c < src.c; ++c) {
        const float* sp = src.plane(0, c);
        float* dp = out.plane(0, c);
        for (int row = 0; row < size; ++row) {
            std::memcpy(dp + static_cast<size_t>(row) * size,
                        sp + (static_cast<size_t>(y + row)) * src.w + x,
                        sizeof(float) * size);
        }
    }
    return out;
}

}  // namespace

Tensor sr_iframe(const ModelParams& prev_model, const Tensor& iframe_lr) {
    return forward(prev_model, iframe_lr);
}

PsnrMap psnr_map(const Tensor& sr, const Tensor& hr, int patch_size,
                 double cap_db) {
    require_same_shape(sr, hr, "psnr_map");
    if (patch_size > sr.h || patch_size > sr.w) {
        throw std::invalid_argument(
            "psnr_map: patch " + std::to_string(patch_size) +
            " larger than frame " + std::to_string(sr.w) + "x" +
            std::to_string(sr.h));
    }
    PsnrMap map;
    map.patch_size = patch_size;
    map.rows = sr.h / patch_size;
    map.cols = sr.w / patch_size;
    map.psnr_db.resize(static_cast<size_t>(map.rows) * map.cols);
    const auto& K = kern::active_kernels();
    for (int r = 0; r < map.rows; ++r) {
        for (int c = 0; c < map.cols; ++c) {
            // per-cell MSE over all channels, f64 accumulation
            double sq = 0.0;
            for (int ch = 0; ch < sr.c; ++ch) {
                const float* sp = sr.plane(0, ch);
                const float* hp = hr.plane(0, ch);
                for (int y = 0; y < patch_size; ++y) {
                    const size_t off =
                        (static_cast<size_t>(r * patch_size + y)) * sr.w +
                        c * patch_size;
                    sq += K.sum_sq_diff(sp + off, hp + off, patch_size);
                }
            }
            const double numel =
                static_cast<double>(sr.c) * patch_size * patch_size;
            double v;
            if (sq == 0.0) {
                v = cap_db;
            } else {
                v = 10.0 * std::log10(1.0 / (sq / numel));
                v = std::min(v, cap_db);
            }
            map.psnr_db[static_cast<size_t>(r) * map.cols + c] = v;
        }
    }
    return map;
}

PatchPositions select_positions(const PsnrMap& map, double r) {
    if (r <= 0.0 || r > 100.0) {
        throw std::invalid_argument("select_positions: r must be in (0, 100]");
    }
    const size_t cells = map.psnr_db.size();
    const size_t k = std::min(positions_for(r, cells), cells);
    std::vector<int> order(cells);
    for (size_t i = 0; i < cells; ++i) order[i] = static_cast<int>(i);
    // lowest PSNR first; ties by (row, col) ascending == linear index order
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end(),
                     [&](int a, int b) {
                         if (map.psnr_db[a] != map.psnr_db[b]) {
                             return map.psnr_db[a] < map.psnr_db[b];
                         }
                         return a < b;
                     });
    order.resize(k);
    std::sort(order.begin(), order.end());
    PatchPositions pos;
    pos.iframe_id = map.frame_id;
    pos.r = r;
    for (int idx : order) {
        pos.cells.emplace_back(idx / map.cols, idx % map.cols);
    }
    return pos;
}

std::vector<std::pair<int, int>> cell_pixel_coords(const PatchPositions& pos,
                                                   int patch_size) {
    std::vector<std::pair<int, int>> out;
    out.reserve(pos.cells.size());
    for (const auto& [row, col] : pos.cells) {
        out.emplace_back(row * patch_size, col * patch_size);
    }
    return out;
}

std::vector<PatchPair> extract_pairs(
    data::FrameSet& frames, const std::vector<int>& frame_ids,
    const std::vector<std::pair<int, int>>& coords, int patch_size) {
    const int scale = frames.scale();
    if (patch_size % scale != 0) {
        throw std::invalid_argument("extract_pairs: patch size not divisible "
                                    "by scale");
    }
    std::vector<PatchPair> out;
    out.reserve(frame_ids.size() * coords.size());
    for (int f : frame_ids) {
        const Tensor hr = frames.hr(f);
        const Tensor lr = frames.lr(f);
        for (const auto& [y, x] : coords) {
            if (y < 0 || x < 0 || y + patch_size > hr.h ||
                x + patch_size > hr.w) {
                throw std::out_of_range(
                    "extract_pairs: patch at (" + std::to_string(y) + "," +
                    std::to_string(x) + ") out of bounds for frame " +
                    std::to_string(f));
            }
            PatchPair p;
            p.frame_id = f;
            p.y = y;
            p.x = x;
            p.hr = crop(hr, y, x, patch_size);
            p.lr = crop(lr, y / scale, x / scale, patch_size / scale);
            out.push_back(std::move(p));
        }
    }
    return out;
}

ChunkPairs collect_pairs_cps(const ModelParams& prev_model,
                             data::FrameSet& frames,
                             const data::ChunkManifest& manifest, int chunk_id,
                             const SamplerConfig& config) {
    ChunkPairs result;
    const auto chunk = manifest.chunks.at(chunk_id);
    const int patch = config.patch_size;
    result.candidate_cells =
        static_cast<size_t>(frames.hr_h() / patch) * (frames.hr_w() / patch);

    struct Anchor {
        int frame;
        int range_end;
    };
    std::vector<Anchor> anchors;
    for (int m : manifest.chunk_iframes(chunk_id)) {
        const auto range = manifest.iframe_range(m);
        anchors.push_back({range.begin, range.end});
    }
    if (anchors.empty()) {
        // no I-frame in this chunk: evaluate its first frame instead
        anchors.push_back({chunk.begin, chunk.end});
    }

    for (size_t a = 0; a < anchors.size(); ++a) {
        const int k = anchors[a].frame;
        const Tensor sr = sr_iframe(prev_model, frames.lr(k));
        ++result.forward_count;
        PsnrMap map = psnr_map(sr, frames.hr(k), patch, config.psnr_cap);
        map.frame_id = k;
        const PatchPositions pos = select_positions(map, config.r);
        result.selected_cells += pos.cells.size();
        const auto coords = cell_pixel_coords(pos, patch);
        std::vector<int> frame_ids;
        // leading frames before the chunk's first I-frame take its positions
        const int begin = (a == 0 && k > chunk.begin) ? chunk.begin : k;
        for (int f = begin; f < anchors[a].range_end; ++f) {
            frame_ids.push_back(f);
        }
        auto pairs = extract_pairs(frames, frame_ids, coords, patch);
        result.maps.push_back(std::move(map));
        for (auto& p : pairs) result.pairs.push_back(std::move(p));
    }
    if (result.pairs.empty()) {
        throw std::runtime_error("chunk " + std::to_string(chunk_id) +
                                 ": no training pairs");
    }
    return result;
}

ChunkPairs collect_pairs_all(data::FrameSet& frames,
                             const data::ChunkManifest& manifest, int chunk_id,
                             int patch_size) {
    ChunkPairs result;
    const auto chunk = manifest.chunks.at(chunk_id);
    const int rows = frames.hr_h() / patch_size;
    const int cols = frames.hr_w() / patch_size;
    result.candidate_cells = static_cast<size_t>(rows) * cols;
    result.selected_cells = result.candidate_cells;
    std::vector<std::pair<int, int>> coords;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            coords.emplace_back(r * patch_size, c * patch_size);
        }
    }
    std::vector<int> frame_ids;
    for (int f = chunk.begin; f < chunk.end; ++f) frame_ids.push_back(f);
    result.pairs = extract_pairs(frames, frame_ids, coords, patch_size);
    if (result.pairs.empty()) {
        throw std::runtime_error("chunk " + std::to_string(chunk_id) +
                                 ": no training pairs");
    }
    return result;
}

}  // namespace chunksr::sampler
