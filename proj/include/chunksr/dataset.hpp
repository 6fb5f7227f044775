#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "chunksr/tensor.hpp"

namespace chunksr::data {

struct ChunkRange {
    int begin = 0, end = 0;  // frame (or chunk) indices, half-open
};

// Frame list, chunk division, I-frame index and long-video grouping for one
// directory-of-frames video.
struct ChunkManifest {
    std::string frame_dir;
    std::vector<std::string> files;  // relative names, temporal order
    double fps = 30.0;
    int scale = 2;
    int hr_h = 0, hr_w = 0;           // center-cropped to multiples of scale
    std::vector<ChunkRange> chunks;   // partition of [0, T)
    std::vector<int> iframes;         // k_1..k_M, ascending, k_1 = 0
    std::vector<int> iframe_chunk;    // c_m = chunk containing k_m
    std::vector<ChunkRange> groups;   // chunk-id ranges, default one group

    int frame_count() const { return static_cast<int>(files.size()); }
    int chunk_of_frame(int frame) const;
    std::vector<int> chunk_iframes(int chunk_id) const;
    // frames covered by I-frame m: [k_m, min(k_{m+1}, end of chunk c_m))
    ChunkRange iframe_range(int m) const;
};

// Scans a frame directory (PNG/PPM sorted by name), validates decodability
// and consistent dimensions. I-frame indices come from a sidecar file (one
// index per line) or fall back to a fixed 48-frame interval. Frame 0 is
// always an I-frame.
ChunkManifest ingest(const std::filesystem::path& frame_dir, double fps,
                     int scale, const std::filesystem::path& iframe_sidecar);

constexpr int kFallbackIframeInterval = 48;

// Uniform chunks of round(chunk_seconds * fps) frames, remainder in the last.
void chunkify(ChunkManifest& m, double chunk_seconds);

// Groups of at most `iframes_per_group` consecutive I-frames; boundaries are
// snapped to the chunks containing the boundary I-frames.
void group_long_video(ChunkManifest& m, int iframes_per_group);

void write_manifest(const ChunkManifest& m, const std::filesystem::path& path);
ChunkManifest read_manifest(const std::filesystem::path& path);

// Lazy HR/LR frame loader with per-frame caching. LR frames are the bicubic
// 1/scale downsample of the center-cropped HR frame.
class FrameSet {
public:
    static std::shared_ptr<FrameSet> open(const ChunkManifest& manifest);
    // Treats a plain directory of images as one frame set (meta tasks,
    // pretraining image sets).
    static std::shared_ptr<FrameSet> open_dir(
        const std::filesystem::path& dir, int scale);

    int frame_count() const { return static_cast<int>(files_.size()); }
    int hr_h() const { return hr_h_; }
    int hr_w() const { return hr_w_; }
    int scale() const { return scale_; }

    Tensor hr(int frame);  // (1, 3, hr_h, hr_w)
    Tensor lr(int frame);  // (1, 3, hr_h/scale, hr_w/scale)

private:
    FrameSet() = default;
    Tensor load_cropped(int frame);

    std::filesystem::path dir_;
    std::vector<std::string> files_;
    int hr_h_ = 0, hr_w_ = 0, scale_ = 2;
    std::vector<std::optional<Tensor>> hr_cache_;
    std::vector<std::optional<Tensor>> lr_cache_;
    std::mutex mu_;
};

}  // namespace chunksr::data
