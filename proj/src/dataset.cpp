#include "chunksr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "chunksr/codec.hpp"
#include "chunksr/image_io.hpp"
#include "chunksr/ops.hpp"

namespace chunksr::data {
namespace {

namespace fs = std::filesystem;

bool is_frame_file(const fs::path& p) {
    const auto ext = p.extension().string();
    return ext == ".png" || ext == ".ppm";
}

std::vector<std::string> list_frames(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("frame directory does not exist: " +
                                 dir.string());
    }
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && is_frame_file(e.path())) {
            files.push_back(e.path().filename().string());
        }
    }
    if (files.empty()) {
        throw std::runtime_error("no decodable frames (*.png, *.ppm) in " +
                                 dir.string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<int> read_sidecar(const fs::path& path, int frame_count) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open I-frame index file " +
                                 path.string());
    }
    std::vector<int> idx;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        idx.push_back(std::stoi(line));
    }
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= frame_count) {
            throw std::runtime_error("I-frame index " + std::to_string(idx[i]) +
                                     " out of range [0, " +
                                     std::to_string(frame_count) + ")");
        }
        if (i > 0 && idx[i] <= idx[i - 1]) {
            throw std::runtime_error(
                "I-frame index list is not strictly ascending at entry " +
                std::to_string(i));
        }
    }
    return idx;
}

void assign_iframe_chunks(ChunkManifest& m) {
    m.iframe_chunk.clear();
    for (int k : m.iframes) {
        m.iframe_chunk.push_back(m.chunk_of_frame(k));
    }
}

}  // namespace

int ChunkManifest::chunk_of_frame(int frame) const {
    for (size_t i = 0; i < chunks.size(); ++i) {
        if (frame >= chunks[i].begin && frame < chunks[i].end) {
            return static_cast<int>(i);
        }
    }
    throw std::out_of_range("frame " + std::to_string(frame) +
                            " not covered by any chunk");
}

std::vector<int> ChunkManifest::chunk_iframes(int chunk_id) const {
    std::vector<int> out;
    for (size_t m = 0; m < iframes.size(); ++m) {
        if (iframe_chunk[m] == chunk_id) out.push_back(static_cast<int>(m));
    }
    return out;
}

ChunkRange ChunkManifest::iframe_range(int m) const {
    const int k = iframes[m];
    const int chunk_end = chunks[iframe_chunk[m]].end;
    int end = chunk_end;
    if (m + 1 < static_cast<int>(iframes.size())) {
        end = std::min(end, iframes[m + 1]);
    }
    return {k, end};
}

ChunkManifest ingest(const fs::path& frame_dir, double fps, int scale,
                     const fs::path& iframe_sidecar) {
    if (scale < 2 || scale > 4) {
        throw std::invalid_argument("ingest: scale must be 2, 3 or 4");
    }
    if (fps <= 0) throw std::invalid_argument("ingest: fps must be positive");
    ChunkManifest m;
    m.frame_dir = frame_dir.string();
    m.files = list_frames(frame_dir);
    m.fps = fps;
    m.scale = scale;

    // decode every frame once: validates decodability and dimensions
    int h = -1, w = -1;
    for (const auto& f : m.files) {
        img::ImageU8 im;
        try {
            im = img::read_image(frame_dir / f);
        } catch (const std::exception& e) {
            throw std::runtime_error("undecodable frame " + f + ": " +
                                     e.what());
        }
        if (h < 0) {
            h = im.h;
            w = im.w;
        } else if (im.h != h || im.w != w) {
            throw std::runtime_error(
                "frame " + f + " has dimensions " + std::to_string(im.w) + "x" +
                std::to_string(im.h) + ", expected " + std::to_string(w) + "x" +
                std::to_string(h));
        }
    }
    m.hr_h = h - h % scale;
    m.hr_w = w - w % scale;
    if (m.hr_h < scale || m.hr_w < scale) {
        throw std::runtime_error("frames too small after cropping to scale");
    }

    if (!iframe_sidecar.empty()) {
        m.iframes = read_sidecar(iframe_sidecar, m.frame_count());
        if (m.iframes.empty() || m.iframes[0] != 0) {
            // frame 0 anchors the first chunk
            m.iframes.insert(m.iframes.begin(), 0);
        }
    } else {
        for (int k = 0; k < m.frame_count(); k += kFallbackIframeInterval) {
            m.iframes.push_back(k);
        }
    }

    m.chunks = {{0, m.frame_count()}};
    assign_iframe_chunks(m);
    m.groups = {{0, 1}};
    return m;
}

void chunkify(ChunkManifest& m, double chunk_seconds) {
    if (chunk_seconds <= 0) {
        throw std::invalid_argument("chunkify: chunk_seconds must be positive");
    }
    const int T = m.frame_count();
    int len = static_cast<int>(std::lround(chunk_seconds * m.fps));
    if (len < 1) len = 1;
    m.chunks.clear();
    for (int begin = 0; begin < T; begin += len) {
        m.chunks.push_back({begin, std::min(begin + len, T)});
    }
    assign_iframe_chunks(m);
    m.groups = {{0, static_cast<int>(m.chunks.size())}};
}

void group_long_video(ChunkManifest& m, int iframes_per_group) {
    if (iframes_per_group < 1) {
        throw std::invalid_argument("group_long_video: need >= 1 I-frame");
    }
    m.groups.clear();
    const int M = static_cast<int>(m.iframes.size());
    int group_start_chunk = 0;
    for (int g = 0; g * iframes_per_group < M; ++g) {
        const int next_first = (g + 1) * iframes_per_group;
        int end_chunk;
        if (next_first >= M) {
            end_chunk = static_cast<int>(m.chunks.size());
        } else {
            // boundary snaps to the chunk containing the next group's first
            // I-frame
            end_chunk = m.iframe_chunk[next_first];
        }
        if (end_chunk <= group_start_chunk) continue;  // merged into previous
        m.groups.push_back({group_start_chunk, end_chunk});
        group_start_chunk = end_chunk;
    }
    if (m.groups.empty() ||
        m.groups.back().end < static_cast<int>(m.chunks.size())) {
        m.groups.push_back(
            {group_start_chunk, static_cast<int>(m.chunks.size())});
    }
}

void write_manifest(const ChunkManifest& m, const fs::path& path) {
    std::ostringstream out;
    out << "chunksr-manifest 1\n";
    out << "frame_dir " << m.frame_dir << "\n";
    out << "fps " << m.fps << "\n";
    out << "scale " << m.scale << "\n";
    out << "hr " << m.hr_h << " " << m.hr_w << "\n";
    out << "chunks " << m.chunks.size() << "\n";
    for (const auto& c : m.chunks) {
        out << "chunk " << c.begin << " " << c.end << "\n";
    }
    out << "iframes " << m.iframes.size() << "\n";
    for (size_t i = 0; i < m.iframes.size(); ++i) {
        out << "iframe " << m.iframes[i] << " " << m.iframe_chunk[i] << "\n";
    }
    out << "groups " << m.groups.size() << "\n";
    for (const auto& g : m.groups) {
        out << "group " << g.begin << " " << g.end << "\n";
    }
    out << "frames " << m.files.size() << "\n";
    for (const auto& f : m.files) out << "file " << f << "\n";
    codec::atomic_write(path, out.str());
}

ChunkManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open manifest " + path.string());
    }
    std::string header;
    std::getline(in, header);
    if (header != "chunksr-manifest 1") {
        throw std::runtime_error(path.string() + ": not a chunksr manifest");
    }
    ChunkManifest m;
    std::string key;
    while (in >> key) {
        if (key == "frame_dir") {
            in >> std::ws;
            std::getline(in, m.frame_dir);
        } else if (key == "fps") {
            in >> m.fps;
        } else if (key == "scale") {
            in >> m.scale;
        } else if (key == "hr") {
            in >> m.hr_h >> m.hr_w;
        } else if (key == "chunks" || key == "iframes" || key == "groups" ||
                   key == "frames") {
            size_t n;
            in >> n;  // counts are advisory; entries carry their own tags
        } else if (key == "chunk") {
            ChunkRange r;
            in >> r.begin >> r.end;
            m.chunks.push_back(r);
        } else if (key == "iframe") {
            int k, c;
            in >> k >> c;
            m.iframes.push_back(k);
            m.iframe_chunk.push_back(c);
        } else if (key == "group") {
            ChunkRange r;
            in >> r.begin >> r.end;
            m.groups.push_back(r);
        } else if (key == "file") {
            in >> std::ws;
            std::string f;
            std::getline(in, f);
            m.files.push_back(f);
        } else {
            throw std::runtime_error(path.string() + ": unknown manifest key '" +
                                     key + "'");
        }
    }
    if (m.files.empty() || m.chunks.empty()) {
        throw std::runtime_error(path.string() + ": incomplete manifest");
    }
    return m;
}

std::shared_ptr<FrameSet> FrameSet::open(const ChunkManifest& manifest) {
    auto fsP = std::shared_ptr<FrameSet>(new FrameSet());
    fsP->dir_ = manifest.frame_dir;
    fsP->files_ = manifest.files;
    fsP->hr_h_ = manifest.hr_h;
    fsP->hr_w_ = manifest.hr_w;
    fsP->scale_ = manifest.scale;
    fsP->hr_cache_.resize(fsP->files_.size());
    fsP->lr_cache_.resize(fsP->files_.size());
    return fsP;
}

std::shared_ptr<FrameSet> FrameSet::open_dir(const fs::path& dir, int scale) {
    const ChunkManifest m = ingest(dir, 1.0, scale, {});
    return open(m);
}

Tensor FrameSet::load_cropped(int frame) {
    const img::ImageU8 im = img::read_image(fs::path(dir_) / files_[frame]);
    Tensor full = img::to_tensor(im);
    if (full.h == hr_h_ && full.w == hr_w_) return full;
    if (full.h < hr_h_ || full.w < hr_w_) {
        throw std::runtime_error("frame " + files_[frame] +
                                 " smaller than manifest dimensions");
    }
    const int oy = (full.h - hr_h_) / 2;
    const int ox = (full.w - hr_w_) / 2;
    Tensor out(1, 3, hr_h_, hr_w_);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < hr_h_; ++y) {
            std::copy_n(full.plane(0, c) +
                            static_cast<size_t>(y + oy) * full.w + ox,
                        hr_w_, out.plane(0, c) + static_cast<size_t>(y) * hr_w_);
        }
    }
    return out;
}

Tensor FrameSet::hr(int frame) {
    if (frame < 0 || frame >= frame_count()) {
        throw std::out_of_range("frame " + std::to_string(frame) +
                                " out of range");
    }
    std::lock_guard<std::mutex> lk(mu_);
    if (!hr_cache_[frame]) hr_cache_[frame] = load_cropped(frame);
    return *hr_cache_[frame];
}

Tensor FrameSet::lr(int frame) {
    Tensor h = hr(frame);
    std::lock_guard<std::mutex> lk(mu_);
    if (!lr_cache_[frame]) {
        lr_cache_[frame] =
            ops::bicubic_resize_to(h, hr_h_ / scale_, hr_w_ / scale_);
    }
    return *lr_cache_[frame];
}

}  // namespace chunksr::data
