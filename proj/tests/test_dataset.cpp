#include <filesystem>
#include <fstream>

#include "chunksr/codec.hpp"
#include "chunksr/dataset.hpp"
#include "chunksr/image_io.hpp"
#include "chunksr/ops.hpp"
#include "chunksr/rng.hpp"
#include "chunksr/synth.hpp"
#include "doctest.h"

using namespace chunksr;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    const fs::path dir =
        fs::temp_directory_path() / (std::string("chunksr_data_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_tiny_frames(const fs::path& dir, int count, int w = 8, int h = 8,
                       bool ppm_mix = false) {
    fs::create_directories(dir);
    Rng rng(4);
    for (int i = 0; i < count; ++i) {
        img::ImageU8 im;
        im.w = w;
        im.h = h;
        im.rgb.resize(static_cast<size_t>(w) * h * 3);
        for (auto& b : im.rgb) b = static_cast<uint8_t>(rng.uniform_int(256));
        char name[32];
        std::snprintf(name, sizeof(name), "f%05d.%s", i,
                      ppm_mix && i % 2 ? "ppm" : "png");
        img::write_image(im, dir / name);
    }
}

}  // namespace

TEST_CASE("image io: png and ppm round trips") {
    const fs::path dir = temp_dir("img");
    Rng rng(9);
    img::ImageU8 im;
    im.w = 13;
    im.h = 7;
    im.rgb.resize(13 * 7 * 3);
    for (auto& b : im.rgb) b = static_cast<uint8_t>(rng.uniform_int(256));

    img::write_png(im, dir / "a.png");
    const auto back = img::read_png(dir / "a.png");
    CHECK(back.w == im.w);
    CHECK(back.h == im.h);
    CHECK(back.rgb == im.rgb);

    img::write_ppm(im, dir / "a.ppm");
    const auto back2 = img::read_ppm(dir / "a.ppm");
    CHECK(back2.rgb == im.rgb);

    // tensor conversion: round trip through [0,1] floats is exact for u8 data
    const Tensor t = img::to_tensor(im);
    const auto back3 = img::from_tensor(t);
    CHECK(back3.rgb == im.rgb);

    codec::atomic_write(dir / "bad.png", "junk");
    CHECK_THROWS_AS(img::read_png(dir / "bad.png"), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("ingest: frame count arithmetic, fallback I-frames, errors") {
    const fs::path dir = temp_dir("ingest");

    // 30 fps, 45 s -> 1350 frames (tiny 4x4 frames keep this fast)
    write_tiny_frames(dir / "v", 1350, 4, 4);
    auto m = data::ingest(dir / "v", 30.0, 2, {});
    CHECK(m.frame_count() == 1350);
    CHECK(static_cast<int>(std::lround(45.0 * m.fps)) == 1350);

    // fallback interval 48 on 96 frames -> {0, 48}
    write_tiny_frames(dir / "v2", 96, 4, 4);
    const auto m2 = data::ingest(dir / "v2", 30.0, 2, {});
    CHECK(m2.iframes == std::vector<int>{0, 48});

    CHECK_THROWS_AS(data::ingest(dir / "missing", 30.0, 2, {}),
                    std::runtime_error);
    fs::create_directories(dir / "empty");
    CHECK_THROWS_WITH_AS(data::ingest(dir / "empty", 30.0, 2, {}),
                         doctest::Contains("no decodable frames"),
                         std::runtime_error);

    write_tiny_frames(dir / "v3", 3, 4, 4);
    codec::atomic_write(dir / "v3" / "broken.png", "not really a png");
    CHECK_THROWS_WITH_AS(data::ingest(dir / "v3", 30.0, 2, {}),
                         doctest::Contains("undecodable"), std::runtime_error);

    write_tiny_frames(dir / "v4", 10, 4, 4);
    codec::atomic_write(dir / "side.txt", "0\n5\n3\n");
    CHECK_THROWS_WITH_AS(data::ingest(dir / "v4", 30.0, 2, dir / "side.txt"),
                         doctest::Contains("ascending"), std::runtime_error);
    codec::atomic_write(dir / "side2.txt", "2\n5\n");
    const auto m4 = data::ingest(dir / "v4", 30.0, 2, dir / "side2.txt");
    CHECK(m4.iframes == std::vector<int>{0, 2, 5});  // frame 0 always added
    fs::remove_all(dir);
}

TEST_CASE("ingest is idempotent") {
    const fs::path dir = temp_dir("idem");
    write_tiny_frames(dir / "v", 12, 6, 6, true);
    const auto a = data::ingest(dir / "v", 24.0, 3, {});
    const auto b = data::ingest(dir / "v", 24.0, 3, {});
    CHECK(a.files == b.files);
    CHECK(a.hr_h == b.hr_h);
    CHECK(a.hr_w == b.hr_w);
    CHECK(a.iframes == b.iframes);
    // 6x6 at scale 3 stays 6x6
    CHECK(a.hr_h == 6);
    fs::remove_all(dir);
}

TEST_CASE("chunkify: paper chunk counts and remainder rule") {
    data::ChunkManifest m;
    m.fps = 30.0;
    m.files.assign(1350, "x");  // 45 s at 30 fps
    m.iframes = {0};
    m.chunks = {{0, 1350}};
    data::chunkify(m, 5.0);
    CHECK(m.chunks.size() == 9);
    for (const auto& c : m.chunks) CHECK(c.end - c.begin == 150);

    m.files.assign(3600, "x");  // 2 min
    data::chunkify(m, 5.0);
    CHECK(m.chunks.size() == 24);

    // 7 frames in chunks of 5 -> 5 and 2
    data::ChunkManifest s;
    s.fps = 1.0;
    s.files.assign(7, "x");
    s.iframes = {0};
    s.chunks = {{0, 7}};
    data::chunkify(s, 5.0);
    REQUIRE(s.chunks.size() == 2);
    CHECK(s.chunks[0].end - s.chunks[0].begin == 5);
    CHECK(s.chunks[1].end - s.chunks[1].begin == 2);

    // chunk ranges partition [0, T)
    int prev = 0;
    for (const auto& c : s.chunks) {
        CHECK(c.begin == prev);
        prev = c.end;
    }
    CHECK(prev == 7);
}

TEST_CASE("iframe/chunk consistency and ranges") {
    data::ChunkManifest m;
    m.fps = 4.0;
    m.files.assign(24, "x");
    m.iframes = {0, 5, 10, 15, 20};
    m.chunks = {{0, 24}};
    data::chunkify(m, 2.0);  // chunks of 8
    REQUIRE(m.chunks.size() == 3);
    CHECK(m.iframe_chunk == std::vector<int>{0, 0, 1, 1, 2});
    for (size_t i = 0; i < m.iframes.size(); ++i) {
        CHECK(m.chunk_of_frame(m.iframes[i]) == m.iframe_chunk[i]);
    }
    // range of I-frame 1 (frame 5) is clipped at its chunk end (8)
    const auto r = m.iframe_range(1);
    CHECK(r.begin == 5);
    CHECK(r.end == 8);
    // range of I-frame 2 (frame 10) ends at the next I-frame
    CHECK(m.iframe_range(2).end == 15);
}

TEST_CASE("group_long_video: paper example and remainder") {
    data::ChunkManifest m;
    m.fps = 1.0;
    m.files.assign(310, "x");
    for (int k = 0; k < 300; k += 10) m.iframes.push_back(k);  // 30 I-frames
    m.chunks = {{0, 310}};
    data::chunkify(m, 50.0);  // 7 chunks of 50 (last 10)
    data::group_long_video(m, 30);
    REQUIRE(m.groups.size() == 1);
    CHECK(m.groups[0].begin == 0);
    CHECK(m.groups[0].end == static_cast<int>(m.chunks.size()));

    // 31 I-frames -> groups of 30 and 1
    m.iframes.push_back(305);
    data::chunkify(m, 50.0);
    data::group_long_video(m, 30);
    REQUIRE(m.groups.size() == 2);
    CHECK(m.groups[0].end == m.iframe_chunk[30]);
    CHECK(m.groups[1].end == static_cast<int>(m.chunks.size()));
    // groups partition the chunk list
    CHECK(m.groups[0].begin == 0);
    CHECK(m.groups[1].begin == m.groups[0].end);
}

TEST_CASE("manifest round trip") {
    const fs::path dir = temp_dir("manifest");
    write_tiny_frames(dir / "v", 20, 8, 6);
    auto m = data::ingest(dir / "v", 10.0, 2, {});
    data::chunkify(m, 0.5);
    data::group_long_video(m, 2);
    data::write_manifest(m, dir / "m.txt");
    const auto r = data::read_manifest(dir / "m.txt");
    CHECK(r.files == m.files);
    CHECK(r.fps == m.fps);
    CHECK(r.scale == m.scale);
    CHECK(r.hr_h == m.hr_h);
    CHECK(r.hr_w == m.hr_w);
    CHECK(r.iframes == m.iframes);
    CHECK(r.iframe_chunk == m.iframe_chunk);
    REQUIRE(r.chunks.size() == m.chunks.size());
    for (size_t i = 0; i < m.chunks.size(); ++i) {
        CHECK(r.chunks[i].begin == m.chunks[i].begin);
        CHECK(r.chunks[i].end == m.chunks[i].end);
    }
    REQUIRE(r.groups.size() == m.groups.size());
    // writing the read manifest reproduces the file byte-for-byte
    data::write_manifest(r, dir / "m2.txt");
    std::ifstream a(dir / "m.txt"), b(dir / "m2.txt");
    const std::string sa((std::istreambuf_iterator<char>(a)),
                         std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(b)),
                         std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    fs::remove_all(dir);
}

TEST_CASE("FrameSet: LR generation delegates to bicubic_resize and caches") {
    const fs::path dir = temp_dir("frames");
    synth::VideoSpec spec;
    spec.width = 38;  // crops to 38 -> 38 % 2 == 0
    spec.height = 30;
    spec.chunks = 1;
    spec.frames_per_chunk = 3;
    synth::video(dir / "v", spec);
    auto m = data::ingest(dir / "v", 8.0, 2, {});
    auto fsrc = data::FrameSet::open(m);
    const Tensor hr = fsrc->hr(1);
    CHECK(hr.h == 30);
    CHECK(hr.w == 38);
    const Tensor lr1 = fsrc->lr(1);
    CHECK(lr1.h == 15);
    CHECK(lr1.w == 19);
    const Tensor want = ops::bicubic_resize_to(hr, 15, 19);
    CHECK(lr1.data == want.data);
    const Tensor lr2 = fsrc->lr(1);  // cached copy is bit-identical
    CHECK(lr1.data == lr2.data);
    fs::remove_all(dir);
}

TEST_CASE("FrameSet: center crop to multiples of scale") {
    const fs::path dir = temp_dir("crop");
    write_tiny_frames(dir / "v", 2, 11, 9);
    const auto m = data::ingest(dir / "v", 1.0, 2, {});
    CHECK(m.hr_w == 10);
    CHECK(m.hr_h == 8);
    auto fsrc = data::FrameSet::open(m);
    const Tensor hr = fsrc->hr(0);
    CHECK(hr.w == 10);
    CHECK(hr.h == 8);
    // crop matches manual center crop of the raw image
    const img::ImageU8 raw = img::read_image(dir / "v" / m.files[0]);
    const Tensor full = img::to_tensor(raw);
    CHECK(hr.at(0, 1, 0, 0) == full.at(0, 1, 0, 0));  // oy = (9-8)/2 = 0
    CHECK(hr.at(0, 1, 0, 9) == full.at(0, 1, 0, 9));  // ox = (11-10)/2 = 0
    fs::remove_all(dir);
}
