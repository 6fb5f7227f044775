#include "chunksr/synth.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "chunksr/codec.hpp"
#include "chunksr/image_io.hpp"
#include "chunksr/rng.hpp"

namespace chunksr::synth {
namespace {

namespace fs = std::filesystem;
constexpr double kTau = 6.283185307179586;

struct Texture {
    int family = 0;  // 0 grating, 1 checker, 2 blobs
    double fx = 0.08, fy = 0.03;      // cycles per pixel
    double f2 = 2.3;                  // harmonic ratio
    double phase[3] = {0, 2.1, 4.2};  // per-channel
    double vx = 0.4, vy = 0.2;        // pixels per frame
    double amp1 = 0.22, amp2 = 0.14;
    // high-frequency island that drifts slowly; the hard region for SR.
    // Kept just under the LR Nyquist rate at x2 so it stays learnable.
    double ix = 0.5, iy = 0.5, ir = 0.22;
    double ifreq = 0.21;
    double island_vx = 0.003, island_vy = 0.002;

    double value(int c, double x, double y, double t, int w, int h) const {
        const double px = x + vx * t;
        const double py = y + vy * t;
        double v = 0.5;
        switch (family) {
            case 0: {
                v += amp1 * std::sin(kTau * (fx * px + fy * py) + phase[c]);
                v += amp2 * std::sin(kTau * (f2 * fx * px - 1.3 * fy * py) +
                                     phase[c] * 1.7 + 1.1);
                break;
            }
            case 1: {
                const double u = std::sin(kTau * fx * px + phase[c] * 0.3);
                const double s = std::sin(kTau * fy * py + phase[c] * 0.5);
                v += 0.34 * std::tanh(3.0 * u * s);
                v += amp2 * std::sin(kTau * f2 * fx * (px + py) + phase[c]);
                break;
            }
            case 2: {
                v = 0.35 + 0.2 * (x / w) + 0.1 * (y / h);
                for (int b = 0; b < 3; ++b) {
                    const double bx =
                        w * (0.2 + 0.3 * b) + 6.0 * std::sin(0.13 * t + b);
                    const double by =
                        h * (0.25 + 0.25 * b) + 5.0 * std::cos(0.11 * t + 2 * b);
                    const double d2 = (x - bx) * (x - bx) + (y - by) * (y - by);
                    const double sig = 20.0 + 12.0 * b;
                    v += (0.25 - 0.06 * c) * std::exp(-d2 / sig) *
                         std::cos(phase[c] + b);
                }
                break;
            }
        }
        // island: fine checker near the LR Nyquist rate
        const double dx = x / w - (ix + island_vx * t);
        const double dy = y / h - (iy + island_vy * t);
        const double d = std::sqrt(dx * dx + dy * dy);
        if (d < ir) {
            const double fade = 0.5 * (1.0 + std::cos(3.14159265 * d / ir));
            v += 0.28 * fade * std::sin(kTau * ifreq * px + phase[c]) *
                 std::sin(kTau * ifreq * 0.8 * py - phase[c]);
        }
        return std::min(1.0, std::max(0.0, v));
    }
};

Texture random_texture(Rng& rng, int family) {
    Texture t;
    t.family = family;
    t.fx = 0.05 + 0.06 * rng.uniform();
    t.fy = 0.02 + 0.05 * rng.uniform();
    t.f2 = 1.9 + 0.9 * rng.uniform();
    for (int c = 0; c < 3; ++c) t.phase[c] = kTau * rng.uniform();
    t.vx = 0.2 + 0.5 * rng.uniform();
    t.vy = 0.1 + 0.4 * rng.uniform();
    t.ix = 0.3 + 0.4 * rng.uniform();
    t.iy = 0.3 + 0.4 * rng.uniform();
    t.ifreq = 0.17 + 0.06 * rng.uniform();
    return t;
}

img::ImageU8 render(const Texture& tex, int w, int h, double t) {
    img::ImageU8 im;
    im.w = w;
    im.h = h;
    im.rgb.resize(static_cast<size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = tex.value(c, x, y, t, w, h);
                im.rgb[(static_cast<size_t>(y) * w + x) * 3 + c] =
                    static_cast<uint8_t>(std::lround(v * 255.0));
            }
        }
    }
    return im;
}

std::string frame_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%05d.png", i);
    return buf;
}

}  // namespace

void video(const fs::path& dir, const VideoSpec& spec) {
    fs::create_directories(dir);
    Rng rng(mix_seed(spec.seed, 0x76696400));
    Texture base = random_texture(rng, 0);
    const int total = spec.frames_per_chunk * spec.chunks;
    for (int chunk = 0; chunk < spec.chunks; ++chunk) {
        // neighboring chunks share the texture with drifted parameters
        Texture tex = base;
        const double g = 1.0 + spec.drift * chunk;
        tex.fx = base.fx * g;
        tex.fy = base.fy * (1.0 + 0.6 * spec.drift * chunk);
        tex.ifreq = base.ifreq * (1.0 + 0.3 * spec.drift * chunk);
        for (int c = 0; c < 3; ++c) {
            tex.phase[c] = base.phase[c] + 0.35 * chunk;
        }
        tex.ix = base.ix + 0.015 * chunk;
        tex.iy = base.iy + 0.010 * chunk;
        for (int f = 0; f < spec.frames_per_chunk; ++f) {
            const int frame = chunk * spec.frames_per_chunk + f;
            const img::ImageU8 im =
                render(tex, spec.width, spec.height, static_cast<double>(frame));
            img::write_png(im, dir / frame_name(frame));
        }
    }
    std::string sidecar;
    for (int k = 0; k < total; k += spec.iframe_interval) {
        sidecar += std::to_string(k) + "\n";
    }
    codec::atomic_write(dir / "iframes.txt", sidecar);
}

void meta_tasks(const fs::path& dir, int tasks, int frames, int width,
                int height, uint64_t seed) {
    for (int t = 0; t < tasks; ++t) {
        Rng rng(mix_seed(seed, 0x7461736bull, t));
        const Texture tex = random_texture(rng, t % 3);
        char name[32];
        std::snprintf(name, sizeof(name), "task_%02d", t);
        const fs::path task_dir = dir / name;
        fs::create_directories(task_dir);
        for (int f = 0; f < frames; ++f) {
            const img::ImageU8 im =
                render(tex, width, height, static_cast<double>(f));
            img::write_png(im, task_dir / frame_name(f));
        }
    }
}

void still_images(const fs::path& dir, int count, int width, int height,
                  uint64_t seed) {
    fs::create_directories(dir);
    for (int i = 0; i < count; ++i) {
        Rng rng(mix_seed(seed, 0x696d67ull, i));
        img::ImageU8 im;
        im.w = width;
        im.h = height;
        im.rgb.resize(static_cast<size_t>(width) * height * 3);
        const double gx = rng.uniform(-0.4f, 0.4f);
        const double gy = rng.uniform(-0.4f, 0.4f);
        struct Blob {
            double x, y, s, a[3];
        };
        std::vector<Blob> blobs(6);
        for (auto& b : blobs) {
            b.x = width * rng.uniform();
            b.y = height * rng.uniform();
            b.s = 30.0 + 250.0 * rng.uniform();
            for (int c = 0; c < 3; ++c) b.a[c] = rng.uniform(-0.35f, 0.35f);
        }
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    double v = 0.5 + gx * (static_cast<double>(x) / width - 0.5) +
                               gy * (static_cast<double>(y) / height - 0.5);
                    for (const auto& b : blobs) {
                        const double d2 = (x - b.x) * (x - b.x) +
                                          (y - b.y) * (y - b.y);
                        v += b.a[c] * std::exp(-d2 / b.s);
                    }
                    v = std::min(1.0, std::max(0.0, v));
                    im.rgb[(static_cast<size_t>(y) * width + x) * 3 + c] =
                        static_cast<uint8_t>(std::lround(v * 255.0));
                }
            }
        }
        char name[32];
        std::snprintf(name, sizeof(name), "image_%03d.png", i);
        img::write_png(im, dir / name);
    }
}

}  // namespace chunksr::synth
