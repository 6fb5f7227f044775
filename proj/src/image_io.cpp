#include "chunksr/image_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "chunksr/codec.hpp"

namespace chunksr::img {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

uint32_t be32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) |
           (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

void put_be32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

const uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace

ImageU8 read_png(const fs::path& path) {
    const std::string buf = read_file(path);
    if (buf.size() < 8 || std::memcmp(buf.data(), kPngSig, 8) != 0) {
        throw std::runtime_error(path.string() + ": not a PNG file");
    }
    size_t pos = 8;
    uint32_t w = 0, h = 0;
    int bit_depth = 0, color_type = -1;
    std::string idat;
    bool done = false;
    while (!done) {
        if (pos + 8 > buf.size()) {
            throw std::runtime_error(path.string() + ": truncated PNG");
        }
        const uint32_t len =
            be32(reinterpret_cast<const uint8_t*>(buf.data() + pos));
        const std::string type = buf.substr(pos + 4, 4);
        if (pos + 12 + len > buf.size()) {
            throw std::runtime_error(path.string() + ": truncated PNG chunk");
        }
        const char* data = buf.data() + pos + 8;
        if (type == "IHDR") {
            if (len != 13) throw std::runtime_error("bad IHDR");
            const uint8_t* p = reinterpret_cast<const uint8_t*>(data);
            w = be32(p);
            h = be32(p + 4);
            bit_depth = p[8];
            color_type = p[9];
            if (bit_depth != 8 ||
                (color_type != 0 && color_type != 2 && color_type != 6)) {
                throw std::runtime_error(path.string() +
                                         ": unsupported PNG format (need 8-bit "
                                         "gray/RGB/RGBA)");
            }
            if (p[12] != 0) {
                throw std::runtime_error(path.string() +
                                         ": interlaced PNG unsupported");
            }
        } else if (type == "IDAT") {
            idat.append(data, len);
        } else if (type == "IEND") {
            done = true;
        }
        pos += 12 + len;
    }
    if (w == 0 || h == 0 || idat.empty()) {
        throw std::runtime_error(path.string() + ": empty PNG");
    }
    const int ch = color_type == 2 ? 3 : (color_type == 6 ? 4 : 1);
    const size_t stride = static_cast<size_t>(w) * ch;
    std::vector<uint8_t> raw((stride + 1) * h);
    uLongf raw_len = raw.size();
    if (uncompress(raw.data(), &raw_len,
                   reinterpret_cast<const Bytef*>(idat.data()),
                   idat.size()) != Z_OK ||
        raw_len != raw.size()) {
        throw std::runtime_error(path.string() + ": PNG inflate failed");
    }
    // unfilter
    std::vector<uint8_t> px(stride * h);
    for (uint32_t y = 0; y < h; ++y) {
        const uint8_t filter = raw[(stride + 1) * y];
        const uint8_t* src = raw.data() + (stride + 1) * y + 1;
        uint8_t* dst = px.data() + stride * y;
        const uint8_t* up = y > 0 ? px.data() + stride * (y - 1) : nullptr;
        for (size_t x = 0; x < stride; ++x) {
            const int a = x >= static_cast<size_t>(ch) ? dst[x - ch] : 0;
            const int b = up ? up[x] : 0;
            const int c = (up && x >= static_cast<size_t>(ch)) ? up[x - ch] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default:
                    throw std::runtime_error(path.string() +
                                             ": bad PNG filter type");
            }
            dst[x] = static_cast<uint8_t>(v & 0xff);
        }
    }
    ImageU8 img;
    img.w = static_cast<int>(w);
    img.h = static_cast<int>(h);
    img.rgb.resize(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < static_cast<size_t>(w) * h; ++i) {
        if (ch == 1) {
            img.rgb[i * 3] = img.rgb[i * 3 + 1] = img.rgb[i * 3 + 2] = px[i];
        } else {
            img.rgb[i * 3] = px[i * ch];
            img.rgb[i * 3 + 1] = px[i * ch + 1];
            img.rgb[i * 3 + 2] = px[i * ch + 2];
        }
    }
    return img;
}

void write_png(const ImageU8& img, const fs::path& path) {
    const size_t stride = static_cast<size_t>(img.w) * 3;
    std::vector<uint8_t> raw((stride + 1) * img.h);
    for (int y = 0; y < img.h; ++y) {
        raw[(stride + 1) * y] = 0;  // filter none
        std::memcpy(raw.data() + (stride + 1) * y + 1,
                    img.rgb.data() + stride * y, stride);
    }
    uLongf bound = compressBound(raw.size());
    std::vector<uint8_t> comp(bound);
    if (compress2(comp.data(), &bound, raw.data(), raw.size(), 6) != Z_OK) {
        throw std::runtime_error("PNG deflate failed");
    }
    comp.resize(bound);

    std::string out(reinterpret_cast<const char*>(kPngSig), 8);
    auto chunk = [&out](const char* type, const std::string& data) {
        put_be32(out, static_cast<uint32_t>(data.size()));
        std::string body = std::string(type, 4) + data;
        out += body;
        put_be32(out, static_cast<uint32_t>(
                          crc32(0, reinterpret_cast<const Bytef*>(body.data()),
                                static_cast<uInt>(body.size()))));
    };
    std::string ihdr;
    put_be32(ihdr, static_cast<uint32_t>(img.w));
    put_be32(ihdr, static_cast<uint32_t>(img.h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    chunk("IHDR", ihdr);
    chunk("IDAT",
          std::string(reinterpret_cast<const char*>(comp.data()), comp.size()));
    chunk("IEND", "");
    codec::atomic_write(path, out);
}

ImageU8 read_ppm(const fs::path& path) {
    const std::string buf = read_file(path);
    size_t pos = 0;
    auto token = [&]() {
        while (pos < buf.size() &&
               (std::isspace(static_cast<unsigned char>(buf[pos])) ||
                buf[pos] == '#')) {
            if (buf[pos] == '#') {
                while (pos < buf.size() && buf[pos] != '\n') ++pos;
            } else {
                ++pos;
            }
        }
        const size_t start = pos;
        while (pos < buf.size() &&
               !std::isspace(static_cast<unsigned char>(buf[pos]))) {
            ++pos;
        }
        return buf.substr(start, pos - start);
    };
    if (token() != "P6") {
        throw std::runtime_error(path.string() + ": not a binary PPM (P6)");
    }
    ImageU8 img;
    img.w = std::stoi(token());
    img.h = std::stoi(token());
    const int maxval = std::stoi(token());
    if (maxval != 255) {
        throw std::runtime_error(path.string() + ": PPM maxval must be 255");
    }
    ++pos;  // single whitespace after maxval
    const size_t need = static_cast<size_t>(img.w) * img.h * 3;
    if (buf.size() - pos < need) {
        throw std::runtime_error(path.string() + ": truncated PPM");
    }
    img.rgb.assign(buf.begin() + pos, buf.begin() + pos + need);
    return img;
}

void write_ppm(const ImageU8& img, const fs::path& path) {
    std::string out = "P6\n" + std::to_string(img.w) + " " +
                      std::to_string(img.h) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
    codec::atomic_write(path, out);
}

ImageU8 read_image(const fs::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".png") return read_png(path);
    if (ext == ".ppm") return read_ppm(path);
    // magic-byte fallback
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char sig[2] = {0, 0};
    in.read(sig, 2);
    if (sig[0] == 'P' && sig[1] == '6') return read_ppm(path);
    return read_png(path);
}

void write_image(const ImageU8& img, const fs::path& path) {
    if (path.extension() == ".ppm") {
        write_ppm(img, path);
    } else {
        write_png(img, path);
    }
}

Tensor to_tensor(const ImageU8& img) {
    Tensor t(1, 3, img.h, img.w);
    const float k = 1.0f / 255.0f;
    for (int c = 0; c < 3; ++c) {
        float* p = t.plane(0, c);
        for (int i = 0; i < img.h * img.w; ++i) {
            p[i] = static_cast<float>(img.rgb[static_cast<size_t>(i) * 3 + c]) *
                   k;
        }
    }
    return t;
}

ImageU8 from_tensor(const Tensor& t, int image_index) {
    if (t.c != 3) throw std::invalid_argument("from_tensor: need 3 channels");
    ImageU8 img;
    img.w = t.w;
    img.h = t.h;
    img.rgb.resize(static_cast<size_t>(t.w) * t.h * 3);
    for (int c = 0; c < 3; ++c) {
        const float* p = t.plane(image_index, c);
        for (int i = 0; i < t.h * t.w; ++i) {
            const float v = std::min(1.0f, std::max(0.0f, p[i]));
            img.rgb[static_cast<size_t>(i) * 3 + c] =
                static_cast<uint8_t>(std::lround(v * 255.0f));
        }
    }
    return img;
}

}  // namespace chunksr::img
