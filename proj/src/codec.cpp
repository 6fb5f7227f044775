#include "chunksr/codec.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace chunksr::codec {
namespace {

namespace fs = std::filesystem;

void put_u32(std::string& out, uint32_t v) {
    char b[4];
    b[0] = static_cast<char>(v & 0xff);
    b[1] = static_cast<char>((v >> 8) & 0xff);
    b[2] = static_cast<char>((v >> 16) & 0xff);
    b[3] = static_cast<char>((v >> 24) & 0xff);
    out.append(b, 4);
}

void put_u64(std::string& out, uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v & 0xffffffffu));
    put_u32(out, static_cast<uint32_t>(v >> 32));
}

void put_f32(std::string& out, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;
    const std::string what;

    uint32_t u32() {
        if (pos + 4 > buf.size()) {
            throw std::runtime_error(what + ": truncated file");
        }
        uint32_t v = 0;
        for (int i = 3; i >= 0; --i) {
            v = (v << 8) | static_cast<uint8_t>(buf[pos + i]);
        }
        pos += 4;
        return v;
    }
    uint64_t u64() {
        const uint64_t lo = u32();
        const uint64_t hi = u32();
        return lo | (hi << 32);
    }
    float f32() {
        const uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
};

std::string read_file(const fs::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error(std::string(what) + ": cannot open " +
                                 path.string());
    }
    std::string buf((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    return buf;
}

}  // namespace

uint64_t fnv1a64(const void* data, size_t len) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    uint64_t h = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t params_hash(const std::vector<float>& theta) {
    return fnv1a64(theta.data(), theta.size() * sizeof(float));
}

SparseDelta encode_delta(const ModelParams& parent, const ModelParams& adapted,
                         const std::vector<uint32_t>& mask_indices) {
    if (parent.arch.id != adapted.arch.id ||
        parent.arch.scale != adapted.arch.scale) {
        throw std::invalid_argument("encode_delta: arch/scale mismatch");
    }
    if (parent.theta.size() != adapted.theta.size()) {
        throw std::invalid_argument("encode_delta: parameter count mismatch");
    }
    SparseDelta d;
    d.chunk_id = adapted.chunk_id;
    d.parent_hash = params_hash(parent.theta);
    d.arch_id = static_cast<uint32_t>(parent.arch.id);
    d.scale = static_cast<uint32_t>(parent.arch.scale);
    d.param_count = static_cast<uint32_t>(parent.theta.size());
    size_t mi = 0;
    for (uint32_t i = 0; i < d.param_count; ++i) {
        while (mi < mask_indices.size() && mask_indices[mi] < i) ++mi;
        const bool in_mask = mi < mask_indices.size() && mask_indices[mi] == i;
        // bit compare: the contract is bit-exact equality outside the mask
        if (std::memcmp(&parent.theta[i], &adapted.theta[i], 4) != 0) {
            if (!in_mask) {
                throw std::invalid_argument(
                    "encode_delta: parameter " + std::to_string(i) +
                    " changed outside the mask (masking contract violated)");
            }
            d.entries.emplace_back(i, adapted.theta[i]);
        }
    }
    return d;
}

ModelParams apply_delta(const ModelParams& parent, const SparseDelta& delta) {
    if (static_cast<uint32_t>(parent.arch.id) != delta.arch_id ||
        static_cast<uint32_t>(parent.arch.scale) != delta.scale) {
        throw std::invalid_argument("apply_delta: arch/scale mismatch");
    }
    const uint64_t h = params_hash(parent.theta);
    if (h != delta.parent_hash) {
        throw std::runtime_error(
            "apply_delta: parent hash mismatch for chunk " +
            std::to_string(delta.chunk_id) +
            " (deltas must be applied in chain order)");
    }
    ModelParams out = parent;
    for (const auto& [idx, value] : delta.entries) {
        if (idx >= out.theta.size()) {
            throw std::runtime_error("apply_delta: index " +
                                     std::to_string(idx) +
                                     " out of range (P = " +
                                     std::to_string(out.theta.size()) + ")");
        }
        out.theta[idx] = value;
    }
    out.provenance = Provenance::adapted;
    out.chunk_id = delta.chunk_id;
    return out;
}

size_t delta_file_size(const SparseDelta& d) {
    return kDeltaHeaderBytes + 8 * d.entries.size();
}

void atomic_write(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw std::runtime_error("short write to " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

void write_model(const ModelParams& m, const fs::path& path) {
    std::string buf;
    buf.reserve(kModelHeaderBytes + 4 * m.theta.size() + 8);
    put_u32(buf, kModelMagic);
    put_u32(buf, kFormatVersion);
    put_u32(buf, static_cast<uint32_t>(m.arch.id));
    put_u32(buf, static_cast<uint32_t>(m.arch.scale));
    put_u32(buf, static_cast<uint32_t>(m.provenance));
    put_u32(buf, static_cast<uint32_t>(m.chunk_id));
    put_u64(buf, m.theta.size());
    for (float f : m.theta) put_f32(buf, f);
    put_u64(buf, params_hash(m.theta));
    atomic_write(path, buf);
}

ModelParams read_model(const fs::path& path) {
    const std::string buf = read_file(path, "read_model");
    Reader r{buf, 0, path.string()};
    if (r.u32() != kModelMagic) {
        throw std::runtime_error(path.string() + ": not a model file");
    }
    if (r.u32() != kFormatVersion) {
        throw std::runtime_error(path.string() + ": unsupported version");
    }
    const uint32_t arch_id = r.u32();
    const uint32_t scale = r.u32();
    const uint32_t provenance = r.u32();
    const int32_t chunk_id = static_cast<int32_t>(r.u32());
    const uint64_t p = r.u64();
    if (arch_id > 2) {
        throw std::runtime_error(path.string() + ": unknown architecture id " +
                                 std::to_string(arch_id));
    }
    ModelParams m;
    m.arch = ArchSpec::make(static_cast<ArchId>(arch_id),
                            static_cast<int>(scale));
    if (p != m.arch.param_count()) {
        throw std::runtime_error(
            path.string() + ": parameter count " + std::to_string(p) +
            " does not match " + std::string(to_string(m.arch.id)) + " x" +
            std::to_string(scale) + " (" +
            std::to_string(m.arch.param_count()) + ")");
    }
    m.theta.resize(p);
    for (uint64_t i = 0; i < p; ++i) m.theta[i] = r.f32();
    const uint64_t h = r.u64();
    if (h != params_hash(m.theta)) {
        throw std::runtime_error(path.string() + ": content hash mismatch");
    }
    m.provenance = static_cast<Provenance>(provenance);
    m.chunk_id = chunk_id;
    return m;
}

void write_delta(const SparseDelta& d, const fs::path& path) {
    std::string buf;
    buf.reserve(delta_file_size(d));
    put_u32(buf, kDeltaMagic);
    put_u32(buf, kFormatVersion);
    put_u32(buf, d.arch_id);
    put_u32(buf, d.scale);
    put_u32(buf, static_cast<uint32_t>(d.chunk_id));
    put_u32(buf, d.param_count);
    put_u32(buf, static_cast<uint32_t>(d.entries.size()));
    put_u64(buf, d.parent_hash);
    for (const auto& [idx, value] : d.entries) {
        put_u32(buf, idx);
        put_f32(buf, value);
    }
    atomic_write(path, buf);
}

SparseDelta read_delta(const fs::path& path) {
    const std::string buf = read_file(path, "read_delta");
    Reader r{buf, 0, path.string()};
    if (r.u32() != kDeltaMagic) {
        throw std::runtime_error(path.string() + ": not a delta file");
    }
    if (r.u32() != kFormatVersion) {
        throw std::runtime_error(path.string() + ": unsupported version");
    }
    SparseDelta d;
    d.arch_id = r.u32();
    d.scale = r.u32();
    d.chunk_id = static_cast<int32_t>(r.u32());
    d.param_count = r.u32();
    const uint32_t count = r.u32();
    d.parent_hash = r.u64();
    if (buf.size() != kDeltaHeaderBytes + 8 * static_cast<size_t>(count)) {
        throw std::runtime_error(path.string() + ": size mismatch");
    }
    d.entries.reserve(count);
    uint32_t prev = 0;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t idx = r.u32();
        const float value = r.f32();
        if (idx >= d.param_count || (i > 0 && idx <= prev)) {
            throw std::runtime_error(path.string() +
                                     ": invalid entry index order");
        }
        prev = idx;
        d.entries.emplace_back(idx, value);
    }
    return d;
}

StorageReport storage_report(const std::vector<SparseDelta>& deltas, size_t P) {
    StorageReport rep;
    rep.param_count = P;
    for (const auto& d : deltas) {
        rep.per_delta_entries.push_back(d.entries.size());
        rep.total_entries += d.entries.size();
        rep.total_bytes += delta_file_size(d);
    }
    rep.fraction_of_p =
        P == 0 ? 0.0
               : static_cast<double>(rep.total_entries) / static_cast<double>(P);
    return rep;
}

}  // namespace chunksr::codec
