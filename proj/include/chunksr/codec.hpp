#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chunksr/model.hpp"

namespace chunksr::codec {

uint64_t fnv1a64(const void* data, size_t len);
uint64_t params_hash(const std::vector<float>& theta);

// Per-chunk private parameters: absolute new values at ascending coordinates,
// valid only against the parent vector whose content hash matches.
struct SparseDelta {
    int32_t chunk_id = -1;
    uint64_t parent_hash = 0;
    uint32_t arch_id = 0;
    uint32_t scale = 0;
    uint32_t param_count = 0;
    std::vector<std::pair<uint32_t, float>> entries;  // ascending index
};

// Differences must lie inside `mask_indices` (ascending); anything outside is
// a masking-contract violation.
SparseDelta encode_delta(const ModelParams& parent, const ModelParams& adapted,
                         const std::vector<uint32_t>& mask_indices);

ModelParams apply_delta(const ModelParams& parent, const SparseDelta& delta);

// ---- binary formats, little-endian, documented in docs/FORMATS.md ----

constexpr uint32_t kModelMagic = 0x464d5253;  // "SRMF"
constexpr uint32_t kDeltaMagic = 0x46445253;  // "SRDF"
constexpr uint32_t kFormatVersion = 1;
// magic, version, arch, scale, provenance, chunk_id, P(u64) = 32 bytes;
// trailer: content hash (u64)
constexpr size_t kModelHeaderBytes = 32;
// magic, version, arch, scale, chunk_id, P, entry count, parent_hash(u64)
constexpr size_t kDeltaHeaderBytes = 36;

size_t delta_file_size(const SparseDelta& d);  // header + 8 * entries

void write_model(const ModelParams& m, const std::filesystem::path& path);
ModelParams read_model(const std::filesystem::path& path);

void write_delta(const SparseDelta& d, const std::filesystem::path& path);
SparseDelta read_delta(const std::filesystem::path& path);

struct StorageReport {
    size_t param_count = 0;       // P
    size_t total_entries = 0;     // sum over deltas
    double fraction_of_p = 0.0;   // total_entries / P
    size_t total_bytes = 0;       // on-disk bytes of all delta files
    std::vector<size_t> per_delta_entries;
};

StorageReport storage_report(const std::vector<SparseDelta>& deltas, size_t P);

// Writes via a temp file in the same directory, then renames into place.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

}  // namespace chunksr::codec
