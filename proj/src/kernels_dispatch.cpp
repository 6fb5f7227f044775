#include <atomic>
#include <cstdlib>
#include <cstring>

#include "chunksr/kernels.hpp"

namespace chunksr::kern {
namespace {

std::atomic<bool> g_simd_enabled{true};

bool env_simd_disabled() {
    const char* e = std::getenv("CHUNKSR_SIMD");
    return e && (std::strcmp(e, "0") == 0 || std::strcmp(e, "off") == 0 ||
                 std::strcmp(e, "scalar") == 0);
}

}  // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

void set_simd_enabled(bool enabled) { g_simd_enabled.store(enabled); }

bool simd_enabled() { return g_simd_enabled.load(); }

const Kernels& active_kernels() {
    static const bool env_off = env_simd_disabled();
    if (!env_off && g_simd_enabled.load() && avx2_compiled() && avx2_supported()) {
        return avx2_kernels();
    }
    return scalar_kernels();
}

}  // namespace chunksr::kern
