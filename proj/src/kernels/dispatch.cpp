#include <cstdlib>
#include <string_view>

#include "hac24/kernels.hpp"

namespace hac24::kernels {

#if defined(HAC24_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(HAC24_HAVE_NEON)
const KernelTable& neon_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(HAC24_HAVE_AVX2)
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &avx2_table();
#endif
    return nullptr;
}

const KernelTable* neon_kernels() {
#if defined(HAC24_HAVE_NEON)
    return &neon_table();  // Advanced SIMD is mandatory on AArch64
#else
    return nullptr;
#endif
}

const KernelTable& active_kernels() {
    static const KernelTable& chosen = [] () -> const KernelTable& {
        const char* env = std::getenv("HAC24_SIMD");
        if (env != nullptr && std::string_view(env) == "scalar") return scalar_kernels();
        if (const KernelTable* t = avx2_kernels()) return *t;
        if (const KernelTable* t = neon_kernels()) return *t;
        return scalar_kernels();
    }();
    return chosen;
}

}  // namespace hac24::kernels
