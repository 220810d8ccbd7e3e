#pragma once

// Inner loops of the mixture EM. Data is column-major: indicator j of
// observation i lives at x[j * n + i].

#include <cstddef>

namespace hac24::kernels {

/// out[i] = |Linv (x_i - mu)|^2, Linv lower triangular d x d, row-major.
using MahalanobisFn = void (*)(const double* x, std::size_t n, std::size_t d, const double* mu, const double* linv,
                               double* out);

/// sum_w = sum_i w_i, sum_wx[j] = sum_i w_i x_ij.
using WeightedSumFn = void (*)(const double* x, std::size_t n, std::size_t d, const double* w, double* sum_wx,
                               double* sum_w);

/// scatter[j * d + k] = sum_i w_i (x_ij - m_j)(x_ik - m_k), full symmetric d x d.
using WeightedScatterFn = void (*)(const double* x, std::size_t n, std::size_t d, const double* w,
                                   const double* mean, double* scatter);

struct KernelTable {
    const char* name;
    MahalanobisFn mahalanobis_sq;
    WeightedSumFn weighted_sum;
    WeightedScatterFn weighted_scatter;
};

const KernelTable& scalar_kernels();

/// nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// Best table for this CPU. HAC24_SIMD=scalar in the environment forces the
/// scalar path. Resolved once.
const KernelTable& active_kernels();

}  // namespace hac24::kernels
