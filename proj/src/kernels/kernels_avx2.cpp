// Built with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <array>

#include "hac24/kernels.hpp"

namespace hac24::kernels {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Four observations per pass; indicator count is small (d <= 8 in practice)
// so the centered block sits in registers / L1.
void mahalanobis_avx2(const double* x, std::size_t n, std::size_t d, const double* mu, const double* linv,
                      double* out) {
    constexpr std::size_t kMaxD = 16;
    std::size_t i = 0;
    if (d <= kMaxD) {
        __m256d centered[kMaxD];
        for (; i + 4 <= n; i += 4) {
            for (std::size_t j = 0; j < d; ++j) {
                centered[j] = _mm256_sub_pd(_mm256_loadu_pd(x + j * n + i), _mm256_set1_pd(mu[j]));
            }
            __m256d acc = _mm256_setzero_pd();
            for (std::size_t r = 0; r < d; ++r) {
                __m256d y = _mm256_setzero_pd();
                for (std::size_t c = 0; c <= r; ++c) {
                    y = _mm256_fmadd_pd(_mm256_set1_pd(linv[r * d + c]), centered[c], y);
                }
                acc = _mm256_fmadd_pd(y, y, acc);
            }
            _mm256_storeu_pd(out + i, acc);
        }
    }
    // tail, and any d too large for the register block
    for (; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
            double y = 0.0;
            for (std::size_t c = 0; c <= r; ++c) y += linv[r * d + c] * (x[c * n + i] - mu[c]);
            acc += y * y;
        }
        out[i] = acc;
    }
}

void weighted_sum_avx2(const double* x, std::size_t n, std::size_t d, const double* w, double* sum_wx,
                       double* sum_w) {
    __m256d sw = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) sw = _mm256_add_pd(sw, _mm256_loadu_pd(w + i));
    double total = hsum(sw);
    for (; i < n; ++i) total += w[i];
    *sum_w = total;

    for (std::size_t j = 0; j < d; ++j) {
        const double* col = x + j * n;
        __m256d s = _mm256_setzero_pd();
        i = 0;
        for (; i + 4 <= n; i += 4) s = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(col + i), s);
        double t = hsum(s);
        for (; i < n; ++i) t += w[i] * col[i];
        sum_wx[j] = t;
    }
}

void weighted_scatter_avx2(const double* x, std::size_t n, std::size_t d, const double* w, const double* mean,
                           double* scatter) {
    for (std::size_t j = 0; j < d; ++j) {
        const double* cj = x + j * n;
        const __m256d mj = _mm256_set1_pd(mean[j]);
        for (std::size_t k = 0; k <= j; ++k) {
            const double* ck = x + k * n;
            const __m256d mk = _mm256_set1_pd(mean[k]);
            __m256d s = _mm256_setzero_pd();
            std::size_t i = 0;
            for (; i + 4 <= n; i += 4) {
                const __m256d a = _mm256_sub_pd(_mm256_loadu_pd(cj + i), mj);
                const __m256d b = _mm256_sub_pd(_mm256_loadu_pd(ck + i), mk);
                s = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), a), b, s);
            }
            double t = hsum(s);
            for (; i < n; ++i) t += w[i] * (cj[i] - mean[j]) * (ck[i] - mean[k]);
            scatter[j * d + k] = t;
            scatter[k * d + j] = t;
        }
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{"avx2", mahalanobis_avx2, weighted_sum_avx2, weighted_scatter_avx2};
    return table;
}

}  // namespace hac24::kernels
