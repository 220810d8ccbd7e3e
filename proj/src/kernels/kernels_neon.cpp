#include <arm_neon.h>

#include "hac24/kernels.hpp"

namespace hac24::kernels {

namespace {

void mahalanobis_neon(const double* x, std::size_t n, std::size_t d, const double* mu, const double* linv,
                      double* out) {
    constexpr std::size_t kMaxD = 16;
    std::size_t i = 0;
    if (d <= kMaxD) {
        float64x2_t centered[kMaxD];
        for (; i + 2 <= n; i += 2) {
            for (std::size_t j = 0; j < d; ++j) centered[j] = vsubq_f64(vld1q_f64(x + j * n + i), vdupq_n_f64(mu[j]));
            float64x2_t acc = vdupq_n_f64(0.0);
            for (std::size_t r = 0; r < d; ++r) {
                float64x2_t y = vdupq_n_f64(0.0);
                for (std::size_t c = 0; c <= r; ++c) y = vfmaq_n_f64(y, centered[c], linv[r * d + c]);
                acc = vfmaq_f64(acc, y, y);
            }
            vst1q_f64(out + i, acc);
        }
    }
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

void weighted_sum_neon(const double* x, std::size_t n, std::size_t d, const double* w, double* sum_wx,
                       double* sum_w) {
    float64x2_t sw = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) sw = vaddq_f64(sw, vld1q_f64(w + i));
    double total = vaddvq_f64(sw);
    for (; i < n; ++i) total += w[i];
    *sum_w = total;
    for (std::size_t j = 0; j < d; ++j) {
        const double* col = x + j * n;
        float64x2_t s = vdupq_n_f64(0.0);
        i = 0;
        for (; i + 2 <= n; i += 2) s = vfmaq_f64(s, vld1q_f64(w + i), vld1q_f64(col + i));
        double t = vaddvq_f64(s);
        for (; i < n; ++i) t += w[i] * col[i];
        sum_wx[j] = t;
    }
}

void weighted_scatter_neon(const double* x, std::size_t n, std::size_t d, const double* w, const double* mean,
                           double* scatter) {
    for (std::size_t j = 0; j < d; ++j) {
        const double* cj = x + j * n;
        for (std::size_t k = 0; k <= j; ++k) {
            const double* ck = x + k * n;
            float64x2_t s = vdupq_n_f64(0.0);
            std::size_t i = 0;
            for (; i + 2 <= n; i += 2) {
                const float64x2_t a = vsubq_f64(vld1q_f64(cj + i), vdupq_n_f64(mean[j]));
                const float64x2_t b = vsubq_f64(vld1q_f64(ck + i), vdupq_n_f64(mean[k]));
                s = vfmaq_f64(s, vmulq_f64(vld1q_f64(w + i), a), b);
            }
            double t = vaddvq_f64(s);
            for (; i < n; ++i) t += w[i] * (cj[i] - mean[j]) * (ck[i] - mean[k]);
            scatter[j * d + k] = t;
            scatter[k * d + j] = t;
        }
    }
}

}  // namespace

const KernelTable& neon_table() {
    static const KernelTable table{"neon", mahalanobis_neon, weighted_sum_neon, weighted_scatter_neon};
    return table;
}

}  // namespace hac24::kernels
