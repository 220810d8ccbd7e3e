#include "hac24/kernels.hpp"

#include <vector>

namespace hac24::kernels {

namespace {

void mahalanobis_scalar(const double* x, std::size_t n, std::size_t d, const double* mu, const double* linv,
                        double* out) {
    std::vector<double> centered(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) centered[j] = x[j * n + i] - mu[j];
        double acc = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
            double y = 0.0;
            for (std::size_t c = 0; c <= r; ++c) y += linv[r * d + c] * centered[c];
            acc += y * y;
        }
        out[i] = acc;
    }
}

void weighted_sum_scalar(const double* x, std::size_t n, std::size_t d, const double* w, double* sum_wx,
                         double* sum_w) {
    double sw = 0.0;
    for (std::size_t i = 0; i < n; ++i) sw += w[i];
    *sum_w = sw;
    for (std::size_t j = 0; j < d; ++j) {
        const double* col = x + j * n;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += w[i] * col[i];
        sum_wx[j] = s;
    }
}

void weighted_scatter_scalar(const double* x, std::size_t n, std::size_t d, const double* w, const double* mean,
                             double* scatter) {
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = 0; k <= j; ++k) {
            const double* cj = x + j * n;
            const double* ck = x + k * n;
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += w[i] * (cj[i] - mean[j]) * (ck[i] - mean[k]);
            scatter[j * d + k] = s;
            scatter[k * d + j] = s;
        }
    }
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", mahalanobis_scalar, weighted_sum_scalar, weighted_scatter_scalar};
    return table;
}

}  // namespace hac24::kernels
