#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

#include "hac24/kernels.hpp"
#include "hac24/lpa.hpp"

using namespace hac24;

namespace {

struct Case {
    std::vector<double> x, mu, linv, w;
    std::size_t n, d;
};

Case make_case(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Case c{{}, {}, {}, {}, n, d};
    for (std::size_t i = 0; i < n * d; ++i) c.x.push_back(0.3 + 0.1 * z(rng));
    for (std::size_t j = 0; j < d; ++j) c.mu.push_back(0.3 + 0.05 * z(rng));
    c.linv.assign(d * d, 0.0);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t k = 0; k <= r; ++k) c.linv[r * d + k] = r == k ? 5.0 + u(rng) : z(rng);
    for (std::size_t i = 0; i < n; ++i) c.w.push_back(u(rng));
    return c;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

void compare(const kernels::KernelTable& simd, const kernels::KernelTable& scalar, const Case& c) {
    std::vector<double> a(c.n), b(c.n);
    simd.mahalanobis_sq(c.x.data(), c.n, c.d, c.mu.data(), c.linv.data(), a.data());
    scalar.mahalanobis_sq(c.x.data(), c.n, c.d, c.mu.data(), c.linv.data(), b.data());
    for (std::size_t i = 0; i < c.n; ++i) CHECK(rel(a[i], b[i]) < 1e-12);

    std::vector<double> sa(c.d), sb(c.d);
    double wa = 0.0, wb = 0.0;
    simd.weighted_sum(c.x.data(), c.n, c.d, c.w.data(), sa.data(), &wa);
    scalar.weighted_sum(c.x.data(), c.n, c.d, c.w.data(), sb.data(), &wb);
    CHECK(rel(wa, wb) < 1e-12);
    for (std::size_t j = 0; j < c.d; ++j) CHECK(rel(sa[j], sb[j]) < 1e-12);

    std::vector<double> ca(c.d * c.d), cb(c.d * c.d);
    simd.weighted_scatter(c.x.data(), c.n, c.d, c.w.data(), c.mu.data(), ca.data());
    scalar.weighted_scatter(c.x.data(), c.n, c.d, c.w.data(), c.mu.data(), cb.data());
    for (std::size_t j = 0; j < c.d * c.d; ++j) CHECK(rel(ca[j], cb[j]) < 1e-12);
    for (std::size_t r = 0; r < c.d; ++r)
        for (std::size_t k = 0; k < c.d; ++k) CHECK(ca[r * c.d + k] == ca[k * c.d + r]);
}

}  // namespace

TEST_CASE("scalar kernels against direct formulas") {
    const auto& s = kernels::scalar_kernels();
    const Case c = make_case(37, 3, 1);
    std::vector<double> out(c.n);
    s.mahalanobis_sq(c.x.data(), c.n, c.d, c.mu.data(), c.linv.data(), out.data());
    for (std::size_t i = 0; i < c.n; ++i) {
        double total = 0.0;
        for (std::size_t r = 0; r < c.d; ++r) {
            double v = 0.0;
            for (std::size_t k = 0; k <= r; ++k) v += c.linv[r * c.d + k] * (c.x[k * c.n + i] - c.mu[k]);
            total += v * v;
        }
        CHECK(out[i] == doctest::Approx(total).epsilon(1e-13));
    }
    std::vector<double> sum(c.d), scatter(c.d * c.d);
    double sw = 0.0;
    s.weighted_sum(c.x.data(), c.n, c.d, c.w.data(), sum.data(), &sw);
    s.weighted_scatter(c.x.data(), c.n, c.d, c.w.data(), c.mu.data(), scatter.data());
    double w_ref = 0.0;
    for (double w : c.w) w_ref += w;
    CHECK(sw == doctest::Approx(w_ref).epsilon(1e-14));
    for (std::size_t j = 0; j < c.d; ++j) {
        double ref = 0.0;
        for (std::size_t i = 0; i < c.n; ++i) ref += c.w[i] * c.x[j * c.n + i];
        CHECK(sum[j] == doctest::Approx(ref).epsilon(1e-13));
        for (std::size_t k = 0; k < c.d; ++k) {
            double sc = 0.0;
            for (std::size_t i = 0; i < c.n; ++i)
                sc += c.w[i] * (c.x[j * c.n + i] - c.mu[j]) * (c.x[k * c.n + i] - c.mu[k]);
            CHECK(scatter[j * c.d + k] == doctest::Approx(sc).epsilon(1e-13));
        }
    }
}

TEST_CASE("vector kernels match the scalar ones") {
    const kernels::KernelTable* simd = kernels::avx2_kernels();
    if (simd == nullptr) simd = kernels::neon_kernels();
    if (simd == nullptr) {
        MESSAGE("no vector kernels on this machine; only the scalar path is exercised");
        return;
    }
    for (std::size_t d : {1u, 2u, 3u, 4u, 5u, 17u}) {
        for (std::size_t n : {1u, 3u, 4u, 5u, 8u, 17u, 1034u})
            compare(*simd, kernels::scalar_kernels(), make_case(n, d, n * 31 + d));
    }
}

TEST_CASE("environment override picks the scalar table") {
    const char* env = std::getenv("HAC24_SIMD");
    const auto& active = kernels::active_kernels();
    if (env != nullptr && std::string_view(env) == "scalar") {
        CHECK(std::string_view(active.name) == std::string_view(kernels::scalar_kernels().name));
    } else if (kernels::avx2_kernels() != nullptr) {
        CHECK(std::string_view(active.name) == std::string_view(kernels::avx2_kernels()->name));
    }
    MESSAGE("active kernels: " << std::string_view(active.name));
}

TEST_CASE("mixture log-likelihood with the active kernels matches a direct evaluation") {
    Eigen::MatrixXd cov(3, 3);
    cov << 4e-3, 1e-3, 0, 1e-3, 2e-3, 2e-4, 0, 2e-4, 5e-4;
    MixtureModel m;
    Eigen::VectorXd m1(3), m2(3);
    m1 << 0.35, 0.18, 0.07;
    m2 << 0.55, 0.1, 0.03;
    m.profiles = {{m1, cov}, {m2, 1.5 * cov}};
    m.weights = {0.4, 0.6};
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd x = sample_mixture(m, 501, rng);

    double ll = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double dens = 0.0;
        for (std::size_t c = 0; c < 2; ++c) {
            const auto& p = m.profiles[c];
            const Eigen::VectorXd e = x.row(i).transpose() - p.mean;
            const double q = e.dot(p.covariance.ldlt().solve(e));
            dens += m.weights[c] * std::exp(-0.5 * q) /
                    std::sqrt(std::pow(2.0 * std::numbers::pi, 3) * p.covariance.determinant());
        }
        ll += std::log(dens);
    }
    CHECK(log_likelihood(m, x) == doctest::Approx(ll).epsilon(1e-12));
}
