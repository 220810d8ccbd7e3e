#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "hac24/errors.hpp"
#include "hac24/linmod.hpp"

namespace hac24 {

namespace {

std::size_t find_column(const Labels& columns, const std::string& name) {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw DataError("no column named '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

void check_inputs(const DesignMatrix& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw DataError("design rows and outcome length differ");
    if (static_cast<std::size_t>(x.cols()) != x.columns.size()) throw DataError("design column labels out of sync");
    if (x.rows() <= x.cols()) {
        throw DataError("need more observations (" + std::to_string(x.rows()) + ") than columns (" +
                        std::to_string(x.cols()) + ")");
    }
    if (!x.values.allFinite() || !y.allFinite()) throw DataError("design or outcome has non-finite entries");
}

double gaussian_log_likelihood(double rss, double n) {
    const double sigma2 = rss / n;
    return -0.5 * n * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
}

}  // namespace

std::size_t DesignMatrix::index_of(const std::string& column) const { return find_column(columns, column); }
std::size_t FitResult::index_of(const std::string& column) const { return find_column(columns, column); }

FitResult fit_ols(const DesignMatrix& x, const Eigen::VectorXd& y, RobustFlavor flavor) {
    check_inputs(x, y);
    const Eigen::Index n = x.rows(), p = x.cols();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(x.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = static_cast<double>(std::max(n, p)) * std::numeric_limits<double>::epsilon() * sv(0);
    if (sv(p - 1) <= cutoff) {
        throw NumericalError("design matrix is rank deficient (collinear columns)");
    }
    const Eigen::VectorXd inv_sv = sv.cwiseInverse();

    FitResult fit;
    fit.coefficients = svd.matrixV() * (inv_sv.asDiagonal() * (svd.matrixU().transpose() * y));
    fit.fitted = x.values * fit.coefficients;
    fit.residuals = y - fit.fitted;
    fit.rss = fit.residuals.squaredNorm();
    fit.n = n;
    fit.p = p;
    fit.edf = static_cast<double>(p);
    fit.residual_variance = fit.rss / static_cast<double>(n - p);
    fit.log_likelihood = gaussian_log_likelihood(fit.rss, static_cast<double>(n));
    fit.columns = x.columns;
    fit.flavor = flavor;

    const Eigen::MatrixXd v_scaled = svd.matrixV() * inv_sv.asDiagonal();
    const Eigen::MatrixXd xtx_inv = v_scaled * v_scaled.transpose();
    fit.model_covariance = fit.residual_variance * xtx_inv;
    fit.robust_covariance = robust_covariance(fit, x, y, flavor);
    return fit;
}

Eigen::MatrixXd robust_covariance(const FitResult& fit, const DesignMatrix& x, const Eigen::VectorXd& y,
                                  RobustFlavor flavor) {
    check_inputs(x, y);
    const Eigen::VectorXd resid = y - x.values * fit.coefficients;
    const Eigen::MatrixXd scores = x.values.array().colwise() * resid.array();
    const Eigen::MatrixXd meat = scores.transpose() * scores;
    const Eigen::MatrixXd bread = (x.values.transpose() * x.values).ldlt().solve(
        Eigen::MatrixXd::Identity(x.cols(), x.cols()));
    Eigen::MatrixXd v = bread * meat * bread;
    if (flavor == RobustFlavor::HC1) {
        v *= static_cast<double>(x.rows()) / static_cast<double>(x.rows() - x.cols());
    }
    return 0.5 * (v + v.transpose());
}

FitResult fit_weighted(const DesignMatrix& x, const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
                       std::span<const long> clusters, RobustFlavor flavor) {
    check_inputs(x, y);
    const Eigen::Index n = x.rows(), p = x.cols();
    if (weights.size() != n || static_cast<Eigen::Index>(clusters.size()) != n) {
        throw DataError("weights and cluster ids must have one entry per row");
    }
    if (!weights.allFinite()) throw DataError("weights must be finite");

    const Eigen::MatrixXd xw = x.values.array().colwise() * weights.array();
    const Eigen::MatrixXd xtwx = xw.transpose() * x.values;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(xtwx);
    lu.setThreshold(static_cast<double>(std::max(n, p)) * std::numeric_limits<double>::epsilon());
    if (!lu.isInvertible()) throw NumericalError("weighted normal equations are singular");
    const Eigen::MatrixXd bread = lu.inverse();

    FitResult fit;
    fit.coefficients = bread * (xw.transpose() * y);
    fit.fitted = x.values * fit.coefficients;
    fit.residuals = y - fit.fitted;
    fit.rss = (weights.array() * fit.residuals.array().square()).sum();
    fit.n = n;
    fit.p = p;
    fit.edf = static_cast<double>(p);
    fit.residual_variance = fit.rss / static_cast<double>(n - p);
    fit.log_likelihood = gaussian_log_likelihood(std::abs(fit.rss), std::abs(weights.sum()));
    fit.columns = x.columns;
    fit.flavor = flavor;
    fit.model_covariance = fit.residual_variance * bread;

    // Per-cluster score sums, in order of first appearance.
    std::unordered_map<long, Eigen::Index> slot;
    std::vector<Eigen::Index> cluster_of(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        auto [it, inserted] = slot.try_emplace(clusters[static_cast<std::size_t>(i)], static_cast<Eigen::Index>(slot.size()));
        cluster_of[static_cast<std::size_t>(i)] = it->second;
    }
    const auto g = static_cast<Eigen::Index>(slot.size());
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(g, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(cluster_of[static_cast<std::size_t>(i)]) += (weights(i) * fit.residuals(i)) * x.values.row(i);
    }
    Eigen::MatrixXd v = bread * (sums.transpose() * sums) * bread;
    if (flavor == RobustFlavor::HC1) {
        if (g < 2) throw NumericalError("cluster-robust covariance needs at least two clusters");
        const double gg = static_cast<double>(g), nn = static_cast<double>(n), pp = static_cast<double>(p);
        v *= gg / (gg - 1.0) * (nn - 1.0) / (nn - pp);
    }
    fit.robust_covariance = 0.5 * (v + v.transpose());
    return fit;
}

}  // namespace hac24
