#pragma once

// Linear-model engine shared by the substitution, compositional and step-3
// analyses: least squares with model-based and sandwich covariances, Wald
// tests, linear combinations, natural cubic splines, GCV and the James test.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hac24/composition.hpp"

namespace hac24 {

/// Two-sided 95% normal critical value.
inline constexpr double kZ975 = 1.959963984540054;

struct DesignMatrix {
    Eigen::MatrixXd values;  // N x p
    Labels columns;
    bool intercept = false;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    std::size_t index_of(const std::string& column) const;
};

enum class RobustFlavor { HC0, HC1 };

struct FitResult {
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd model_covariance;
    Eigen::MatrixXd robust_covariance;
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    double rss = 0.0;
    double residual_variance = 0.0;
    double log_likelihood = 0.0;  // Gaussian, sigma^2 at its MLE
    double edf = 0.0;             // trace of the hat matrix
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    Labels columns;
    RobustFlavor flavor = RobustFlavor::HC1;

    const Eigen::MatrixXd& covariance(bool robust) const { return robust ? robust_covariance : model_covariance; }
    std::size_t index_of(const std::string& column) const;
    double coefficient(const std::string& column) const {
        return coefficients(static_cast<Eigen::Index>(index_of(column)));
    }
};

/// Ordinary least squares through a thin SVD. Singular values below
/// max(N,p) * eps * s_max count as rank deficiency (NumericalError).
FitResult fit_ols(const DesignMatrix& x, const Eigen::VectorXd& y, RobustFlavor flavor = RobustFlavor::HC1);

/// Heteroskedasticity-consistent sandwich covariance of an OLS fit.
/// HC1 scales HC0 by N / (N - p).
Eigen::MatrixXd robust_covariance(const FitResult& fit, const DesignMatrix& x, const Eigen::VectorXd& y,
                                  RobustFlavor flavor);

/// Weighted least squares with arbitrary (possibly negative) weights and a
/// cluster-robust sandwich: scores are summed within each cluster id before
/// the outer product. HC1 applies G/(G-1) * (n-1)/(n-p).
FitResult fit_weighted(const DesignMatrix& x, const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
                       std::span<const long> clusters, RobustFlavor flavor = RobustFlavor::HC1);

struct WaldTest {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
};

/// (C b)^T (C V C^T)^{-1} (C b) against chi-square on rank(C) df.
WaldTest wald_test(const FitResult& fit, const Eigen::MatrixXd& contrast, bool use_robust);

struct Estimate {
    double estimate = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double p_value = 1.0;
};

/// w^T b with SE sqrt(w^T V w) and a normal 95% interval.
Estimate linear_combination(const FitResult& fit, const Eigen::VectorXd& weights, bool use_robust);

/// Estimate scaled by a constant; the interval flips when the factor is
/// negative. Zero factors give exactly zero with a [0, 0] interval.
Estimate scale_estimate(const Estimate& e, double factor);

/// Two-sided normal p-value for a z statistic.
double normal_two_sided_p(double z);

/// Upper tail of chi-square with `df` degrees of freedom.
double chi_square_sf(double statistic, double df);

/// Natural cubic spline in truncated-power form (linear beyond the boundary
/// knots). Knots are equally spaced over the observed range of the fitting
/// data; the basis has n_knots - 1 columns, the first being linear.
class NaturalSpline {
public:
    NaturalSpline(std::span<const double> x, int n_knots);

    std::size_t columns() const { return knots_.size() - 1; }
    const std::vector<double>& knots() const { return knots_; }
    Eigen::MatrixXd evaluate(std::span<const double> x) const;
    Eigen::RowVectorXd evaluate(double x) const;

private:
    double lo_ = 0.0;
    double width_ = 1.0;
    std::vector<double> knots_;  // original scale
    std::vector<double> scaled_knots_;
};

Eigen::MatrixXd natural_cubic_spline_basis(std::span<const double> x, int n_knots);

/// N * RSS / (N - edf)^2.
double gcv_score(const FitResult& fit);

struct JamesTest {
    double statistic = 0.0;
    int df = 0;
    double a = 1.0;  // James correction terms: critical value c(A + B c)
    double b = 0.0;
    double p_value = 1.0;
};

/// James first-order test of equal mean vectors without assuming equal
/// covariances. Each group is an n_g x p sample with n_g > p.
JamesTest james_test(const std::vector<Eigen::MatrixXd>& groups);

}  // namespace hac24
