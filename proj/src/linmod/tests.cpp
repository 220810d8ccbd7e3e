#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "hac24/errors.hpp"
#include "hac24/linmod.hpp"

namespace hac24 {

double normal_two_sided_p(double z) {
    if (!std::isfinite(z)) return 0.0;
    const boost::math::normal_distribution<double> std_normal;
    return 2.0 * boost::math::cdf(boost::math::complement(std_normal, std::abs(z)));
}

double chi_square_sf(double statistic, double df) {
    if (!(df > 0.0)) throw DataError("chi-square needs positive degrees of freedom");
    if (statistic <= 0.0) return 1.0;
    if (!std::isfinite(statistic)) return 0.0;
    const boost::math::chi_squared_distribution<double> dist(df);
    return boost::math::cdf(boost::math::complement(dist, statistic));
}

WaldTest wald_test(const FitResult& fit, const Eigen::MatrixXd& contrast, bool use_robust) {
    const Eigen::Index p = fit.coefficients.size();
    if (contrast.cols() != p) throw DataError("contrast matrix has the wrong number of columns");
    if (contrast.rows() < 1 || contrast.rows() > p) throw DataError("contrast matrix needs between 1 and p rows");
    for (Eigen::Index r = 0; r < contrast.rows(); ++r) {
        if (contrast.row(r).cwiseAbs().maxCoeff() == 0.0) throw DataError("contrast matrix has a zero row");
    }
    Eigen::FullPivLU<Eigen::MatrixXd> rank_check(contrast);
    if (rank_check.rank() != contrast.rows()) throw DataError("contrast matrix is not of full row rank");

    const Eigen::VectorXd cb = contrast * fit.coefficients;
    const Eigen::MatrixXd cvc = contrast * fit.covariance(use_robust) * contrast.transpose();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cvc);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= std::numeric_limits<double>::epsilon() * std::max(1.0, cvc.cwiseAbs().maxCoeff())) {
        throw NumericalError("contrast covariance C V C^T is singular");
    }
    WaldTest out;
    out.statistic = std::max(0.0, cb.dot(ldlt.solve(cb)));
    out.df = static_cast<int>(contrast.rows());
    out.p_value = chi_square_sf(out.statistic, out.df);
    return out;
}

Estimate linear_combination(const FitResult& fit, const Eigen::VectorXd& weights, bool use_robust) {
    if (weights.size() != fit.coefficients.size()) throw DataError("weight vector length does not match coefficients");
    Estimate e;
    e.estimate = weights.dot(fit.coefficients);
    const double var = weights.dot(fit.covariance(use_robust) * weights);
    e.se = std::sqrt(std::max(0.0, var));
    e.ci_low = e.estimate - kZ975 * e.se;
    e.ci_high = e.estimate + kZ975 * e.se;
    if (e.se > 0.0) {
        e.p_value = normal_two_sided_p(e.estimate / e.se);
    } else {
        e.p_value = e.estimate == 0.0 ? 1.0 : 0.0;
    }
    // Avoid printing -0 for exactly-null combinations.
    if (e.estimate == 0.0) e.estimate = 0.0;
    if (e.se == 0.0) e.ci_low = e.ci_high = e.estimate;
    return e;
}

Estimate scale_estimate(const Estimate& e, double factor) {
    Estimate out;
    if (factor == 0.0) return out;
    out.estimate = factor * e.estimate;
    out.se = std::abs(factor) * e.se;
    out.ci_low = factor > 0.0 ? factor * e.ci_low : factor * e.ci_high;
    out.ci_high = factor > 0.0 ? factor * e.ci_high : factor * e.ci_low;
    out.p_value = e.p_value;
    return out;
}

double gcv_score(const FitResult& fit) {
    const double n = static_cast<double>(fit.n);
    if (fit.edf >= n) throw NumericalError("GCV undefined: effective degrees of freedom reach N");
    const double denom = n - fit.edf;
    return n * fit.rss / (denom * denom);
}

}  // namespace hac24
