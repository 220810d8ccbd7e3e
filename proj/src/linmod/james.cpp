#include <cmath>

#include "hac24/errors.hpp"
#include "hac24/linmod.hpp"

namespace hac24 {

JamesTest james_test(const std::vector<Eigen::MatrixXd>& groups) {
    if (groups.size() < 2) throw DataError("James test needs at least two groups");
    const Eigen::Index p = groups.front().cols();
    if (p < 1) throw DataError("James test needs at least one variable");
    const auto g = static_cast<Eigen::Index>(groups.size());

    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> precisions;  // (S_g / n_g)^{-1}
    Eigen::MatrixXd w_total = Eigen::MatrixXd::Zero(p, p);
    for (const auto& x : groups) {
        if (x.cols() != p) throw DataError("James test groups have different dimensions");
        if (x.rows() <= p) throw DataError("each James test group needs more rows than variables");
        const double n = static_cast<double>(x.rows());
        Eigen::VectorXd mean = x.colwise().mean().transpose();
        const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
        const Eigen::MatrixXd s = centered.transpose() * centered / (n - 1.0);
        Eigen::LLT<Eigen::MatrixXd> llt(s / n);
        if (llt.info() != Eigen::Success) throw NumericalError("degenerate within-group covariance in James test");
        const Eigen::MatrixXd w = llt.solve(Eigen::MatrixXd::Identity(p, p));
        w_total += w;
        means.push_back(std::move(mean));
        precisions.push_back(w);
    }

    Eigen::LLT<Eigen::MatrixXd> total_llt(w_total);
    if (total_llt.info() != Eigen::Success) throw NumericalError("James test weight matrix is singular");
    Eigen::VectorXd weighted_sum = Eigen::VectorXd::Zero(p);
    for (Eigen::Index k = 0; k < g; ++k) weighted_sum += precisions[static_cast<std::size_t>(k)] * means[static_cast<std::size_t>(k)];
    const Eigen::VectorXd grand = total_llt.solve(weighted_sum);
    const Eigen::MatrixXd w_inv = total_llt.solve(Eigen::MatrixXd::Identity(p, p));

    JamesTest out;
    out.df = static_cast<int>(p * (g - 1));
    const double f = static_cast<double>(out.df);
    double stat = 0.0, sum_a = 0.0, sum_b = 0.0;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
    for (Eigen::Index k = 0; k < g; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const Eigen::VectorXd diff = means[kk] - grand;
        stat += diff.dot(precisions[kk] * diff);
        const Eigen::MatrixXd m = eye - w_inv * precisions[kk];
        const double tr = m.trace();
        const double tr_sq = (m * m).trace();
        const double dof = static_cast<double>(groups[kk].rows()) - 1.0;
        sum_a += tr * tr / dof;
        sum_b += (tr_sq + 0.5 * tr * tr) / dof;
    }
    out.statistic = std::max(0.0, stat);
    out.a = 1.0 + sum_a / (2.0 * f);
    out.b = sum_b / (f * (f + 2.0));

    // Reject when T > c (A + B c) with c the chi-square critical value; the
    // p-value is the upper tail at the c solving c (A + B c) = T.
    double c = 0.0;
    if (out.b > 0.0) {
        c = (-out.a + std::sqrt(out.a * out.a + 4.0 * out.b * out.statistic)) / (2.0 * out.b);
    } else {
        c = out.statistic / out.a;
    }
    out.p_value = chi_square_sf(c, f);
    return out;
}

}  // namespace hac24
