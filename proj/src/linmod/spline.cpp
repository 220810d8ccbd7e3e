#include <algorithm>
#include <cmath>

#include "hac24/errors.hpp"
#include "hac24/linmod.hpp"

namespace hac24 {

namespace {

double cube_plus(double v) { return v > 0.0 ? v * v * v : 0.0; }

}  // namespace

NaturalSpline::NaturalSpline(std::span<const double> x, int n_knots) {
    if (n_knots < 2) throw DataError("natural spline needs at least 2 knots");
    if (x.empty()) throw DataError("natural spline needs data");
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (!std::isfinite(*mn) || !std::isfinite(*mx)) throw DataError("natural spline data must be finite");
    if (!(*mx > *mn)) throw DataError("natural spline input is constant");
    lo_ = *mn;
    width_ = *mx - *mn;
    const auto k = static_cast<std::size_t>(n_knots);
    knots_.resize(k);
    scaled_knots_.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        scaled_knots_[i] = static_cast<double>(i) / static_cast<double>(k - 1);
        knots_[i] = lo_ + width_ * scaled_knots_[i];
    }
}

Eigen::RowVectorXd NaturalSpline::evaluate(double x) const {
    const std::size_t k = scaled_knots_.size();
    const double t = (x - lo_) / width_;
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(k - 1));
    row(0) = t;
    const double last = scaled_knots_[k - 1];
    const double prev = scaled_knots_[k - 2];
    const double d_prev = (cube_plus(t - prev) - cube_plus(t - last)) / (last - prev);
    for (std::size_t j = 0; j + 2 < k; ++j) {
        const double dj = (cube_plus(t - scaled_knots_[j]) - cube_plus(t - last)) / (last - scaled_knots_[j]);
        row(static_cast<Eigen::Index>(j + 1)) = dj - d_prev;
    }
    return row;
}

Eigen::MatrixXd NaturalSpline::evaluate(std::span<const double> x) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(columns()));
    for (std::size_t i = 0; i < x.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = evaluate(x[i]);
    return out;
}

Eigen::MatrixXd natural_cubic_spline_basis(std::span<const double> x, int n_knots) {
    return NaturalSpline(x, n_knots).evaluate(x);
}

}  // namespace hac24
