#include <algorithm>
#include <cmath>

#include "hac24/composition.hpp"
#include "hac24/errors.hpp"

namespace hac24 {

namespace {

constexpr double kOrthoTolerance = 1e-12;

}  // namespace

SBPartition::SBPartition(std::vector<std::vector<int>> signs, Labels labels)
    : signs_(std::move(signs)), labels_(std::move(labels)) {
    const std::size_t d = labels_.size();
    if (d < 2) throw DataError("partition needs at least two parts");
    if (signs_.size() != d - 1) {
        throw DataError("partition needs D-1 = " + std::to_string(d - 1) + " levels, got " +
                        std::to_string(signs_.size()));
    }

    // Groups still to be split, as membership masks.
    std::vector<std::vector<bool>> groups{std::vector<bool>(d, true)};
    contrasts_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d - 1));

    for (std::size_t level = 0; level < signs_.size(); ++level) {
        const auto& row = signs_[level];
        if (row.size() != d) throw DataError("partition level " + std::to_string(level + 1) + " has wrong width");
        std::vector<bool> support(d, false), plus(d, false), minus(d, false);
        std::size_t r = 0, s = 0;
        for (std::size_t j = 0; j < d; ++j) {
            switch (row[j]) {
                case 1: plus[j] = support[j] = true; ++r; break;
                case -1: minus[j] = support[j] = true; ++s; break;
                case 0: break;
                default: throw DataError("partition codes must be +1, -1 or 0");
            }
        }
        if (r == 0 || s == 0) {
            throw DataError("partition level " + std::to_string(level + 1) + " needs both + and - parts");
        }
        auto it = std::find(groups.begin(), groups.end(), support);
        if (it == groups.end()) {
            throw DataError("partition level " + std::to_string(level + 1) +
                            " does not split exactly one existing group");
        }
        groups.erase(it);
        if (r > 1) groups.push_back(plus);
        if (s > 1) groups.push_back(minus);

        const double rr = static_cast<double>(r), ss = static_cast<double>(s);
        const double scale = std::sqrt(rr * ss / (rr + ss));
        for (std::size_t j = 0; j < d; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const auto ll = static_cast<Eigen::Index>(level);
            if (plus[j]) contrasts_(jj, ll) = scale / rr;
            if (minus[j]) contrasts_(jj, ll) = -scale / ss;
        }
    }

    const Eigen::MatrixXd gram = contrasts_.transpose() * contrasts_;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
    if ((gram - eye).cwiseAbs().maxCoeff() > kOrthoTolerance) {
        throw NumericalError("partition basis is not orthonormal");
    }
}

std::size_t SBPartition::numerator_size(std::size_t level) const {
    return static_cast<std::size_t>(std::count(signs_.at(level).begin(), signs_.at(level).end(), 1));
}

std::size_t SBPartition::denominator_size(std::size_t level) const {
    return static_cast<std::size_t>(std::count(signs_.at(level).begin(), signs_.at(level).end(), -1));
}

SBPartition pivot_basis(const std::string& numerator, const Labels& labels) {
    auto it = std::find(labels.begin(), labels.end(), numerator);
    if (it == labels.end()) throw DataError("unknown pivot behavior '" + numerator + "'");
    const std::size_t d = labels.size();
    std::vector<std::size_t> order{static_cast<std::size_t>(it - labels.begin())};
    for (std::size_t j = 0; j < d; ++j) {
        if (j != order.front()) order.push_back(j);
    }
    std::vector<std::vector<int>> signs(d - 1, std::vector<int>(d, 0));
    for (std::size_t level = 0; level + 1 < d; ++level) {
        signs[level][order[level]] = 1;
        for (std::size_t k = level + 1; k < d; ++k) signs[level][order[k]] = -1;
    }
    return SBPartition(std::move(signs), labels);
}

IlrVector ilr(const Composition& x, const SBPartition& basis) {
    if (x.labels() != basis.labels()) throw DataError("composition labels do not match the basis labels");
    const auto d = static_cast<Eigen::Index>(x.size());
    Eigen::VectorXd logs(d);
    for (Eigen::Index i = 0; i < d; ++i) logs(i) = std::log(x[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd z = basis.contrasts().transpose() * logs;
    return IlrVector{std::vector<double>(z.data(), z.data() + z.size()), basis};
}

Composition ilr_inverse(std::span<const double> coords, const SBPartition& basis) {
    if (coords.size() + 1 != basis.parts()) {
        throw DataError("ilr vector has " + std::to_string(coords.size()) + " coordinates, basis expects " +
                        std::to_string(basis.parts() - 1));
    }
    for (double c : coords) {
        if (!std::isfinite(c)) throw DataError("ilr coordinates must be finite");
    }
    const Eigen::Map<const Eigen::VectorXd> z(coords.data(), static_cast<Eigen::Index>(coords.size()));
    const Eigen::VectorXd clr = basis.contrasts() * z;
    const double top = clr.maxCoeff();
    std::vector<double> parts(basis.parts());
    for (std::size_t i = 0; i < parts.size(); ++i) parts[i] = std::exp(clr(static_cast<Eigen::Index>(i)) - top);
    return Composition(std::move(parts), basis.labels());
}

Composition ilr_inverse(const IlrVector& v) { return ilr_inverse(v.coords, v.basis); }

Eigen::MatrixXd ilr_rows(std::span<const Composition> samples, const SBPartition& basis) {
    const auto n = static_cast<Eigen::Index>(samples.size());
    const auto d = static_cast<Eigen::Index>(basis.parts());
    Eigen::MatrixXd logs(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& x = samples[static_cast<std::size_t>(i)];
        if (x.labels() != basis.labels()) throw DataError("composition labels do not match the basis labels");
        for (Eigen::Index j = 0; j < d; ++j) logs(i, j) = std::log(x[static_cast<std::size_t>(j)]);
    }
    return logs * basis.contrasts();
}

}  // namespace hac24
