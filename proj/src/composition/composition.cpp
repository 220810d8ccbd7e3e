#include "hac24/composition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hac24/errors.hpp"

namespace hac24 {

namespace {

constexpr double kSumTolerance = 1e-12;

void require_same_labels(const Composition& x, const Composition& y) {
    if (!x.same_labels(y)) {
        throw DataError("compositions have different behavior labels");
    }
}

// Closure of exp(logs) with the max subtracted first so nothing overflows.
std::vector<double> close_from_logs(const std::vector<double>& logs) {
    const double top = *std::max_element(logs.begin(), logs.end());
    std::vector<double> out(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) out[i] = std::exp(logs[i] - top);
    return out;
}

}  // namespace

const Labels& canonical_behaviors() {
    static const Labels labels{"sit", "stand", "step", "sleep"};
    return labels;
}

RawTimeVector::RawTimeVector(std::vector<double> minutes, Labels labels)
    : minutes_(std::move(minutes)), labels_(std::move(labels)) {
    if (minutes_.size() != labels_.size()) {
        throw DataError("raw time vector: " + std::to_string(minutes_.size()) + " values for " +
                        std::to_string(labels_.size()) + " labels");
    }
    if (minutes_.size() < 2) throw DataError("raw time vector needs at least two behaviors");
    for (double m : minutes_) {
        if (!std::isfinite(m) || m < 0.0) throw DataError("raw time vector has a negative or non-finite part");
    }
    if (!(total() > 0.0)) throw DataError("raw time vector total is zero");
}

double RawTimeVector::total() const {
    return std::accumulate(minutes_.begin(), minutes_.end(), 0.0);
}

RawTimeVector RawTimeVector::scaled(double factor) const {
    if (!(factor > 0.0) || !std::isfinite(factor)) throw DataError("scale factor must be positive");
    std::vector<double> out(minutes_);
    for (double& m : out) m *= factor;
    return RawTimeVector(std::move(out), labels_);
}

Composition::Composition(std::vector<double> parts, Labels labels)
    : Composition(std::move(parts), std::make_shared<const Labels>(std::move(labels))) {}

Composition::Composition(std::vector<double> parts, std::shared_ptr<const Labels> labels)
    : parts_(std::move(parts)), labels_(std::move(labels)) {
    if (!labels_ || parts_.size() != labels_->size()) {
        throw DataError("composition: part count does not match label count");
    }
    if (parts_.size() < 2) throw DataError("composition needs at least two parts");
    double sum = 0.0;
    for (double p : parts_) {
        if (!std::isfinite(p) || !(p > 0.0)) {
            throw DataError("composition parts must be strictly positive and finite (apply replace_zeros)");
        }
        sum += p;
    }
    if (!std::isfinite(sum)) throw DataError("composition parts overflow");
    for (double& p : parts_) p /= sum;
    const double closed = std::accumulate(parts_.begin(), parts_.end(), 0.0);
    if (std::abs(closed - 1.0) > kSumTolerance) throw NumericalError("composition closure lost precision");
}

Composition Composition::uniform(const Labels& labels) {
    return Composition(std::vector<double>(labels.size(), 1.0), labels);
}

std::size_t Composition::index_of(const std::string& label) const {
    const auto& l = *labels_;
    auto it = std::find(l.begin(), l.end(), label);
    if (it == l.end()) throw DataError("unknown behavior label '" + label + "'");
    return static_cast<std::size_t>(it - l.begin());
}

bool Composition::same_labels(const Composition& other) const {
    return labels_ == other.labels_ || *labels_ == *other.labels_;
}

Composition closure(const RawTimeVector& raw) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == 0.0) {
            throw DataError("behavior '" + raw.labels()[i] + "' is zero; apply replace_zeros before closure");
        }
    }
    return Composition(raw.minutes(), raw.labels());
}

Composition perturb(const Composition& x, const Composition& y) {
    require_same_labels(x, y);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
    return Composition(std::move(out), x.labels_ptr());
}

Composition perturb_difference(const Composition& x, const Composition& y) {
    require_same_labels(x, y);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = y[i] / x[i];
    return Composition(std::move(out), x.labels_ptr());
}

Composition inverse(const Composition& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / x[i];
    return Composition(std::move(out), x.labels_ptr());
}

Composition power(double a, const Composition& x) {
    if (!std::isfinite(a)) throw DataError("power exponent must be finite");
    std::vector<double> logs(x.size());
    for (std::size_t i = 0; i < logs.size(); ++i) logs[i] = a * std::log(x[i]);
    return Composition(close_from_logs(logs), x.labels_ptr());
}

Composition compositional_mean(std::span<const Composition> samples) {
    if (samples.empty()) throw DataError("compositional mean of an empty sample");
    const Composition& first = samples.front();
    std::vector<double> mean_log(first.size(), 0.0);
    for (const auto& s : samples) {
        require_same_labels(first, s);
        for (std::size_t i = 0; i < mean_log.size(); ++i) mean_log[i] += std::log(s[i]);
    }
    const double n = static_cast<double>(samples.size());
    for (double& m : mean_log) m /= n;
    return Composition(close_from_logs(mean_log), first.labels_ptr());
}

double aitchison_distance(const Composition& x, const Composition& y) {
    require_same_labels(x, y);
    const std::size_t d = x.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            const double diff = std::log(x[i] / x[j]) - std::log(y[i] / y[j]);
            acc += diff * diff;
        }
    }
    // Each unordered pair counted once, so 1/D instead of 1/(2D).
    return std::sqrt(acc / static_cast<double>(d));
}

VariationMatrix variation_matrix(std::span<const Composition> samples) {
    if (samples.size() < 2) throw DataError("variation matrix needs at least two samples");
    const Composition& first = samples.front();
    const std::size_t d = first.size();
    const double n = static_cast<double>(samples.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            double mean = 0.0;
            for (const auto& s : samples) {
                require_same_labels(first, s);
                mean += std::log(s[i] / s[j]);
            }
            mean /= n;
            double ss = 0.0;
            for (const auto& s : samples) {
                const double r = std::log(s[i] / s[j]) - mean;
                ss += r * r;
            }
            const double sd = std::sqrt(ss / (n - 1.0));
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sd;
            out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = sd;
        }
    }
    return VariationMatrix{first.labels(), std::move(out)};
}

TernaryPoint ternary_coords(const Composition& x) {
    if (x.size() != 3) throw DataError("ternary coordinates need a 3-part composition");
    return TernaryPoint{x[1] + 0.5 * x[2], std::sqrt(3.0) / 2.0 * x[2]};
}

}  // namespace hac24
