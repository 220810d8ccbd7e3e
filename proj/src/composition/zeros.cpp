#include <algorithm>
#include <cmath>
#include <limits>

#include "hac24/composition.hpp"
#include "hac24/errors.hpp"

namespace hac24 {

ZeroReplacement fixed_floor(double minutes) {
    if (!(minutes > 0.0) || !std::isfinite(minutes)) throw DataError("zero-replacement floor must be positive");
    ZeroReplacement z;
    z.kind = ZeroReplacement::Kind::FixedFloor;
    z.floor = minutes;
    return z;
}

ZeroReplacement fraction_of_min(std::span<const RawTimeVector> cohort, double fraction) {
    if (cohort.empty()) throw DataError("fraction-of-min floors need a nonempty cohort");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw DataError("fraction must lie in (0, 1]");
    const std::size_t d = cohort.front().size();
    std::vector<double> smallest(d, std::numeric_limits<double>::infinity());
    for (const auto& raw : cohort) {
        if (raw.labels() != cohort.front().labels()) throw DataError("cohort vectors have different labels");
        for (std::size_t j = 0; j < d; ++j) {
            if (raw[j] > 0.0) smallest[j] = std::min(smallest[j], raw[j]);
        }
    }
    ZeroReplacement z;
    z.kind = ZeroReplacement::Kind::FractionOfMin;
    z.part_floors.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        if (!std::isfinite(smallest[j])) {
            throw DataError("behavior '" + cohort.front().labels()[j] + "' is zero for every person");
        }
        z.part_floors[j] = fraction * smallest[j];
    }
    return z;
}

RawTimeVector replace_zeros(const RawTimeVector& raw, const ZeroReplacement& strategy) {
    const std::size_t d = raw.size();
    if (strategy.kind == ZeroReplacement::Kind::FractionOfMin && strategy.part_floors.size() != d) {
        throw DataError("fraction-of-min strategy has the wrong number of floors");
    }
    double zero_mass = 0.0, positive_mass = 0.0;
    bool any_zero = false;
    for (std::size_t j = 0; j < d; ++j) {
        if (raw[j] == 0.0) {
            any_zero = true;
            zero_mass += strategy.kind == ZeroReplacement::Kind::FixedFloor ? strategy.floor : strategy.part_floors[j];
        } else {
            positive_mass += raw[j];
        }
    }
    if (!any_zero) return raw;
    const double total = positive_mass;  // zeros contribute nothing to the total
    if (!(zero_mass < total)) throw DataError("zero-replacement floors exceed the vector total");
    const double shrink = (total - zero_mass) / positive_mass;
    std::vector<double> out(d);
    for (std::size_t j = 0; j < d; ++j) {
        if (raw[j] == 0.0) {
            out[j] = strategy.kind == ZeroReplacement::Kind::FixedFloor ? strategy.floor : strategy.part_floors[j];
        } else {
            out[j] = raw[j] * shrink;
        }
    }
    return RawTimeVector(std::move(out), raw.labels());
}

}  // namespace hac24
