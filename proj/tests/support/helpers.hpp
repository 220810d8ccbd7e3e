#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hac24/composition.hpp"
#include "hac24/ingest.hpp"

namespace testing {

inline const hac24::Labels& behaviors() { return hac24::canonical_behaviors(); }

inline hac24::Composition random_composition(std::mt19937_64& rng, const hac24::Labels& labels) {
    std::gamma_distribution<double> g(2.0, 1.0);
    std::vector<double> p;
    for (std::size_t i = 0; i < labels.size(); ++i) p.push_back(g(rng) + 1e-3);
    return hac24::Composition(p, labels);
}

// Small complete cohort with a known linear outcome in the raw minutes.
inline hac24::CohortTable toy_cohort(std::size_t n, std::uint64_t seed, double noise = 0.3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<hac24::PersonSummary> persons;
    for (std::size_t i = 0; i < n; ++i) {
        hac24::PersonSummary p;
        p.id = "T" + std::to_string(i + 1);
        const double sit = std::clamp(600 + 90 * z(rng), 60.0, 900.0), stand = std::clamp(220 + 50 * z(rng), 10.0, 380.0), step = 80 + 25 * std::abs(z(rng)) + 5;
        const double total = 1440 + 6 * z(rng);
        p.minutes = {sit, stand, step, total - sit - stand - step};
        p.total_min = total;
        p.covariates.age_group = static_cast<int>(i % 3);
        p.covariates.female = static_cast<int>(i % 2);
        p.covariates.nonwhite = i % 7 == 0 ? 1 : 0;
        p.covariates.education_years = 12 + static_cast<double>(i % 9);
        p.covariates.bmi = 24 + 4 * z(rng);
        p.covariates.cesd = std::abs(3 * z(rng));
        p.covariates.fair_poor_health = i % 11 == 0 ? 1 : 0;
        p.cognition = 0.5 + 0.004 * step - 0.0005 * sit + 0.05 * std::log(step) + 0.03 * *p.covariates.education_years +
                      noise * z(rng);
        p.valid_days = 7;
        persons.push_back(std::move(p));
    }
    return hac24::CohortTable(std::move(persons));
}

// Same persons with the outcome replaced by f(person) + noise_sd * N(0, 1).
template <class F>
hac24::CohortTable with_outcome(const hac24::CohortTable& cohort, std::uint64_t seed, double noise_sd, F&& f) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<hac24::PersonSummary> persons = cohort.persons();
    for (auto& p : persons) p.cognition = f(p) + noise_sd * z(rng);
    return hac24::CohortTable(std::move(persons), cohort.zero_strategy());
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace testing
