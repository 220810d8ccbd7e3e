#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hac24/errors.hpp"
#include "hac24/ingest.hpp"

namespace hac24 {

namespace {

std::string fmt(const char* pattern, double a, double b) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, a, b);
    return buf;
}

struct Moments {
    std::size_t n = 0;
    std::optional<double> mean;
    std::optional<double> sd;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    m.n = v.size();
    if (v.empty()) return m;
    double s = 0.0;
    for (double x : v) s += x;
    m.mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - *m.mean) * (x - *m.mean);
        m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return m;
}

DescriptiveRow count_row(const std::string& variable, const std::string& level, std::size_t count, std::size_t n) {
    DescriptiveRow r;
    r.section = "categorical";
    r.variable = variable;
    r.level = level;
    r.value = static_cast<double>(count);
    r.spread = n ? 100.0 * static_cast<double>(count) / static_cast<double>(n) : 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu (%.1f)", count, *r.spread);
    r.display = buf;
    return r;
}

DescriptiveRow mean_row(const std::string& section, const std::string& variable, const std::vector<double>& v,
                        int digits) {
    const Moments m = moments(v);
    DescriptiveRow r;
    r.section = section;
    r.variable = variable;
    r.level = "-";
    r.value = m.mean;
    r.spread = m.sd;
    const char* pat = digits == 2 ? "%.2f (%.2f)" : "%.1f (%.1f)";
    if (!m.mean) {
        r.display = "NA";
    } else if (!m.sd) {
        char buf[64];
        std::snprintf(buf, sizeof buf, digits == 2 ? "%.2f (NA)" : "%.1f (NA)", *m.mean);
        r.display = buf;
    } else {
        r.display = fmt(pat, *m.mean, *m.sd);
    }
    return r;
}

template <class Get>
void categorical(DescriptiveTable& t, const CohortTable& c, const std::string& variable,
                 const std::vector<std::string>& levels, Get get) {
    std::vector<std::size_t> counts(levels.size(), 0);
    std::size_t missing = 0;
    for (const auto& p : c.persons()) {
        const std::optional<int> v = get(p);
        if (!v) {
            ++missing;
        } else {
            ++counts.at(static_cast<std::size_t>(*v));
        }
    }
    for (std::size_t l = 0; l < levels.size(); ++l) t.rows.push_back(count_row(variable, levels[l], counts[l], c.size()));
    if (missing) t.rows.push_back(count_row(variable, "Missing", missing, c.size()));
}

}  // namespace

double quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw DataError("quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw DataError("quantile probability must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

DescriptiveTable describe(const CohortTable& cohort) {
    DescriptiveTable t;
    t.n = cohort.size();
    categorical(t, cohort, "Age category, years", {"65-74", "75-84", "85+"},
                [](const PersonSummary& p) { return p.covariates.age_group; });
    categorical(t, cohort, "Sex", {"Male", "Female"}, [](const PersonSummary& p) { return p.covariates.female; });
    categorical(t, cohort, "Non-Hispanic White", {"Yes", "No"},
                [](const PersonSummary& p) { return p.covariates.nonwhite; });
    categorical(t, cohort, "Self-rated health", {"Excellent/Very good/Good", "Fair/Poor"},
                [](const PersonSummary& p) { return p.covariates.fair_poor_health; });

    auto collect = [&](auto get) {
        std::vector<double> v;
        for (const auto& p : cohort.persons()) {
            if (const std::optional<double> x = get(p)) v.push_back(*x);
        }
        return v;
    };
    t.rows.push_back(mean_row("continuous", "Body mass index, kg/m2", collect([](const PersonSummary& p) {
                                  return p.covariates.bmi;
                              }), 1));
    t.rows.push_back(mean_row("continuous", "Years of education", collect([](const PersonSummary& p) {
                                  return p.covariates.education_years;
                              }), 1));
    t.rows.push_back(mean_row("continuous", "Depressive symptoms (CES-D)", collect([](const PersonSummary& p) {
                                  return p.covariates.cesd;
                              }), 1));
    t.rows.push_back(mean_row("continuous", "Cognition", collect([](const PersonSummary& p) { return p.cognition; }), 2));

    const char* names[] = {"Sit time, hours/day", "Stand time, hours/day", "Step time, hours/day",
                           "Sleep time, hours/day"};
    for (std::size_t j = 0; j < 4; ++j) {
        std::vector<double> hours;
        for (const auto& p : cohort.persons()) hours.push_back(p.minutes[j] / 60.0);
        t.rows.push_back(mean_row("behavior", names[j], hours, 1));
    }

    DescriptiveRow total;
    total.section = "total";
    total.variable = "Total time, mins/day (median [IQR])";
    total.level = "-";
    if (cohort.empty()) {
        total.display = "NA";
    } else {
        const auto v = cohort.totals();
        total.value = quantile(v, 0.5);
        total.q1 = quantile(v, 0.25);
        total.q3 = quantile(v, 0.75);
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.0f [%.0f, %.0f]", *total.value, *total.q1, *total.q3);
        total.display = buf;
    }
    t.rows.push_back(total);
    return t;
}

}  // namespace hac24
