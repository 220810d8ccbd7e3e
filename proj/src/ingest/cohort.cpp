#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hac24/errors.hpp"
#include "hac24/ingest.hpp"
#include "ingest/csv.hpp"

namespace hac24 {

namespace {

const std::array<const char*, 3> kAgeLabels{"65-74", "75-84", "85+"};

std::optional<int> parse_flag(const std::string& text, const char* name) {
    const auto v = csv::parse_int(text);
    if (v && *v != 0 && *v != 1) throw DataError(std::string(name) + " must be 0 or 1");
    return v;
}

template <class T>
std::string opt(const std::optional<T>& v) {
    if (!v) return "";
    if constexpr (std::is_same_v<T, int>) {
        return std::to_string(*v);
    } else {
        return format_number(*v);
    }
}

bool has_field(const PersonSummary& p, const std::string& name) {
    const Covariates& c = p.covariates;
    if (name == "age") return c.age_group.has_value();
    if (name == "sex") return c.female.has_value();
    if (name == "race") return c.nonwhite.has_value();
    if (name == "education") return c.education_years.has_value();
    if (name == "bmi") return c.bmi.has_value();
    if (name == "cesd") return c.cesd.has_value();
    if (name == "health") return c.fair_poor_health.has_value();
    if (name == "cognition") return p.cognition.has_value();
    throw DataError("unknown covariate '" + name + "' (age, sex, race, education, bmi, cesd, health, cognition)");
}

}  // namespace

namespace csv {

Covariates parse_covariates(const std::vector<std::string>& f, std::size_t first) {
    Covariates c;
    const std::string& age = f[first];
    if (!age.empty()) {
        const auto it = std::find(kAgeLabels.begin(), kAgeLabels.end(), age);
        if (it == kAgeLabels.end()) throw DataError("age_group must be 65-74, 75-84 or 85+; got '" + age + "'");
        c.age_group = static_cast<int>(it - kAgeLabels.begin());
    }
    c.female = parse_flag(f[first + 1], "female");
    c.nonwhite = parse_flag(f[first + 2], "nonwhite");
    c.education_years = parse_double(f[first + 3]);
    c.bmi = parse_double(f[first + 4]);
    c.cesd = parse_double(f[first + 5]);
    c.fair_poor_health = parse_flag(f[first + 6], "fair_poor_health");
    return c;
}

std::string format_covariates(const Covariates& c) {
    std::string out = c.age_group ? kAgeLabels.at(static_cast<std::size_t>(*c.age_group)) : "";
    out += ',' + opt(c.female) + ',' + opt(c.nonwhite) + ',' + opt(c.education_years) + ',' + opt(c.bmi) + ',' +
           opt(c.cesd) + ',' + opt(c.fair_poor_health);
    return out;
}

}  // namespace csv

RawTimeVector PersonSummary::raw() const { return RawTimeVector(minutes, canonical_behaviors()); }

CohortTable::CohortTable(std::vector<PersonSummary> persons, ZeroReplacement zeros)
    : persons_(std::move(persons)), zeros_(std::move(zeros)) {
    std::set<std::string> seen;
    auto labels = std::make_shared<const Labels>(canonical_behaviors());
    compositions_.reserve(persons_.size());
    for (const auto& p : persons_) {
        if (!seen.insert(p.id).second) throw DataError("duplicate person id '" + p.id + "'");
        if (p.minutes.size() != labels->size()) throw DataError("person '" + p.id + "' needs 4 behavior values");
        for (double m : p.minutes) {
            if (!(m >= 0.0) || !std::isfinite(m)) throw DataError("person '" + p.id + "' has negative minutes");
        }
        const RawTimeVector fixed = replace_zeros(p.raw(), zeros_);
        const double total = fixed.total();
        std::vector<double> parts(fixed.minutes());
        for (auto& v : parts) v /= total;
        compositions_.emplace_back(std::move(parts), labels);
    }
}

std::vector<double> CohortTable::behavior_minutes(const std::string& behavior) const {
    const Labels& b = behaviors();
    const auto it = std::find(b.begin(), b.end(), behavior);
    if (it == b.end()) throw DataError("unknown behavior '" + behavior + "'");
    const auto j = static_cast<std::size_t>(it - b.begin());
    std::vector<double> out;
    out.reserve(persons_.size());
    for (const auto& p : persons_) out.push_back(p.minutes[j]);
    return out;
}

std::vector<double> CohortTable::totals() const {
    std::vector<double> out;
    out.reserve(persons_.size());
    for (const auto& p : persons_) out.push_back(p.total_min);
    return out;
}

Eigen::VectorXd CohortTable::cognition() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(persons_.size()));
    for (std::size_t i = 0; i < persons_.size(); ++i) {
        if (!persons_[i].cognition) throw DataError("person '" + persons_[i].id + "' has no outcome value");
        y(static_cast<Eigen::Index>(i)) = *persons_[i].cognition;
    }
    return y;
}

CohortTable CohortTable::subset(const std::vector<std::size_t>& rows) const {
    std::vector<PersonSummary> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(persons_.at(r));
    return CohortTable(std::move(out), zeros_);
}

const std::vector<std::string>& known_covariates() {
    static const std::vector<std::string> names{"age", "sex", "race", "education", "bmi", "cesd", "health"};
    return names;
}

CovariateColumns covariate_columns(const CohortTable& cohort, std::span<const std::string> names) {
    CovariateColumns out;
    const auto n = static_cast<Eigen::Index>(cohort.size());
    std::vector<Eigen::VectorXd> cols;
    auto missing = [&](const PersonSummary& p, const std::string& name) {
        return DataError("person '" + p.id + "' is missing " + name + " (apply complete_case first)");
    };
    for (const auto& name : names) {
        if (name == "age") {
            Eigen::VectorXd a(n), b(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto& p = cohort[static_cast<std::size_t>(i)];
                if (!p.covariates.age_group) throw missing(p, name);
                a(i) = *p.covariates.age_group == 1 ? 1.0 : 0.0;
                b(i) = *p.covariates.age_group == 2 ? 1.0 : 0.0;
            }
            cols.push_back(a);
            cols.push_back(b);
            out.columns.push_back("age_75_84");
            out.columns.push_back("age_85plus");
            continue;
        }
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& p = cohort[static_cast<std::size_t>(i)];
            const Covariates& c = p.covariates;
            std::optional<double> x;
            if (name == "sex") {
                if (c.female) x = *c.female;
            } else if (name == "race") {
                if (c.nonwhite) x = *c.nonwhite;
            } else if (name == "education") {
                x = c.education_years;
            } else if (name == "bmi") {
                x = c.bmi;
            } else if (name == "cesd") {
                x = c.cesd;
            } else if (name == "health") {
                if (c.fair_poor_health) x = *c.fair_poor_health;
            } else {
                throw DataError("unknown covariate '" + name + "' (age, sex, race, education, bmi, cesd, health)");
            }
            if (!x) throw missing(p, name);
            v(i) = *x;
        }
        cols.push_back(v);
        if (name == "sex") out.columns.push_back("female");
        else if (name == "race") out.columns.push_back("nonwhite");
        else if (name == "health") out.columns.push_back("fair_poor_health");
        else out.columns.push_back(name);
    }
    out.values.resize(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.values.col(static_cast<Eigen::Index>(j)) = cols[j];
    return out;
}

double ExclusionReport::percent() const {
    return n_before == 0 ? 0.0 : 100.0 * static_cast<double>(n_excluded) / static_cast<double>(n_before);
}

std::string ExclusionReport::summary() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "excluding %zu (%.1f%%) with missing covariates", n_excluded, percent());
    return buf;
}

CompleteCase complete_case(const CohortTable& cohort, std::span<const std::string> required) {
    ExclusionReport report;
    report.n_before = cohort.size();
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto& p = cohort[i];
        bool ok = true;
        for (const auto& name : required) {
            if (!has_field(p, name)) {
                ++report.missing_by_field[name];
                ok = false;
            }
        }
        if (ok) {
            keep.push_back(i);
        } else {
            report.excluded_ids.push_back(p.id);
        }
    }
    report.n_excluded = report.excluded_ids.size();
    return {cohort.subset(keep), std::move(report)};
}

std::vector<PersonSummary> parse_cohort_csv(std::istream& in) {
    csv::expect_header(in, kCohortCsvHeader, "cohort file");
    std::vector<PersonSummary> out;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        try {
            const auto f = csv::split(line);
            if (f.size() != 16) throw DataError("expected 16 fields, found " + std::to_string(f.size()));
            PersonSummary p;
            p.id = f[0];
            if (p.id.empty()) throw DataError("empty person_id");
            const auto vd = csv::parse_int(f[1]);
            p.valid_days = vd.value_or(0);
            for (std::size_t j = 0; j < 4; ++j) {
                const auto v = csv::parse_double(f[2 + j]);
                if (!v) throw DataError("missing behavior minutes");
                if (*v < 0.0) throw DataError("negative behavior minutes");
                p.minutes.push_back(*v);
            }
            const auto total = csv::parse_double(f[6]);
            double sum = 0.0;
            for (double m : p.minutes) sum += m;
            p.total_min = total.value_or(sum);
            p.covariates = csv::parse_covariates(f, 7);
            p.cognition = csv::parse_double(f[14]);
            if (const auto tc = csv::parse_int(f[15])) {
                if (*tc < 1) throw DataError("true_class is 1-based");
                p.true_class = *tc - 1;
            }
            out.push_back(std::move(p));
        } catch (const DataError& e) {
            throw DataError("cohort file line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

CohortTable load_cohort_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return CohortTable(parse_cohort_csv(in));
}

void write_cohort_csv(std::ostream& out, const CohortTable& cohort) {
    out << kCohortCsvHeader << '\n';
    for (const auto& p : cohort.persons()) {
        out << p.id << ',' << p.valid_days;
        for (double m : p.minutes) out << ',' << format_number(m);
        out << ',' << format_number(p.total_min) << ',' << csv::format_covariates(p.covariates) << ','
            << opt(p.cognition) << ',' << (p.true_class ? std::to_string(*p.true_class + 1) : "") << '\n';
    }
}

}  // namespace hac24
