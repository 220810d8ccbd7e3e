#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "hac24/errors.hpp"
#include "hac24/ingest.hpp"
#include "ingest/csv.hpp"

namespace hac24 {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<double> number_list(const std::string& value) {
    std::vector<double> out;
    for (const auto& f : csv::split(value)) {
        const auto v = csv::parse_double(trim(f));
        if (!v) throw DataError("empty entry in list '" + value + "'");
        out.push_back(*v);
    }
    return out;
}

template <std::size_t N>
std::array<double, N> fixed_list(const std::string& value) {
    const auto v = number_list(value);
    if (v.size() != N) throw DataError("expected " + std::to_string(N) + " values, got " + std::to_string(v.size()));
    std::array<double, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

std::string join(std::span<const double> v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : ", ") + format_number(x);
    return s;
}

Eigen::Matrix3d profile_covariance(const SimulationSpec::ProfileSpec& p) {
    const auto& s = p.sd_hours;
    const auto& r = p.correlation;
    Eigen::Matrix3d c;
    c << s[0] * s[0], r[0] * s[0] * s[1], r[1] * s[0] * s[2],
         r[0] * s[0] * s[1], s[1] * s[1], r[2] * s[1] * s[2],
         r[1] * s[0] * s[2], r[2] * s[1] * s[2], s[2] * s[2];
    return c;
}

std::string timestamp(double minutes_since_epoch) {
    const auto secs = static_cast<long long>(std::llround(minutes_since_epoch * 60.0));
    const long long day = secs >= 0 ? secs / 86400 : (secs - 86399) / 86400;
    const long long rem = secs - day * 86400;
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
    char buf[80];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 3600, (rem / 60) % 60,
                  rem % 60);
    return buf;
}

void check_spec(const SimulationSpec& spec) {
    if (spec.profiles.empty()) throw DataError("simulation spec defines no profiles");
    double w = 0.0;
    for (std::size_t k = 0; k < spec.profiles.size(); ++k) {
        const auto& p = spec.profiles[k];
        if (!(p.weight > 0.0)) throw DataError("profile " + std::to_string(k + 1) + " needs a positive weight");
        w += p.weight;
        for (double s : p.sd_hours) {
            if (!(s > 0.0)) throw DataError("profile " + std::to_string(k + 1) + " needs positive SDs");
        }
        Eigen::LLT<Eigen::Matrix3d> llt(profile_covariance(p));
        if (llt.info() != Eigen::Success) {
            throw DataError("profile " + std::to_string(k + 1) + " correlations do not form a valid matrix");
        }
    }
    if (std::abs(w - 1.0) > 1e-3) throw DataError("profile weights sum to " + format_number(w) + ", not 1");
    if (!spec.class_effects.empty() && spec.class_effects.size() != spec.profiles.size()) {
        throw DataError("one outcome effect per profile is needed");
    }
    if (!(spec.day_length_mean > 0.0) || spec.day_length_sd < 0.0) throw DataError("invalid day length distribution");
    if (spec.days_per_person < kMinValidDays) {
        throw DataError("days.per_person must be at least " + std::to_string(kMinValidDays));
    }
}

}  // namespace

SimulationSpec default_simulation_spec() {
    SimulationSpec s;
    // sit, stand, step in hours/day; correlations sit-stand, sit-step, stand-step
    s.profiles = {
        {0.159, {7.6, 5.8, 1.9}, {1.4, 1.8, 0.8}, {-0.8, -0.1, -0.2}},
        {0.244, {9.6, 4.7, 1.7}, {1.6, 1.1, 0.5}, {-0.7, -0.3, -0.2}},
        {0.403, {10.3, 3.5, 1.3}, {1.3, 0.9, 0.4}, {-0.8, -0.5, 0.3}},
        {0.194, {12.1, 2.4, 0.7}, {1.7, 1.0, 0.3}, {-0.6, -0.4, 0.7}},
    };
    s.class_effects = {-0.048, 0.018, 0.0, -0.239};
    s.outcome_coefficients = {
        {"age_75_84", -0.15}, {"age_85plus", -0.45}, {"education", 0.06}, {"cesd", -0.02}, {"fair_poor_health", -0.2},
    };
    s.outcome_intercept = -0.12;
    s.outcome_noise_sd = 0.645;
    s.missing_bmi_prob = 0.019;
    s.missing_cesd_prob = 0.009;
    return s;
}

SimulationSpec parse_simulation_spec(std::istream& in) {
    SimulationSpec s;
    std::string line;
    std::size_t lineno = 0;
    int declared = -1;
    auto profile = [&](std::size_t idx) -> SimulationSpec::ProfileSpec& {
        if (idx < 1 || idx > 64) throw DataError("profile index out of range");
        if (s.profiles.size() < idx) s.profiles.resize(idx);
        return s.profiles[idx - 1];
    };
    std::vector<std::pair<std::size_t, double>> effects;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw DataError("expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            auto num = [&]() {
                const auto v = csv::parse_double(value);
                if (!v) throw DataError("missing value");
                return *v;
            };
            if (key == "profiles") {
                declared = static_cast<int>(num());
            } else if (key.rfind("profile.", 0) == 0) {
                const auto dot = key.find('.', 8);
                if (dot == std::string::npos) throw DataError("expected profile.<i>.<field>");
                const auto idx = static_cast<std::size_t>(std::stoul(key.substr(8, dot - 8)));
                const std::string field = key.substr(dot + 1);
                auto& p = profile(idx);
                if (field == "weight") p.weight = num();
                else if (field == "mean") p.mean_hours = fixed_list<3>(value);
                else if (field == "sd") p.sd_hours = fixed_list<3>(value);
                else if (field == "corr") p.correlation = fixed_list<3>(value);
                else if (field == "effect") effects.emplace_back(idx, num());
                else throw DataError("unknown profile field '" + field + "'");
            } else if (key == "day_length.mean") {
                s.day_length_mean = num();
            } else if (key == "day_length.sd") {
                s.day_length_sd = num();
            } else if (key == "age_group.probs") {
                s.age_group_probs = fixed_list<3>(value);
            } else if (key == "female.prob") {
                s.female_prob = num();
            } else if (key == "nonwhite.prob") {
                s.nonwhite_prob = num();
            } else if (key == "education.mean") {
                s.education_mean = num();
            } else if (key == "education.sd") {
                s.education_sd = num();
            } else if (key == "bmi.mean") {
                s.bmi_mean = num();
            } else if (key == "bmi.sd") {
                s.bmi_sd = num();
            } else if (key == "bmi.missing") {
                s.missing_bmi_prob = num();
            } else if (key == "cesd.mean") {
                s.cesd_mean = num();
            } else if (key == "cesd.sd") {
                s.cesd_sd = num();
            } else if (key == "cesd.missing") {
                s.missing_cesd_prob = num();
            } else if (key == "health.fair_poor.prob") {
                s.fair_poor_health_prob = num();
            } else if (key == "outcome.intercept") {
                s.outcome_intercept = num();
            } else if (key == "outcome.noise_sd") {
                s.outcome_noise_sd = num();
            } else if (key.rfind("outcome.coef.", 0) == 0) {
                s.outcome_coefficients[key.substr(13)] = num();
            } else if (key == "days.per_person") {
                s.days_per_person = static_cast<int>(num());
            } else if (key == "days.invalid_prob") {
                s.invalid_day_prob = num();
            } else if (key == "rejection.max_rate") {
                s.max_rejection_rate = num();
            } else {
                throw DataError("unknown key '" + key + "'");
            }
        } catch (const DataError& e) {
            throw DataError("simulation spec line " + std::to_string(lineno) + ": " + e.what());
        } catch (const std::logic_error&) {
            throw DataError("simulation spec line " + std::to_string(lineno) + ": malformed profile index");
        }
    }
    if (declared >= 0 && static_cast<std::size_t>(declared) != s.profiles.size()) {
        throw DataError("spec declares " + std::to_string(declared) + " profiles but defines " +
                        std::to_string(s.profiles.size()));
    }
    if (!effects.empty()) {
        s.class_effects.assign(s.profiles.size(), 0.0);
        for (const auto& [idx, v] : effects) s.class_effects[idx - 1] = v;
    }
    check_spec(s);
    return s;
}

SimulationSpec load_simulation_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return parse_simulation_spec(in);
}

void write_simulation_spec(std::ostream& out, const SimulationSpec& s) {
    out << "profiles = " << s.profiles.size() << '\n';
    for (std::size_t k = 0; k < s.profiles.size(); ++k) {
        const auto& p = s.profiles[k];
        const std::string pre = "profile." + std::to_string(k + 1) + ".";
        out << pre << "weight = " << format_number(p.weight) << '\n'
            << pre << "mean = " << join(p.mean_hours) << '\n'
            << pre << "sd = " << join(p.sd_hours) << '\n'
            << pre << "corr = " << join(p.correlation) << '\n';
        if (!s.class_effects.empty()) out << pre << "effect = " << format_number(s.class_effects[k]) << '\n';
    }
    out << "day_length.mean = " << format_number(s.day_length_mean) << '\n'
        << "day_length.sd = " << format_number(s.day_length_sd) << '\n'
        << "age_group.probs = " << join(s.age_group_probs) << '\n'
        << "female.prob = " << format_number(s.female_prob) << '\n'
        << "nonwhite.prob = " << format_number(s.nonwhite_prob) << '\n'
        << "education.mean = " << format_number(s.education_mean) << '\n'
        << "education.sd = " << format_number(s.education_sd) << '\n'
        << "bmi.mean = " << format_number(s.bmi_mean) << '\n'
        << "bmi.sd = " << format_number(s.bmi_sd) << '\n'
        << "bmi.missing = " << format_number(s.missing_bmi_prob) << '\n'
        << "cesd.mean = " << format_number(s.cesd_mean) << '\n'
        << "cesd.sd = " << format_number(s.cesd_sd) << '\n'
        << "cesd.missing = " << format_number(s.missing_cesd_prob) << '\n'
        << "health.fair_poor.prob = " << format_number(s.fair_poor_health_prob) << '\n'
        << "outcome.intercept = " << format_number(s.outcome_intercept) << '\n'
        << "outcome.noise_sd = " << format_number(s.outcome_noise_sd) << '\n';
    for (const auto& [k, v] : s.outcome_coefficients) out << "outcome.coef." << k << " = " << format_number(v) << '\n';
    out << "days.per_person = " << s.days_per_person << '\n'
        << "days.invalid_prob = " << format_number(s.invalid_day_prob) << '\n'
        << "rejection.max_rate = " << format_number(s.max_rejection_rate) << '\n';
}

SimulatedCohort simulate_cohort(const SimulationSpec& spec, std::size_t n, std::uint64_t seed, bool with_days) {
    check_spec(spec);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u;
    std::vector<double> weights;
    std::vector<Eigen::Matrix3d> chol;
    for (const auto& p : spec.profiles) {
        weights.push_back(p.weight);
        chol.push_back(Eigen::LLT<Eigen::Matrix3d>(profile_covariance(p)).matrixL());
    }
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    std::discrete_distribution<int> age(spec.age_group_probs.begin(), spec.age_group_probs.end());
    const double cesd_shape = spec.cesd_sd > 0.0 ? (spec.cesd_mean / spec.cesd_sd) * (spec.cesd_mean / spec.cesd_sd) : 0.0;
    std::gamma_distribution<double> cesd(cesd_shape > 0.0 ? cesd_shape : 1.0,
                                         cesd_shape > 0.0 ? spec.cesd_sd * spec.cesd_sd / spec.cesd_mean : 1.0);

    std::size_t attempts = 0, rejected = 0;
    std::vector<PersonSummary> persons;
    std::vector<DayRecord> days;
    const double day_zero = parse_timestamp_minutes("2016-01-04T07:00");
    const int width = std::max(4, static_cast<int>(std::to_string(n).size()));

    for (std::size_t i = 0; i < n; ++i) {
        PersonSummary p;
        const std::string num = std::to_string(i + 1);
        p.id = "P" + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(width, num.size()), '0') + num;
        const int k = pick(rng);
        p.true_class = k;
        const auto& prof = spec.profiles[static_cast<std::size_t>(k)];
        Eigen::Vector3d hours;
        for (;;) {
            ++attempts;
            const Eigen::Vector3d e(z(rng), z(rng), z(rng));
            hours = Eigen::Vector3d(prof.mean_hours[0], prof.mean_hours[1], prof.mean_hours[2]) +
                    chol[static_cast<std::size_t>(k)] * e;
            if (hours.minCoeff() > 0.0 && hours.sum() < 24.0) break;
            ++rejected;
            if (attempts >= 1000 &&
                static_cast<double>(rejected) / static_cast<double>(attempts) > spec.max_rejection_rate) {
                throw DataError("simulation spec is infeasible: rejection rate above " +
                                format_number(100.0 * spec.max_rejection_rate) + "%");
            }
        }
        const double length = spec.day_length_mean + spec.day_length_sd * z(rng);
        if (!(length > 0.0)) throw DataError("simulated a non-positive day length");
        const std::array<double, 4> frac{hours(0) / 24.0, hours(1) / 24.0, hours(2) / 24.0, 1.0 - hours.sum() / 24.0};
        p.minutes.resize(4);
        for (std::size_t j = 0; j < 4; ++j) p.minutes[j] = frac[j] * length;
        p.total_min = length;
        p.valid_days = spec.days_per_person;

        Covariates& c = p.covariates;
        c.age_group = age(rng);
        c.female = u(rng) < spec.female_prob ? 1 : 0;
        c.nonwhite = u(rng) < spec.nonwhite_prob ? 1 : 0;
        c.education_years = std::max(0.0, std::round(spec.education_mean + spec.education_sd * z(rng)));
        const double bmi = std::max(12.0, spec.bmi_mean + spec.bmi_sd * z(rng));
        const double dep = cesd_shape > 0.0 ? cesd(rng) : spec.cesd_mean;
        c.fair_poor_health = u(rng) < spec.fair_poor_health_prob ? 1 : 0;
        const bool drop_bmi = u(rng) < spec.missing_bmi_prob;
        const bool drop_cesd = u(rng) < spec.missing_cesd_prob;

        // Outcome uses the complete covariate values; missingness is applied after.
        std::map<std::string, double> cols{{"age_75_84", *c.age_group == 1 ? 1.0 : 0.0},
                                           {"age_85plus", *c.age_group == 2 ? 1.0 : 0.0},
                                           {"female", static_cast<double>(*c.female)},
                                           {"nonwhite", static_cast<double>(*c.nonwhite)},
                                           {"education", *c.education_years},
                                           {"bmi", bmi},
                                           {"cesd", dep},
                                           {"fair_poor_health", static_cast<double>(*c.fair_poor_health)}};
        for (std::size_t j = 0; j < 4; ++j) cols[canonical_behaviors()[j]] = p.minutes[j];
        double y = spec.outcome_intercept + spec.outcome_noise_sd * z(rng);
        if (!spec.class_effects.empty()) y += spec.class_effects[static_cast<std::size_t>(k)];
        for (const auto& [name, beta] : spec.outcome_coefficients) {
            const auto it = cols.find(name);
            if (it == cols.end()) throw DataError("outcome coefficient for unknown column '" + name + "'");
            y += beta * it->second;
        }
        p.cognition = y;
        if (!drop_bmi) c.bmi = bmi;
        if (!drop_cesd) c.cesd = dep;

        if (with_days) {
            // Day-to-day variation with zero mean over the valid days, so the
            // valid-day averages reproduce the person's values.
            const int nd = spec.days_per_person;
            Eigen::MatrixXd noise(nd, 4);
            for (int d = 0; d < nd; ++d) {
                for (int j = 0; j < 4; ++j) noise(d, j) = 0.08 * z(rng);
            }
            noise.rowwise() -= noise.colwise().mean();
            double start = day_zero;
            std::vector<DayRecord> mine;
            for (int d = 0; d < nd; ++d) {
                DayRecord r;
                r.person_id = p.id;
                const std::string ts = timestamp(start);
                r.date = ts.substr(0, 10);
                std::array<double, 4> m{};
                for (std::size_t j = 0; j < 4; ++j) {
                    m[j] = p.minutes[j] * std::max(0.05, 1.0 + noise(d, static_cast<Eigen::Index>(j)));
                    m[j] = std::round(m[j] * 60.0) / 60.0;  // whole seconds
                }
                r.sit_min = m[0];
                r.stand_min = m[1];
                r.step_min = m[2];
                const double waking = m[0] + m[1] + m[2];
                r.in_bed = timestamp(start + waking);
                r.out_bed = timestamp(start + waking + m[3]);
                r.wear_min = std::round(waking * 60.0) / 60.0;
                r.sleep_min = parse_timestamp_minutes(r.out_bed) - parse_timestamp_minutes(r.in_bed);
                r.total_min = waking + r.sleep_min;
                start = parse_timestamp_minutes(r.out_bed);
                mine.push_back(r);
            }
            // A few extra short-wear days that the validity filter removes.
            if (u(rng) < spec.invalid_day_prob) {
                DayRecord r = mine.back();
                const std::string ts = timestamp(start);
                r.date = ts.substr(0, 10);
                r.wear_min = std::round((300.0 + 200.0 * u(rng)) * 60.0) / 60.0;
                r.sit_min = r.wear_min;
                r.stand_min = 0.0;
                r.step_min = 0.0;
                r.in_bed = timestamp(start + r.wear_min);
                r.out_bed = timestamp(start + 1440.0);
                r.sleep_min = parse_timestamp_minutes(r.out_bed) - parse_timestamp_minutes(r.in_bed);
                r.total_min = r.wear_min + r.sleep_min;
                mine.push_back(r);
            }
            std::vector<DayRecord> valid;
            for (auto& r : mine) {
                r.valid = is_valid_day(r.wear_min);
                if (r.valid) valid.push_back(r);
            }
            if (static_cast<int>(valid.size()) >= kMinValidDays) {
                CovariateTable one{{p.id, CovariateRecord{p.covariates, p.cognition}}};
                PersonSummary agg = aggregate_person(valid, one);
                agg.true_class = p.true_class;
                p = std::move(agg);
            }
            days.insert(days.end(), mine.begin(), mine.end());
        }
        persons.push_back(std::move(p));
    }
    SimulatedCohort out{CohortTable(std::move(persons)), std::move(days), 0.0};
    out.rejection_rate = attempts ? static_cast<double>(rejected) / static_cast<double>(attempts) : 0.0;
    return out;
}

}  // namespace hac24
