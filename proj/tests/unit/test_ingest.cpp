#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hac24/errors.hpp"
#include "hac24/ingest.hpp"

using namespace hac24;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

DayRecord day(const std::string& id, const std::string& date, double wear) {
    DayRecord r;
    r.person_id = id;
    r.date = date;
    r.sit_min = wear * 0.7;
    r.stand_min = wear * 0.2;
    r.step_min = wear * 0.1;
    r.wear_min = wear;
    r.in_bed = date + "T22:00";
    r.out_bed = date + "T23:00";
    r.sleep_min = 480.0;
    r.total_min = wear + 480.0;
    return r;
}

std::string dated(int d) { return "2016-03-" + std::string(d < 10 ? "0" : "") + std::to_string(d); }

PersonSummary person(const std::string& id, std::vector<double> minutes) {
    PersonSummary p;
    p.id = id;
    p.minutes = std::move(minutes);
    p.total_min = 0.0;
    for (double m : p.minutes) p.total_min += m;
    p.valid_days = 7;
    return p;
}

const DescriptiveRow& row(const DescriptiveTable& t, const std::string& variable) {
    for (const auto& r : t.rows) {
        if (r.variable == variable) return r;
    }
    FAIL("no row " << variable);
    return t.rows.front();
}

}  // namespace

TEST_CASE("wear and day-count thresholds") {
    CHECK_FALSE(is_valid_day(599.0));
    CHECK(is_valid_day(600.0));
    CHECK(is_valid_day(601.0));
    CHECK_FALSE(is_retained(3));
    CHECK(is_retained(4));

    std::vector<DayRecord> days;
    for (int d = 1; d <= 3; ++d) days.push_back(day("X", dated(d), 700.0));
    for (int d = 4; d <= 7; ++d) days.push_back(day("X", dated(d), 599.0));
    for (int d = 1; d <= 4; ++d) days.push_back(day("Y", dated(d), 600.0));
    days.push_back(day("Y", dated(5), 100.0));
    const auto v = validate_days(days);
    CHECK(v.valid_day_count.at("X") == 3);
    CHECK(v.valid_day_count.at("Y") == 4);
    REQUIRE(v.retained.size() == 1);
    CHECK(v.retained[0] == "Y");
    CHECK(v.records[7].valid);
    CHECK_FALSE(v.records[6].valid);
    CHECK_FALSE(v.records[11].valid);
}

TEST_CASE("day file round trip is byte stable") {
    const std::string path = std::string(HAC24_SOURCE_DIR) + "/tests/golden/days_small.csv";
    const std::string text = slurp(path);
    const DayLoad load = load_day_csv(path);
    CHECK(load.errors.empty());
    REQUIRE(load.records.size() == 4);
    CHECK(load.records[0].sleep_min == doctest::Approx(8 * 60 + 15));
    CHECK(load.records[1].sleep_min == doctest::Approx(8 * 60 + 30.5));
    CHECK(load.records[0].total_min == doctest::Approx(601.5 + 210.25 + 95 + 495));
    std::ostringstream out;
    write_day_csv(out, load.records);
    CHECK(out.str() == text);
    std::istringstream again(out.str());
    std::ostringstream twice;
    write_day_csv(twice, parse_day_csv(again).records);
    CHECK(twice.str() == text);
}

TEST_CASE("bad day rows are reported with their line") {
    std::istringstream in(std::string(kDayCsvHeader) +
                          "\nA,2016-03-01,600,100,50,2016-03-01T22:00,2016-03-02T06:00,750"
                          "\nA,2016-03-02,-5,100,50,2016-03-02T22:00,2016-03-03T06:00,750"
                          "\nA,2016-03-03,600,100,50,2016-03-03T22:00,2016-03-03T21:00,750"
                          "\nA,2016-02-30,600,100,50,2016-03-03T22:00,2016-03-04T06:00,750\n");
    const DayLoad load = parse_day_csv(in);
    CHECK(load.records.size() == 1);
    REQUIRE(load.errors.size() == 3);
    CHECK(load.errors[0].line == 3);
    CHECK(load.errors[0].message.find("sit_min is negative") != std::string::npos);
    CHECK(load.errors[1].line == 4);
    CHECK(load.errors[2].line == 5);

    std::istringstream header_only(std::string(kDayCsvHeader) + "\n");
    const DayLoad empty = parse_day_csv(header_only);
    CHECK(empty.records.empty());
    CHECK(empty.errors.empty());

    std::istringstream wrong("person_id,date,sit_min\n");
    CHECK_THROWS_AS(parse_day_csv(wrong), DataError);
    std::istringstream nothing("");
    CHECK_THROWS_AS(parse_day_csv(nothing), DataError);
}

TEST_CASE("timestamps") {
    CHECK(parse_timestamp_minutes("1970-01-01T00:00") == 0.0);
    CHECK(parse_timestamp_minutes("1970-01-02T01:30") == 1440.0 + 90.0);
    CHECK(parse_timestamp_minutes("1970-01-01 00:00:30") == 0.5);
    CHECK(parse_timestamp_minutes("2016-03-01T00:00") - parse_timestamp_minutes("2016-02-28T00:00") == 2 * 1440.0);
    CHECK_THROWS_AS(parse_timestamp_minutes("2016-03-01"), DataError);
    CHECK_THROWS_AS(parse_timestamp_minutes("2016-03-01T25:00"), DataError);
    CHECK_THROWS_AS(parse_timestamp_minutes("2016-03-01T10:00x"), DataError);
}

TEST_CASE("person means over valid days") {
    CovariateTable cov{{"X", CovariateRecord{}}};
    std::vector<DayRecord> two{day("X", dated(1), 600.0), day("X", dated(2), 400.0)};
    const PersonSummary p = aggregate_person(two, cov);
    CHECK(p.minutes[0] == doctest::Approx(500.0 * 0.7));
    CHECK(p.minutes[3] == doctest::Approx(480.0));
    CHECK(p.total_min == doctest::Approx(980.0));
    CHECK(p.valid_days == 2);

    const std::vector<DayRecord> one{day("X", dated(3), 812.0)};
    const PersonSummary q = aggregate_person(one, cov);
    CHECK(q.minutes[0] == one[0].sit_min);
    CHECK(q.minutes[1] == one[0].stand_min);
    CHECK(q.minutes[2] == one[0].step_min);
    CHECK(q.total_min == one[0].total_min);

    CHECK_THROWS_AS(aggregate_person(std::vector<DayRecord>{}, cov), DataError);
    const std::vector<DayRecord> stranger{day("Z", dated(1), 700.0)};
    CHECK_THROWS_AS(aggregate_person(stranger, cov), DataError);
}

TEST_CASE("aggregate_cohort uses only valid days of retained persons") {
    std::vector<DayRecord> days;
    for (int d = 1; d <= 4; ++d) days.push_back(day("Y", dated(d), 600.0 + 100.0 * d));
    days.push_back(day("Y", dated(5), 200.0));
    for (int d = 1; d <= 3; ++d) days.push_back(day("X", dated(d), 900.0));
    CovariateTable cov{{"X", {}}, {"Y", {}}};
    const auto persons = aggregate_cohort(validate_days(days), cov);
    REQUIRE(persons.size() == 1);
    CHECK(persons[0].id == "Y");
    CHECK(persons[0].valid_days == 4);
    CHECK(persons[0].minutes[0] == doctest::Approx(0.7 * 850.0));
}

TEST_CASE("complete-case exclusion report") {
    std::vector<PersonSummary> ps;
    for (int i = 0; i < 40; ++i) {
        PersonSummary p = person("P" + std::to_string(i), {600, 200, 100, 540});
        p.covariates.age_group = 0;
        p.covariates.bmi = 25.0;
        p.covariates.cesd = 2.0;
        p.cognition = 0.1;
        if (i < 2) p.covariates.bmi.reset();
        if (i == 2) p.covariates.cesd.reset();
        if (i == 3) p.cognition.reset();
        ps.push_back(p);
    }
    const CohortTable cohort(ps);
    const std::vector<std::string> req{"age", "bmi", "cesd"};
    const CompleteCase cc = complete_case(cohort, req);
    CHECK(cc.cohort.size() == 37);
    CHECK(cc.report.n_before == 40);
    CHECK(cc.report.n_excluded == 3);
    CHECK(cc.report.missing_by_field.at("bmi") == 2);
    CHECK(cc.report.missing_by_field.at("cesd") == 1);
    CHECK(cc.report.percent() == doctest::Approx(7.5));
    CHECK(cc.report.summary() == "excluding 3 (7.5%) with missing covariates");

    const std::vector<std::string> with_y{"bmi", "cognition"};
    CHECK(complete_case(cohort, with_y).cohort.size() == 37);
    const std::vector<std::string> bogus{"height"};
    CHECK_THROWS_AS(complete_case(cohort, bogus), DataError);
}

TEST_CASE("covariate design columns") {
    std::vector<PersonSummary> ps;
    for (int a = 0; a < 3; ++a) {
        PersonSummary p = person("P" + std::to_string(a), {600, 200, 100, 540});
        p.covariates.age_group = a;
        p.covariates.female = a % 2;
        ps.push_back(p);
    }
    const CohortTable cohort(ps);
    const std::vector<std::string> names{"age", "sex"};
    const auto cols = covariate_columns(cohort, names);
    REQUIRE(cols.columns.size() == 3);
    CHECK(cols.values.rows() == 3);
    CHECK(cols.values(0, 0) == 0.0);
    CHECK(cols.values(0, 1) == 0.0);
    CHECK(cols.values(1, 0) == 1.0);
    CHECK(cols.values(2, 1) == 1.0);
    CHECK(cols.values(1, 2) == 1.0);
    const std::vector<std::string> missing{"bmi"};
    CHECK_THROWS_AS(covariate_columns(cohort, missing), DataError);
}

TEST_CASE("describe") {
    PersonSummary p = person("solo", {600, 240, 60, 540});
    p.covariates.bmi = 24.0;
    p.covariates.age_group = 1;
    const DescriptiveTable one = describe(CohortTable({p}));
    CHECK(one.n == 1);
    const auto& bmi = row(one, "Body mass index, kg/m2");
    CHECK(*bmi.value == 24.0);
    CHECK_FALSE(bmi.spread.has_value());
    CHECK(bmi.display == "24.0 (NA)");
    const auto& sit = row(one, "Sit time, hours/day");
    CHECK(*sit.value == doctest::Approx(10.0));
    CHECK(row(one, "Total time, mins/day (median [IQR])").display == "1440 [1440, 1440]");

    CHECK(quantile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
    CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({7}, 0.9) == 7.0);
    CHECK_THROWS_AS(quantile({}, 0.5), DataError);
}

TEST_CASE("simulation is deterministic and returns exactly n persons") {
    const auto spec = default_simulation_spec();
    const auto a = simulate_cohort(spec, 257, 11);
    const auto b = simulate_cohort(spec, 257, 11);
    const auto c = simulate_cohort(spec, 257, 12);
    CHECK(a.cohort.size() == 257);
    std::ostringstream sa, sb, sc;
    write_cohort_csv(sa, a.cohort);
    write_cohort_csv(sb, b.cohort);
    write_cohort_csv(sc, c.cohort);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str() != sc.str());
    for (const auto& comp : a.cohort.compositions()) {
        for (double x : comp.parts()) CHECK(x > 0.0);
    }
}

TEST_CASE("simulated profile means recover the generator at large n") {
    const auto spec = default_simulation_spec();
    const auto sim = simulate_cohort(spec, 10000, 2024);
    const std::size_t k = spec.profiles.size();
    std::vector<std::vector<std::array<double, 4>>> by(k);
    for (const auto& p : sim.cohort.persons()) {
        std::array<double, 4> h{};
        for (std::size_t j = 0; j < 4; ++j) h[j] = 24.0 * p.minutes[j] / p.total_min;
        by[static_cast<std::size_t>(*p.true_class)].push_back(h);
    }
    for (std::size_t c = 0; c < k; ++c) {
        const double n = static_cast<double>(by[c].size());
        CHECK(std::abs(n / 10000.0 - spec.profiles[c].weight) < 3.0 * std::sqrt(spec.profiles[c].weight / 10000.0));
        for (std::size_t j = 0; j < 3; ++j) {
            double m = 0.0;
            for (const auto& h : by[c]) m += h[j];
            m /= n;
            const double se = spec.profiles[c].sd_hours[j] / std::sqrt(n);
            INFO("class " << c + 1 << " indicator " << j);
            CHECK(std::abs(m - spec.profiles[c].mean_hours[j]) < 2.0 * se + 0.05);
        }
    }
    CHECK(sim.rejection_rate < 0.05);
}

TEST_CASE("default generator sleep rows match the reference profile table") {
    // sleep = 24 - sit - stand - step, so its mean and SD follow from each profile
    const double mean_ref[] = {8.7, 7.9, 8.9, 8.8};
    const double sd_ref[] = {1.1, 1.0, 0.6, 1.4};
    const auto spec = default_simulation_spec();
    REQUIRE(spec.profiles.size() == 4);
    for (std::size_t c = 0; c < 4; ++c) {
        const auto& p = spec.profiles[c];
        const auto& s = p.sd_hours;
        const auto& r = p.correlation;
        const double mean = 24.0 - p.mean_hours[0] - p.mean_hours[1] - p.mean_hours[2];
        const double var = s[0] * s[0] + s[1] * s[1] + s[2] * s[2] +
                           2.0 * (r[0] * s[0] * s[1] + r[1] * s[0] * s[2] + r[2] * s[1] * s[2]);
        INFO("profile " << c + 1);
        // inputs are rounded to 0.1 h, hence the slack
        CHECK(std::abs(mean - mean_ref[c]) <= 0.1 + 1e-9);
        CHECK(std::abs(std::sqrt(var) - sd_ref[c]) <= 0.15);
    }
}

TEST_CASE("describe on the default cohort") {
    const auto sim = simulate_cohort(default_simulation_spec(), 4000, 5);
    const auto t = describe(sim.cohort);
    CHECK(*row(t, "Sit time, hours/day").value == doctest::Approx(10.0).epsilon(0.03));
    CHECK(*row(t, "Sleep time, hours/day").value == doctest::Approx(8.6).epsilon(0.03));
    CHECK(*row(t, "Total time, mins/day (median [IQR])").value == doctest::Approx(1440).epsilon(0.002));
    CHECK(*row(t, "Years of education").value == doctest::Approx(16.8).epsilon(0.02));
}

TEST_CASE("simulation spec text") {
    const auto spec = default_simulation_spec();
    std::ostringstream out;
    write_simulation_spec(out, spec);
    std::istringstream in(out.str());
    const auto back = parse_simulation_spec(in);
    std::ostringstream again;
    write_simulation_spec(again, back);
    CHECK(again.str() == out.str());

    const auto shipped = load_simulation_spec(std::string(HAC24_SOURCE_DIR) + "/data/default_cohort.spec");
    std::ostringstream shipped_text;
    write_simulation_spec(shipped_text, shipped);
    CHECK(shipped_text.str() == out.str());

    std::istringstream unknown("profiles = 1\nprofile.1.weight = 1\nprofile.1.mean = 8, 4, 1\n"
                               "profile.1.sd = 1, 1, 0.5\nprofile.1.corr = 0, 0, 0\ncolour = red\n");
    try {
        parse_simulation_spec(unknown);
        FAIL("unknown key accepted");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 6") != std::string::npos);
    }
    std::istringstream bad_weights("profile.1.weight = 0.5\nprofile.1.mean = 8, 4, 1\n"
                                   "profile.1.sd = 1, 1, 0.5\nprofile.1.corr = 0, 0, 0\n");
    CHECK_THROWS_AS(parse_simulation_spec(bad_weights), DataError);
    std::istringstream bad_corr("profile.1.weight = 1\nprofile.1.mean = 8, 4, 1\n"
                                "profile.1.sd = 1, 1, 0.5\nprofile.1.corr = 0.99, -0.99, 0.99\n");
    CHECK_THROWS_AS(parse_simulation_spec(bad_corr), DataError);

    auto infeasible = spec;
    infeasible.profiles = {{1.0, {20.0, 6.0, 3.0}, {0.5, 0.5, 0.5}, {0.0, 0.0, 0.0}}};
    infeasible.class_effects.clear();
    CHECK_THROWS_AS(simulate_cohort(infeasible, 50, 1), DataError);
}

TEST_CASE("cohort csv round trip") {
    const auto sim = simulate_cohort(default_simulation_spec(), 120, 8);
    std::ostringstream out;
    write_cohort_csv(out, sim.cohort);
    std::istringstream in(out.str());
    const CohortTable back(parse_cohort_csv(in));
    REQUIRE(back.size() == sim.cohort.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].id == sim.cohort[i].id);
        CHECK(back[i].minutes == sim.cohort[i].minutes);
        CHECK(back[i].total_min == sim.cohort[i].total_min);
        CHECK(back[i].true_class == sim.cohort[i].true_class);
        CHECK(back[i].cognition == sim.cohort[i].cognition);
        CHECK(back[i].covariates.bmi == sim.cohort[i].covariates.bmi);
    }
    std::ostringstream again;
    write_cohort_csv(again, back);
    CHECK(again.str() == out.str());
    CHECK(out.str().substr(0, out.str().find('\n')) == kCohortCsvHeader);
}

TEST_CASE("day-level simulation aggregates to the cohort") {
    auto spec = default_simulation_spec();
    spec.invalid_day_prob = 0.5;
    const auto sim = simulate_cohort(spec, 60, 21, true);
    REQUIRE_FALSE(sim.days.empty());
    std::ostringstream days;
    write_day_csv(days, sim.days);
    std::istringstream days_in(days.str());
    const DayLoad load = parse_day_csv(days_in);
    CHECK(load.errors.empty());
    const auto validity = validate_days(load.records);
    CHECK(validity.retained.size() == 60);
    bool some_invalid = false;
    for (const auto& r : validity.records) some_invalid = some_invalid || !r.valid;
    CHECK(some_invalid);

    CovariateTable cov;
    for (const auto& p : sim.cohort.persons()) cov[p.id] = CovariateRecord{p.covariates, p.cognition};
    std::ostringstream cov_text;
    write_covariate_csv(cov_text, cov);
    std::istringstream cov_in(cov_text.str());
    const auto persons = aggregate_cohort(validity, parse_covariate_csv(cov_in));
    REQUIRE(persons.size() == 60);
    for (std::size_t i = 0; i < persons.size(); ++i) {
        const auto& want = sim.cohort[i];
        CHECK(persons[i].id == want.id);
        for (std::size_t j = 0; j < 4; ++j) CHECK(persons[i].minutes[j] == doctest::Approx(want.minutes[j]).epsilon(1e-9));
        CHECK(persons[i].total_min == doctest::Approx(want.total_min).epsilon(1e-9));
        CHECK(persons[i].cognition == want.cognition);
    }
}
