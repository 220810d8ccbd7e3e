#pragma once

// Day-level records, validity rules, person-level aggregation, cohort tables
// and their CSV forms, descriptive summaries, and the synthetic cohort
// generator.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hac24/composition.hpp"

namespace hac24 {

inline constexpr double kMinWearMinutes = 600.0;  // 10 h of waking wear
inline constexpr int kMinValidDays = 4;

/// Exact header of the day-level CSV.
inline constexpr const char* kDayCsvHeader = "person_id,date,sit_min,stand_min,step_min,in_bed,out_bed,wear_min";

/// One wear day, out-of-bed to the next out-of-bed. in_bed is the evening
/// bed time of this day and out_bed the following rise time.
struct DayRecord {
    std::string person_id;
    std::string date;  // YYYY-MM-DD
    double sit_min = 0.0;
    double stand_min = 0.0;
    double step_min = 0.0;
    std::string in_bed;   // YYYY-MM-DDTHH:MM[:SS]
    std::string out_bed;
    double wear_min = 0.0;

    double sleep_min = 0.0;  // out_bed - in_bed
    double total_min = 0.0;  // sit + stand + step + sleep
    bool valid = false;
};

struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct DayLoad {
    std::vector<DayRecord> records;
    std::vector<RowError> errors;
};

/// Minutes since 1970-01-01T00:00 for an ISO-8601 local timestamp.
/// Throws DataError when it cannot be parsed.
double parse_timestamp_minutes(const std::string& text);

DayLoad parse_day_csv(std::istream& in);
DayLoad load_day_csv(const std::filesystem::path& path);
void write_day_csv(std::ostream& out, std::span<const DayRecord> records);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

bool is_valid_day(double wear_min);
bool is_retained(int valid_days);

struct ValidityResult {
    std::vector<DayRecord> records;            // valid flag filled in
    std::map<std::string, int> valid_day_count;
    std::vector<std::string> retained;         // ids with >= 4 valid days, sorted
};

ValidityResult validate_days(std::vector<DayRecord> records);

/// Categorical codes: age_group 0 = 65-74, 1 = 75-84, 2 = 85+.
struct Covariates {
    std::optional<int> age_group;
    std::optional<int> female;
    std::optional<int> nonwhite;
    std::optional<double> education_years;
    std::optional<double> bmi;
    std::optional<double> cesd;
    std::optional<int> fair_poor_health;
};

struct CovariateRecord {
    Covariates covariates;
    std::optional<double> cognition;
};

using CovariateTable = std::map<std::string, CovariateRecord>;

inline constexpr const char* kCovariateCsvHeader =
    "person_id,age_group,female,nonwhite,education_years,bmi,cesd,fair_poor_health,cognition";

CovariateTable parse_covariate_csv(std::istream& in);
CovariateTable load_covariate_csv(const std::filesystem::path& path);
void write_covariate_csv(std::ostream& out, const CovariateTable& table);

struct PersonSummary {
    std::string id;
    std::vector<double> minutes;  // mean minutes/day per behavior, canonical order
    double total_min = 0.0;       // mean day length
    Covariates covariates;
    std::optional<double> cognition;
    int valid_days = 0;
    std::optional<int> true_class;  // simulated cohorts only

    RawTimeVector raw() const;
};

/// Arithmetic means over the valid days of one person.
PersonSummary aggregate_person(std::span<const DayRecord> days, const CovariateTable& covariates);

/// Validity filter + per-person aggregation for a whole day file.
std::vector<PersonSummary> aggregate_cohort(const ValidityResult& validity, const CovariateTable& covariates);

/// Person-level table with derived compositions (zeros replaced first).
class CohortTable {
public:
    explicit CohortTable(std::vector<PersonSummary> persons, ZeroReplacement zeros = fixed_floor(1.0));

    const std::vector<PersonSummary>& persons() const { return persons_; }
    const PersonSummary& operator[](std::size_t i) const { return persons_[i]; }
    std::size_t size() const { return persons_.size(); }
    bool empty() const { return persons_.empty(); }
    const Labels& behaviors() const { return canonical_behaviors(); }
    const std::vector<Composition>& compositions() const { return compositions_; }
    const ZeroReplacement& zero_strategy() const { return zeros_; }

    std::vector<double> behavior_minutes(const std::string& behavior) const;
    std::vector<double> totals() const;
    /// Outcome vector; throws DataError if any person lacks it.
    Eigen::VectorXd cognition() const;

    CohortTable subset(const std::vector<std::size_t>& rows) const;

private:
    std::vector<PersonSummary> persons_;
    ZeroReplacement zeros_;
    std::vector<Composition> compositions_;
};

/// Covariate names understood by covariate_columns and complete_case:
/// age, sex, race, education, bmi, cesd, health.
const std::vector<std::string>& known_covariates();

struct CovariateColumns {
    Eigen::MatrixXd values;
    Labels columns;
};

/// Numeric design columns (age expands to two dummies against 65-74).
/// Throws DataError on unknown names or missing values.
CovariateColumns covariate_columns(const CohortTable& cohort, std::span<const std::string> names);

struct ExclusionReport {
    std::size_t n_before = 0;
    std::size_t n_excluded = 0;
    std::map<std::string, std::size_t> missing_by_field;
    std::vector<std::string> excluded_ids;

    double percent() const;
    /// "excluding 34 (3.3%) with missing covariates"
    std::string summary() const;
};

struct CompleteCase {
    CohortTable cohort;
    ExclusionReport report;
};

/// Drops persons missing any of `required` (covariate names, or "cognition").
CompleteCase complete_case(const CohortTable& cohort, std::span<const std::string> required);

inline constexpr const char* kCohortCsvHeader =
    "person_id,valid_days,sit_min,stand_min,step_min,sleep_min,total_min,age_group,female,nonwhite,"
    "education_years,bmi,cesd,fair_poor_health,cognition,true_class";

std::vector<PersonSummary> parse_cohort_csv(std::istream& in);
CohortTable load_cohort_csv(const std::filesystem::path& path);
void write_cohort_csv(std::ostream& out, const CohortTable& cohort);

struct DescriptiveRow {
    std::string section;   // "categorical", "continuous", "behavior", "total"
    std::string variable;
    std::string level;
    std::optional<double> value;   // count, mean or median
    std::optional<double> spread;  // percent, SD
    std::optional<double> q1;      // total time IQR
    std::optional<double> q3;
    std::string display;           // "433 (41.9)", "77.2 (7.0)", "1440 [1436, 1445]"
};

struct DescriptiveTable {
    std::size_t n = 0;
    std::vector<DescriptiveRow> rows;
};

DescriptiveTable describe(const CohortTable& cohort);

/// Linear-interpolation sample quantile (R type 7).
double quantile(std::vector<double> values, double prob);

/// Parameters of the synthetic cohort generator. Class indicators are
/// (sit, stand, step) in hours/day; proportions are those divided by 24.
struct SimulationSpec {
    struct ProfileSpec {
        double weight = 0.0;
        std::array<double, 3> mean_hours{};
        std::array<double, 3> sd_hours{};
        std::array<double, 3> correlation{};  // sit-stand, sit-step, stand-step
    };
    std::vector<ProfileSpec> profiles;

    double day_length_mean = 1440.0;
    double day_length_sd = 6.7;

    std::array<double, 3> age_group_probs{0.419, 0.411, 0.170};
    double female_prob = 0.558;
    double nonwhite_prob = 0.10;
    double education_mean = 16.8;
    double education_sd = 2.8;
    double bmi_mean = 27.1;
    double bmi_sd = 4.9;
    double cesd_mean = 3.6;
    double cesd_sd = 3.9;
    double fair_poor_health_prob = 0.079;
    double missing_bmi_prob = 0.0;
    double missing_cesd_prob = 0.0;

    double outcome_intercept = 0.61;
    std::vector<double> class_effects;  // added to the intercept per class
    double outcome_noise_sd = 0.65;
    std::map<std::string, double> outcome_coefficients;  // design column name -> slope

    int days_per_person = 7;
    double invalid_day_prob = 0.05;

    double max_rejection_rate = 0.99;
};

/// Four-profile generator defaults.
SimulationSpec default_simulation_spec();

/// key = value lines, '#' comments. See README for the grammar.
SimulationSpec parse_simulation_spec(std::istream& in);
SimulationSpec load_simulation_spec(const std::filesystem::path& path);
void write_simulation_spec(std::ostream& out, const SimulationSpec& spec);

struct SimulatedCohort {
    CohortTable cohort;
    std::vector<DayRecord> days;  // empty unless requested
    double rejection_rate = 0.0;
};

SimulatedCohort simulate_cohort(const SimulationSpec& spec, std::size_t n, std::uint64_t seed, bool with_days = false);

}  // namespace hac24
