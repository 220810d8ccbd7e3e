#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hac24/errors.hpp"
#include "hac24/ingest.hpp"
#include "ingest/csv.hpp"

namespace hac24 {

std::string format_number(double value) {
    if (value == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace csv {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

std::optional<double> parse_double(const std::string& text) {
    if (text.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
        throw DataError("'" + text + "' is not a number");
    }
    return v;
}

std::optional<int> parse_int(const std::string& text) {
    if (text.empty()) return std::nullopt;
    int v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw DataError("'" + text + "' is not an integer");
    }
    return v;
}

void expect_header(std::istream& in, const std::string& header, const std::string& what) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(what + " is empty (expected header '" + header + "')");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line == header) return;
    const auto want = split(header), got = split(line);
    std::string missing;
    for (const auto& col : want) {
        if (std::find(got.begin(), got.end(), col) == got.end()) missing += (missing.empty() ? "" : ", ") + col;
    }
    throw DataError(what + " header mismatch" + (missing.empty() ? std::string(" (column order)") : "; missing: " + missing) +
                    "; expected '" + header + "'");
}

}  // namespace csv

double parse_timestamp_minutes(const std::string& text) {
    // YYYY-MM-DDTHH:MM or YYYY-MM-DDTHH:MM:SS (a space also separates)
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 0;
    int used = 0;
    const int got = std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &used);
    if (got < 6 || (sep != 'T' && sep != ' ')) throw DataError("unparseable timestamp '" + text + "'");
    std::size_t pos = static_cast<std::size_t>(used);
    if (pos < text.size()) {
        int more = 0;
        if (std::sscanf(text.c_str() + pos, ":%2d%n", &s, &more) != 1 || pos + static_cast<std::size_t>(more) != text.size()) {
            throw DataError("unparseable timestamp '" + text + "'");
        }
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59 || h < 0 || mi < 0 || s < 0) {
        throw DataError("invalid timestamp '" + text + "'");
    }
    const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days) * 1440.0 + h * 60.0 + mi + s / 60.0;
}

namespace {

DayRecord parse_day_row(const std::vector<std::string>& f) {
    if (f.size() != 8) throw DataError("expected 8 fields, found " + std::to_string(f.size()));
    DayRecord r;
    r.person_id = f[0];
    if (r.person_id.empty()) throw DataError("empty person_id");
    r.date = f[1];
    {
        int y = 0, m = 0, d = 0, used = 0;
        if (std::sscanf(r.date.c_str(), "%4d-%2d-%2d%n", &y, &m, &d, &used) != 3 ||
            static_cast<std::size_t>(used) != r.date.size() ||
            !std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                         std::chrono::day{static_cast<unsigned>(d)}}
                 .ok()) {
            throw DataError("invalid date '" + r.date + "'");
        }
    }
    auto minutes = [&](std::size_t i, const char* name) {
        const auto v = csv::parse_double(f[i]);
        if (!v) throw DataError(std::string("missing ") + name);
        if (*v < 0.0) throw DataError(std::string(name) + " is negative");
        return *v;
    };
    r.sit_min = minutes(2, "sit_min");
    r.stand_min = minutes(3, "stand_min");
    r.step_min = minutes(4, "step_min");
    r.in_bed = f[5];
    r.out_bed = f[6];
    r.wear_min = minutes(7, "wear_min");
    const double in = parse_timestamp_minutes(r.in_bed);
    const double out = parse_timestamp_minutes(r.out_bed);
    if (!(out > in)) throw DataError("out_bed is not after in_bed");
    r.sleep_min = out - in;
    r.total_min = r.sit_min + r.stand_min + r.step_min + r.sleep_min;
    return r;
}

}  // namespace

DayLoad parse_day_csv(std::istream& in) {
    csv::expect_header(in, kDayCsvHeader, "day file");
    DayLoad out;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        try {
            out.records.push_back(parse_day_row(csv::split(line)));
        } catch (const DataError& e) {
            out.errors.push_back({lineno, e.what()});
        }
    }
    return out;
}

DayLoad load_day_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return parse_day_csv(in);
}

void write_day_csv(std::ostream& out, std::span<const DayRecord> records) {
    out << kDayCsvHeader << '\n';
    for (const auto& r : records) {
        out << r.person_id << ',' << r.date << ',' << format_number(r.sit_min) << ',' << format_number(r.stand_min)
            << ',' << format_number(r.step_min) << ',' << r.in_bed << ',' << r.out_bed << ','
            << format_number(r.wear_min) << '\n';
    }
}

bool is_valid_day(double wear_min) { return wear_min >= kMinWearMinutes; }
bool is_retained(int valid_days) { return valid_days >= kMinValidDays; }

ValidityResult validate_days(std::vector<DayRecord> records) {
    ValidityResult out;
    for (auto& r : records) {
        r.valid = is_valid_day(r.wear_min);
        int& count = out.valid_day_count[r.person_id];
        if (r.valid) ++count;
    }
    for (const auto& [id, count] : out.valid_day_count) {
        if (is_retained(count)) out.retained.push_back(id);
    }
    out.records = std::move(records);
    return out;
}

CovariateTable parse_covariate_csv(std::istream& in) {
    csv::expect_header(in, kCovariateCsvHeader, "covariate file");
    CovariateTable out;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        try {
            const auto f = csv::split(line);
            if (f.size() != 9) throw DataError("expected 9 fields, found " + std::to_string(f.size()));
            CovariateRecord rec;
            rec.covariates = csv::parse_covariates(f, 1);
            rec.cognition = csv::parse_double(f[8]);
            if (!out.emplace(f[0], rec).second) throw DataError("duplicate person_id '" + f[0] + "'");
        } catch (const DataError& e) {
            throw DataError("covariate file line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

CovariateTable load_covariate_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return parse_covariate_csv(in);
}

void write_covariate_csv(std::ostream& out, const CovariateTable& table) {
    out << kCovariateCsvHeader << '\n';
    for (const auto& [id, rec] : table) {
        out << id << ',' << csv::format_covariates(rec.covariates) << ','
            << (rec.cognition ? format_number(*rec.cognition) : "") << '\n';
    }
}

PersonSummary aggregate_person(std::span<const DayRecord> days, const CovariateTable& covariates) {
    if (days.empty()) throw DataError("no valid days to aggregate");
    PersonSummary p;
    p.id = days.front().person_id;
    const auto it = covariates.find(p.id);
    if (it == covariates.end()) throw DataError("person '" + p.id + "' is absent from the covariate table");
    p.covariates = it->second.covariates;
    p.cognition = it->second.cognition;
    std::array<double, 4> sums{};
    double total = 0.0;
    for (const auto& d : days) {
        if (d.person_id != p.id) throw DataError("aggregate_person got days from several persons");
        sums[0] += d.sit_min;
        sums[1] += d.stand_min;
        sums[2] += d.step_min;
        sums[3] += d.sleep_min;
        total += d.total_min;
    }
    const double n = static_cast<double>(days.size());
    p.minutes.assign(4, 0.0);
    for (std::size_t j = 0; j < 4; ++j) p.minutes[j] = sums[j] / n;
    p.total_min = total / n;
    p.valid_days = static_cast<int>(days.size());
    return p;
}

std::vector<PersonSummary> aggregate_cohort(const ValidityResult& validity, const CovariateTable& covariates) {
    std::map<std::string, std::vector<DayRecord>> by_person;
    for (const auto& r : validity.records) {
        if (r.valid) by_person[r.person_id].push_back(r);
    }
    std::vector<PersonSummary> out;
    for (const auto& id : validity.retained) out.push_back(aggregate_person(by_person.at(id), covariates));
    return out;
}

}  // namespace hac24
