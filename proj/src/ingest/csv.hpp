#pragma once

// Minimal comma-separated helpers shared by the ingest readers. Fields never
// contain commas or quotes in these schemas.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hac24/ingest.hpp"

namespace hac24::csv {

std::vector<std::string> split(const std::string& line);

/// Empty text is missing; anything else must parse completely.
std::optional<double> parse_double(const std::string& text);
std::optional<int> parse_int(const std::string& text);

void expect_header(std::istream& in, const std::string& header, const std::string& what);

/// Seven covariate fields starting at f[first]:
/// age_group,female,nonwhite,education_years,bmi,cesd,fair_poor_health.
Covariates parse_covariates(const std::vector<std::string>& f, std::size_t first);
std::string format_covariates(const Covariates& c);

}  // namespace hac24::csv
