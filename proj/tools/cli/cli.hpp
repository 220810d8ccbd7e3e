#pragma once

// Subcommands of the hac24 tool. Each takes a RunConfig plus its own
// options and returns the files it wrote; run() adds argument parsing and
// maps exceptions to exit codes.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cli/report.hpp"
#include "hac24/ingest.hpp"

namespace hac24::cli {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct RunConfig {
    std::string subcommand;
    std::filesystem::path input;
    std::optional<std::filesystem::path> covariate_file;  // with a day-level input
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = 0;
    Format format = Format::Json;
    std::ostream* log = nullptr;  // progress and notes; null = silent
};

/// Cohort from a person-level CSV, or from a day-level CSV plus covariates.
CohortTable load_input(const RunConfig& cfg);

using Written = std::vector<std::filesystem::path>;

Written cmd_describe(const RunConfig& cfg);

struct IsmArgs {
    double minutes = 30.0;
    double subgroup_step_cut = 60.0;
    bool subgroups = true;
    bool flexible = false;
    std::string dropped = "step";
    std::vector<int> knot_grid{3, 4, 5};
    std::vector<std::string> covariates;  // default: every known covariate
    bool robust = false;
};
Written cmd_ism(const RunConfig& cfg, const IsmArgs& args);

struct CodaArgs {
    std::optional<std::string> pivot;
    std::string delta_grid = "-60:60:5";
    bool pairwise = false;
    std::vector<std::string> covariates;
    std::vector<std::string> compare;  // grouping covariates for compositional means
    bool robust = false;
};
Written cmd_coda(const RunConfig& cfg, const CodaArgs& args);

struct LpaArgs {
    std::string classes = "2:6";
    int starts = 160;
    int max_iter = 250;
    std::string covariance = "free";
    bool blrt = false;
    int boot = 500;
    int boot_starts = 20;
    bool hours = false;
    std::string select = "bic";
    std::optional<int> chosen_k;
};
Written cmd_lpa(const RunConfig& cfg, const LpaArgs& args);

struct Step3Args {
    std::filesystem::path model;
    std::string outcome = "cognition";
    std::vector<std::string> covariates;
    std::string method = "both";  // bch, naive, both, ml
    std::optional<int> reference;  // 1-based; default: largest profile
    bool joint = false;
};
Written cmd_step3(const RunConfig& cfg, const Step3Args& args);

struct SimulateArgs {
    std::optional<std::filesystem::path> spec;
    std::size_t n = 1034;
    bool days = false;
};
Written cmd_simulate(const RunConfig& cfg, const SimulateArgs& args);

struct PlotArgs {
    std::string kind = "ternary";
    std::optional<std::filesystem::path> model;
    std::optional<std::string> pivot;
    std::string parts = "sit,stand,step";
    std::string delta_grid = "-60:60:5";
    std::vector<std::string> covariates;
};
Written cmd_plot(const RunConfig& cfg, const PlotArgs& args);

/// lo:hi:step with 0 added when the range straddles it.
std::vector<double> parse_delta_grid(const std::string& text);
/// "2:6" or "3" or "2,4,5".
std::vector<int> parse_int_range(const std::string& text);

/// Full command line; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hac24::cli
