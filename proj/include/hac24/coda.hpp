#pragma once

// Compositional regression on ilr coordinates and the reallocation effects
// derived from it.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hac24/composition.hpp"
#include "hac24/ingest.hpp"
#include "hac24/linmod.hpp"

namespace hac24 {

struct CodaFit {
    FitResult fit;
    SBPartition basis;
    std::optional<std::string> pivot;  // set for pivot bases
    Composition baseline;
    std::vector<std::string> covariates;
    std::vector<double> ilr_min;  // observed range of each coordinate
    std::vector<double> ilr_max;
    double day_minutes = 1440.0;
    bool use_robust = false;

    /// Index of coordinate k's coefficient (0-based k).
    Eigen::Index coordinate_index(std::size_t k) const { return static_cast<Eigen::Index>(k + 1); }
};

struct CodaOptions {
    std::vector<std::string> covariates;
    std::optional<Composition> baseline;  // default: cohort compositional mean
    double day_minutes = 1440.0;
    bool use_robust = false;
};

/// Outcome on (Intercept), z1..z_{D-1}, covariates.
CodaFit fit_coda(const CohortTable& cohort, const std::string& pivot, const CodaOptions& options = {});
CodaFit fit_coda(const CohortTable& cohort, const SBPartition& basis, const CodaOptions& options = {});

struct Contrast {
    Estimate effect;
    bool extrapolated = false;  // a coordinate falls outside the observed range
};

/// beta^T (ilr(xb) - ilr(xa)) over the ilr coefficients.
Contrast composition_contrast(const CodaFit& fit, const Composition& xa, const Composition& xb);

/// Baseline with the pivot part scaled by (1 + r) and the rest shrunk
/// proportionally by s = r x1 / (1 - x1).
Composition one_vs_remaining_composition(const Composition& baseline, const std::string& behavior, double r);

/// beta1 sqrt((D-1)/D) ln((1 + r) / (1 - s)). Needs a pivot fit.
Estimate one_vs_remaining_effect(const CodaFit& fit, double r);

/// Baseline with `minutes` moved from one part to another (day_minutes scale).
Composition pairwise_composition(const Composition& baseline, const std::string& from, const std::string& to,
                                 double minutes, double day_minutes);

Contrast pairwise_reallocation(const CodaFit& fit, const std::string& from, const std::string& to, double minutes);

struct CurvePoint {
    double delta = 0.0;  // minutes/day
    Estimate effect;
    bool extrapolated = false;
};

struct ReallocationCurve {
    std::string mode;  // "proportional" or "pairwise"
    std::string behavior;  // the increased behavior
    std::string from;      // pairwise only: the decreased behavior
    std::vector<CurvePoint> points;
};

/// Delta minutes added to `behavior`, the others shrunk proportionally.
ReallocationCurve reallocation_curve_proportional(const CodaFit& fit, const std::string& behavior,
                                                  std::span<const double> deltas);

/// Delta minutes moved from `from` to `to`.
ReallocationCurve reallocation_curve_pairwise(const CodaFit& fit, const std::string& from, const std::string& to,
                                              std::span<const double> deltas);

/// Symmetric grid -max..max in `step` increments.
std::vector<double> delta_grid(double max_minutes, double step);

struct PivotRow {
    std::string pivot;
    Estimate effect;  // first-coordinate coefficient
};

/// First-coordinate coefficient for each behavior taken as pivot.
std::vector<PivotRow> pivot_table(const CohortTable& cohort, const CodaOptions& options = {});

struct GroupMean {
    std::string group;
    std::size_t n = 0;
    Composition mean;
    std::vector<double> hours;  // mean composition times 24
};

struct GroupComparison {
    std::string variable;
    std::vector<GroupMean> groups;
    std::optional<JamesTest> test;  // absent with a single group
};

struct Grouping {
    std::vector<std::string> labels;  // one per person, "" when missing
    std::vector<std::string> levels;  // display order; empty = first appearance
};

/// Persons with an empty group label are left out.
GroupComparison compare_group_means(const CohortTable& cohort, const Grouping& grouping, std::string variable = "");

/// Grouping by a categorical covariate (sex, age, race, health).
Grouping covariate_groups(const CohortTable& cohort, const std::string& covariate);

}  // namespace hac24
