#pragma once

// Isotemporal substitution models: minutes/day of every behavior but one,
// plus Total, regressed together so a behavior coefficient reads as the
// effect of displacing the dropped behavior.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hac24/composition.hpp"
#include "hac24/ingest.hpp"
#include "hac24/linmod.hpp"

namespace hac24 {

struct IsmSpec {
    std::string dropped = "step";
    std::vector<std::string> covariates;
    double minutes = 30.0;
    bool use_robust = false;
    bool intercept = true;
};

struct IsmDesign {
    DesignMatrix design;
    Eigen::VectorXd outcome;
    std::vector<std::string> behavior_columns;  // retained behaviors, in label order
    std::vector<std::string> warnings;
};

/// Columns: (Intercept), retained behaviors, Total, covariate columns.
/// A constant Total forces the intercept out and records a warning.
IsmDesign build_ism_design(const CohortTable& cohort, const IsmSpec& spec);

/// Reallocating `minutes` from `from` to `to`, read off the model that
/// drops `to`.
Estimate substitution_effect(const CohortTable& cohort, std::span<const std::string> covariates,
                             const std::string& from, const std::string& to, double minutes = 30.0,
                             bool use_robust = false);

struct SubstitutionCell {
    bool present = false;  // false on the diagonal
    Estimate effect;
};

struct SubstitutionTable {
    Labels labels;
    double minutes = 30.0;
    std::size_t n = 0;
    std::string panel = "overall";
    std::vector<std::vector<SubstitutionCell>> cells;  // [from][to]

    const SubstitutionCell& at(const std::string& from, const std::string& to) const;
};

/// Splits persons on a behavior's mean minutes: `above` takes value > cut.
struct Subgroup {
    std::string behavior = "step";
    double cut = 60.0;
};

/// The overall table, or overall + "> cut" + "<= cut" panels with a subgroup.
std::vector<SubstitutionTable> substitution_table(const CohortTable& cohort, std::span<const std::string> covariates,
                                                  double minutes = 30.0,
                                                  const std::optional<Subgroup>& subgroup = std::nullopt,
                                                  bool use_robust = false);

SubstitutionTable substitution_table_single(const CohortTable& cohort, std::span<const std::string> covariates,
                                            double minutes, bool use_robust, std::string panel);

struct BehaviorTest {
    std::string behavior;
    WaldTest test;
};

struct IsmFit {
    FitResult fit;
    IsmSpec spec;
    int knots = 0;                       // 0: linear ISM
    std::vector<std::pair<int, double>> gcv_path;  // knots -> GCV
    std::vector<std::string> behaviors;  // retained behaviors
    std::vector<NaturalSpline> splines;  // one per retained behavior when knots > 0
    std::vector<BehaviorTest> tests;
};

/// Linear ISM wrapped as an IsmFit, with per-behavior 1-df Wald tests.
IsmFit fit_ism(const CohortTable& cohort, const IsmSpec& spec);

/// Spline expansion of each retained behavior, Total linear, knot count by
/// minimum GCV (ties go to fewer knots).
IsmFit fit_flexible_ism(const CohortTable& cohort, const IsmSpec& spec, std::span<const int> knot_grid);

/// Expected outcome difference B - A. Covariate terms cancel so no covariate
/// values are needed.
Estimate profile_contrast(const IsmFit& fit, const RawTimeVector& profile_a, const RawTimeVector& profile_b);

}  // namespace hac24
