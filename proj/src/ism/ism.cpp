#include "hac24/ism.hpp"

#include <algorithm>
#include <set>

#include "hac24/errors.hpp"

namespace hac24 {

namespace {

void check_behavior(const Labels& labels, const std::string& name) {
    if (std::find(labels.begin(), labels.end(), name) == labels.end()) {
        throw DataError("unknown behavior '" + name + "'");
    }
}

std::vector<std::string> retained_behaviors(const Labels& labels, const std::string& dropped) {
    std::vector<std::string> out;
    for (const auto& b : labels) {
        if (b != dropped) out.push_back(b);
    }
    return out;
}

bool total_is_constant(const std::vector<double>& totals) {
    return std::all_of(totals.begin(), totals.end(), [&](double t) { return t == totals.front(); });
}

// Shared assembly for the linear and spline designs. `expand` maps one
// behavior's minutes to its block of columns.
template <class Expand>
IsmDesign assemble(const CohortTable& cohort, const IsmSpec& spec, Expand&& expand) {
    check_behavior(cohort.behaviors(), spec.dropped);
    if (cohort.empty()) throw DataError("empty cohort");
    IsmDesign out;
    out.behavior_columns = retained_behaviors(cohort.behaviors(), spec.dropped);
    const std::vector<double> totals = cohort.totals();
    const CovariateColumns cov = covariate_columns(cohort, spec.covariates);

    bool intercept = spec.intercept;
    if (intercept && total_is_constant(totals)) {
        intercept = false;
        out.warnings.push_back("Total is constant across subjects; intercept dropped");
    }

    std::vector<Eigen::MatrixXd> blocks;
    Labels columns;
    const auto n = static_cast<Eigen::Index>(cohort.size());
    if (intercept) {
        blocks.push_back(Eigen::MatrixXd::Ones(n, 1));
        columns.push_back("(Intercept)");
    }
    for (const auto& b : out.behavior_columns) {
        auto [block, names] = expand(b, cohort.behavior_minutes(b));
        blocks.push_back(std::move(block));
        columns.insert(columns.end(), names.begin(), names.end());
    }
    blocks.push_back(Eigen::Map<const Eigen::VectorXd>(totals.data(), n));
    columns.push_back("total");
    blocks.push_back(cov.values);
    columns.insert(columns.end(), cov.columns.begin(), cov.columns.end());

    Eigen::Index p = 0;
    for (const auto& blk : blocks) p += blk.cols();
    out.design.values.resize(n, p);
    Eigen::Index at = 0;
    for (const auto& blk : blocks) {
        out.design.values.middleCols(at, blk.cols()) = blk;
        at += blk.cols();
    }
    out.design.columns = std::move(columns);
    out.design.intercept = intercept;
    out.outcome = cohort.cognition();
    return out;
}

std::pair<Eigen::MatrixXd, Labels> linear_block(const std::string& name, const std::vector<double>& minutes) {
    return {Eigen::Map<const Eigen::VectorXd>(minutes.data(), static_cast<Eigen::Index>(minutes.size())),
            Labels{name}};
}

void test_behaviors(IsmFit& out) {
    out.tests.clear();
    for (const auto& b : out.behaviors) {
        std::vector<Eigen::Index> idx;
        for (std::size_t c = 0; c < out.fit.columns.size(); ++c) {
            const auto& col = out.fit.columns[c];
            if (col == b || col.rfind(b + "_ns", 0) == 0) idx.push_back(static_cast<Eigen::Index>(c));
        }
        Eigen::MatrixXd contrast = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(idx.size()), out.fit.p);
        for (std::size_t r = 0; r < idx.size(); ++r) contrast(static_cast<Eigen::Index>(r), idx[r]) = 1.0;
        out.tests.push_back({b, wald_test(out.fit, contrast, out.spec.use_robust)});
    }
}

}  // namespace

IsmDesign build_ism_design(const CohortTable& cohort, const IsmSpec& spec) {
    if (!(spec.minutes > 0.0)) throw DataError("reallocation minutes must be positive");
    return assemble(cohort, spec, linear_block);
}

Estimate substitution_effect(const CohortTable& cohort, std::span<const std::string> covariates,
                             const std::string& from, const std::string& to, double minutes, bool use_robust) {
    check_behavior(cohort.behaviors(), from);
    check_behavior(cohort.behaviors(), to);
    if (from == to) throw DataError("substitution needs two different behaviors");
    if (minutes == 0.0) return Estimate{};
    IsmSpec spec;
    spec.dropped = to;
    spec.covariates.assign(covariates.begin(), covariates.end());
    const IsmDesign d = assemble(cohort, spec, linear_block);
    const FitResult fit = fit_ols(d.design, d.outcome);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(fit.p);
    w(static_cast<Eigen::Index>(fit.index_of(from))) = -minutes;
    return linear_combination(fit, w, use_robust);
}

const SubstitutionCell& SubstitutionTable::at(const std::string& from, const std::string& to) const {
    const auto i = std::find(labels.begin(), labels.end(), from) - labels.begin();
    const auto j = std::find(labels.begin(), labels.end(), to) - labels.begin();
    if (i == static_cast<long>(labels.size()) || j == static_cast<long>(labels.size())) {
        throw DataError("unknown behavior in substitution table lookup");
    }
    return cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
}

SubstitutionTable substitution_table_single(const CohortTable& cohort, std::span<const std::string> covariates,
                                            double minutes, bool use_robust, std::string panel) {
    const Labels& labels = cohort.behaviors();
    const std::size_t d = labels.size();
    SubstitutionTable t;
    t.labels = labels;
    t.minutes = minutes;
    t.n = cohort.size();
    t.panel = std::move(panel);
    t.cells.assign(d, std::vector<SubstitutionCell>(d));

    IsmSpec spec;
    spec.covariates.assign(covariates.begin(), covariates.end());
    for (std::size_t j = 0; j < d; ++j) {
        spec.dropped = labels[j];
        const IsmDesign design = assemble(cohort, spec, linear_block);
        if (design.design.rows() <= design.design.cols()) {
            throw DataError("panel '" + t.panel + "' has " + std::to_string(design.design.rows()) +
                            " subjects for " + std::to_string(design.design.cols()) + " parameters");
        }
        const FitResult fit = fit_ols(design.design, design.outcome);
        for (std::size_t i = 0; i < j; ++i) {
            Eigen::VectorXd w = Eigen::VectorXd::Zero(fit.p);
            w(static_cast<Eigen::Index>(fit.index_of(labels[i]))) = -minutes;
            const Estimate e = minutes == 0.0 ? Estimate{} : linear_combination(fit, w, use_robust);
            t.cells[i][j] = {true, e};
            Estimate mirror = e;
            mirror.estimate = -e.estimate;
            mirror.ci_low = -e.ci_high;
            mirror.ci_high = -e.ci_low;
            if (mirror.estimate == 0.0) mirror.estimate = 0.0;
            t.cells[j][i] = {true, mirror};
        }
    }
    return t;
}

std::vector<SubstitutionTable> substitution_table(const CohortTable& cohort, std::span<const std::string> covariates,
                                                  double minutes, const std::optional<Subgroup>& subgroup,
                                                  bool use_robust) {
    std::vector<SubstitutionTable> out;
    out.push_back(substitution_table_single(cohort, covariates, minutes, use_robust, "overall"));
    if (!subgroup) return out;
    check_behavior(cohort.behaviors(), subgroup->behavior);
    const std::vector<double> v = cohort.behavior_minutes(subgroup->behavior);
    std::vector<std::size_t> above, below;
    for (std::size_t i = 0; i < v.size(); ++i) (v[i] > subgroup->cut ? above : below).push_back(i);
    auto label = [&](const char* op) {
        return subgroup->behavior + " " + op + " " + format_number(subgroup->cut);
    };
    out.push_back(substitution_table_single(cohort.subset(above), covariates, minutes, use_robust, label(">")));
    out.push_back(substitution_table_single(cohort.subset(below), covariates, minutes, use_robust, label("<=")));
    return out;
}

IsmFit fit_ism(const CohortTable& cohort, const IsmSpec& spec) {
    const IsmDesign d = build_ism_design(cohort, spec);
    IsmFit out;
    out.fit = fit_ols(d.design, d.outcome);
    out.spec = spec;
    out.behaviors = d.behavior_columns;
    test_behaviors(out);
    return out;
}

IsmFit fit_flexible_ism(const CohortTable& cohort, const IsmSpec& spec, std::span<const int> knot_grid) {
    if (knot_grid.empty()) throw DataError("knot grid is empty");
    const std::set<int> grid(knot_grid.begin(), knot_grid.end());
    if (*grid.begin() < 2) throw DataError("knot counts must be at least 2");

    std::optional<IsmFit> best;
    double best_gcv = 0.0;
    std::vector<std::pair<int, double>> path;
    for (int k : grid) {
        IsmFit cand;
        cand.spec = spec;
        cand.knots = k;
        auto expand = [&](const std::string& name, const std::vector<double>& minutes) {
            cand.splines.emplace_back(minutes, k);
            Labels names;
            for (std::size_t c = 0; c < cand.splines.back().columns(); ++c) {
                names.push_back(name + "_ns" + std::to_string(c + 1));
            }
            return std::pair{cand.splines.back().evaluate(minutes), names};
        };
        const IsmDesign d = assemble(cohort, spec, expand);
        cand.behaviors = d.behavior_columns;
        cand.fit = fit_ols(d.design, d.outcome);
        const double gcv = gcv_score(cand.fit);
        path.emplace_back(k, gcv);
        if (!best || gcv < best_gcv) {
            best_gcv = gcv;
            best = std::move(cand);
        }
    }
    best->gcv_path = std::move(path);
    test_behaviors(*best);
    return std::move(*best);
}

Estimate profile_contrast(const IsmFit& fit, const RawTimeVector& profile_a, const RawTimeVector& profile_b) {
    if (profile_a.labels() != profile_b.labels()) throw DataError("profiles have different behavior labels");
    const Labels& labels = profile_a.labels();
    for (const auto& b : fit.behaviors) check_behavior(labels, b);
    check_behavior(labels, fit.spec.dropped);
    if (labels.size() != fit.behaviors.size() + 1) throw DataError("profile labels do not match the fitted behaviors");

    auto minutes_of = [&](const RawTimeVector& r, const std::string& b) {
        return r[static_cast<std::size_t>(std::find(labels.begin(), labels.end(), b) - labels.begin())];
    };
    Eigen::VectorXd w = Eigen::VectorXd::Zero(fit.fit.p);
    for (std::size_t k = 0; k < fit.behaviors.size(); ++k) {
        const auto& b = fit.behaviors[k];
        const double xa = minutes_of(profile_a, b), xb = minutes_of(profile_b, b);
        if (fit.knots == 0) {
            w(static_cast<Eigen::Index>(fit.fit.index_of(b))) = xb - xa;
        } else {
            const Eigen::RowVectorXd delta = fit.splines[k].evaluate(xb) - fit.splines[k].evaluate(xa);
            const auto first = static_cast<Eigen::Index>(fit.fit.index_of(b + "_ns1"));
            w.segment(first, delta.size()) = delta.transpose();
        }
    }
    w(static_cast<Eigen::Index>(fit.fit.index_of("total"))) = profile_b.total() - profile_a.total();
    if (w.cwiseAbs().maxCoeff() == 0.0) return Estimate{};
    return linear_combination(fit.fit, w, fit.spec.use_robust);
}

}  // namespace hac24
