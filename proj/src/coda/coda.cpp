#include "hac24/coda.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hac24/errors.hpp"

namespace hac24 {

namespace {

bool outside_range(const CodaFit& fit, const std::vector<double>& z) {
    for (std::size_t k = 0; k < z.size(); ++k) {
        if (z[k] < fit.ilr_min[k] || z[k] > fit.ilr_max[k]) return true;
    }
    return false;
}

std::string label_list(const Labels& labels) {
    std::string s;
    for (const auto& l : labels) s += (s.empty() ? "" : ",") + l;
    return s;
}

}  // namespace

CodaFit fit_coda(const CohortTable& cohort, const std::string& pivot, const CodaOptions& options) {
    CodaFit fit = fit_coda(cohort, pivot_basis(pivot, cohort.behaviors()), options);
    fit.pivot = pivot;
    return fit;
}

CodaFit fit_coda(const CohortTable& cohort, const SBPartition& basis, const CodaOptions& options) {
    if (cohort.empty()) throw DataError("empty cohort");
    const std::vector<Composition>& comps = cohort.compositions();
    // Bases may order parts differently; work in the basis order throughout.
    std::vector<Composition> ordered;
    ordered.reserve(comps.size());
    auto labels = std::make_shared<const Labels>(basis.labels());
    for (const auto& c : comps) {
        std::vector<double> parts(basis.parts());
        for (std::size_t j = 0; j < parts.size(); ++j) parts[j] = c[c.index_of(basis.labels()[j])];
        ordered.emplace_back(std::move(parts), labels);
    }
    const Eigen::MatrixXd z = ilr_rows(ordered, basis);
    const CovariateColumns cov = covariate_columns(cohort, options.covariates);

    const Eigen::Index n = z.rows(), q = z.cols();
    DesignMatrix x;
    x.values.resize(n, 1 + q + cov.values.cols());
    x.values.col(0).setOnes();
    x.values.middleCols(1, q) = z;
    x.values.rightCols(cov.values.cols()) = cov.values;
    x.columns.push_back("(Intercept)");
    for (Eigen::Index k = 0; k < q; ++k) x.columns.push_back("z" + std::to_string(k + 1));
    x.columns.insert(x.columns.end(), cov.columns.begin(), cov.columns.end());
    x.intercept = true;

    Composition baseline = options.baseline ? *options.baseline : compositional_mean(ordered);
    if (baseline.labels() != basis.labels()) {
        if (baseline.size() != basis.parts()) throw DataError("baseline has the wrong number of parts");
        std::vector<double> parts(basis.parts());
        for (std::size_t j = 0; j < parts.size(); ++j) parts[j] = baseline[baseline.index_of(basis.labels()[j])];
        baseline = Composition(std::move(parts), labels);
    }
    if (!(options.day_minutes > 0.0)) throw DataError("day length must be positive");

    std::vector<double> lo(static_cast<std::size_t>(q)), hi(static_cast<std::size_t>(q));
    for (Eigen::Index k = 0; k < q; ++k) {
        lo[static_cast<std::size_t>(k)] = z.col(k).minCoeff();
        hi[static_cast<std::size_t>(k)] = z.col(k).maxCoeff();
    }
    return CodaFit{fit_ols(x, cohort.cognition()),
                   basis,
                   std::nullopt,
                   std::move(baseline),
                   options.covariates,
                   std::move(lo),
                   std::move(hi),
                   options.day_minutes,
                   options.use_robust};
}

Contrast composition_contrast(const CodaFit& fit, const Composition& xa, const Composition& xb) {
    if (!xa.same_labels(xb) || xa.labels() != fit.basis.labels()) {
        throw DataError("composition labels (" + label_list(xa.labels()) + ") do not match the fitted basis (" +
                        label_list(fit.basis.labels()) + ")");
    }
    const IlrVector za = ilr(xa, fit.basis);
    const IlrVector zb = ilr(xb, fit.basis);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(fit.fit.p);
    for (std::size_t k = 0; k < za.coords.size(); ++k) w(fit.coordinate_index(k)) = zb.coords[k] - za.coords[k];
    Contrast out;
    out.effect = linear_combination(fit.fit, w, fit.use_robust);
    out.extrapolated = outside_range(fit, za.coords) || outside_range(fit, zb.coords);
    return out;
}

Composition one_vs_remaining_composition(const Composition& baseline, const std::string& behavior, double r) {
    const std::size_t i = baseline.index_of(behavior);
    const double x1 = baseline[i];
    if (!(r > -1.0 && r < (1.0 - x1) / x1)) {
        throw DataError("relative change " + format_number(r) + " of '" + behavior + "' is outside (-1, " +
                        format_number((1.0 - x1) / x1) + ")");
    }
    const double s = r * x1 / (1.0 - x1);
    std::vector<double> parts(baseline.parts().begin(), baseline.parts().end());
    for (std::size_t j = 0; j < parts.size(); ++j) parts[j] *= (j == i) ? 1.0 + r : 1.0 - s;
    return Composition(std::move(parts), baseline.labels_ptr());
}

Estimate one_vs_remaining_effect(const CodaFit& fit, double r) {
    if (!fit.pivot) throw UsageError("one-vs-remaining effects need a pivot fit");
    const double x1 = fit.baseline[fit.baseline.index_of(*fit.pivot)];
    if (!(r > -1.0 && r < (1.0 - x1) / x1)) {
        throw DataError("relative change " + format_number(r) + " is outside (-1, " + format_number((1.0 - x1) / x1) +
                        ")");
    }
    const double d = static_cast<double>(fit.basis.parts());
    const double s = r * x1 / (1.0 - x1);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(fit.fit.p);
    w(fit.coordinate_index(0)) = std::sqrt((d - 1.0) / d) * std::log((1.0 + r) / (1.0 - s));
    return linear_combination(fit.fit, w, fit.use_robust);
}

Composition pairwise_composition(const Composition& baseline, const std::string& from, const std::string& to,
                                 double minutes, double day_minutes) {
    const std::size_t i = baseline.index_of(from), j = baseline.index_of(to);
    if (i == j) throw DataError("pairwise reallocation needs two different behaviors");
    std::vector<double> parts(baseline.parts().begin(), baseline.parts().end());
    for (auto& p : parts) p *= day_minutes;
    parts[i] -= minutes;
    parts[j] += minutes;
    if (!(parts[i] > 0.0) || !(parts[j] > 0.0)) {
        throw DataError("moving " + format_number(minutes) + " min from '" + from + "' to '" + to +
                        "' leaves a non-positive part");
    }
    return Composition(std::move(parts), baseline.labels_ptr());
}

Contrast pairwise_reallocation(const CodaFit& fit, const std::string& from, const std::string& to, double minutes) {
    const Composition moved = pairwise_composition(fit.baseline, from, to, minutes, fit.day_minutes);
    if (minutes == 0.0) return Contrast{Estimate{}, outside_range(fit, ilr(fit.baseline, fit.basis).coords)};
    return composition_contrast(fit, fit.baseline, moved);
}

ReallocationCurve reallocation_curve_proportional(const CodaFit& fit, const std::string& behavior,
                                                  std::span<const double> deltas) {
    ReallocationCurve curve;
    curve.mode = "proportional";
    curve.behavior = behavior;
    const double base_minutes = fit.baseline[fit.baseline.index_of(behavior)] * fit.day_minutes;
    for (double delta : deltas) {
        const double r = delta / base_minutes;
        const Composition moved = one_vs_remaining_composition(fit.baseline, behavior, r);
        CurvePoint pt;
        pt.delta = delta;
        if (fit.pivot && *fit.pivot == behavior) {
            pt.effect = one_vs_remaining_effect(fit, r);
            pt.extrapolated = outside_range(fit, ilr(moved, fit.basis).coords);
        } else {
            const Contrast c = composition_contrast(fit, fit.baseline, moved);
            pt.effect = c.effect;
            pt.extrapolated = c.extrapolated;
        }
        curve.points.push_back(pt);
    }
    return curve;
}

ReallocationCurve reallocation_curve_pairwise(const CodaFit& fit, const std::string& from, const std::string& to,
                                              std::span<const double> deltas) {
    ReallocationCurve curve;
    curve.mode = "pairwise";
    curve.behavior = to;
    curve.from = from;
    for (double delta : deltas) {
        const Contrast c = pairwise_reallocation(fit, from, to, delta);
        curve.points.push_back({delta, c.effect, c.extrapolated});
    }
    return curve;
}

std::vector<double> delta_grid(double max_minutes, double step) {
    if (!(max_minutes > 0.0) || !(step > 0.0)) throw DataError("delta grid needs positive range and step");
    const auto k = static_cast<long>(std::floor(max_minutes / step + 1e-9));
    std::vector<double> out;
    for (long i = -k; i <= k; ++i) out.push_back(static_cast<double>(i) * step);
    return out;
}

std::vector<PivotRow> pivot_table(const CohortTable& cohort, const CodaOptions& options) {
    std::vector<PivotRow> rows;
    for (const auto& b : cohort.behaviors()) {
        const CodaFit fit = fit_coda(cohort, b, options);
        Eigen::VectorXd w = Eigen::VectorXd::Zero(fit.fit.p);
        w(fit.coordinate_index(0)) = 1.0;
        rows.push_back({b, linear_combination(fit.fit, w, fit.use_robust)});
    }
    return rows;
}

GroupComparison compare_group_means(const CohortTable& cohort, const Grouping& grouping, std::string variable) {
    if (grouping.labels.size() != cohort.size()) throw DataError("grouping needs one label per person");
    std::vector<std::string> order = grouping.levels;
    std::map<std::string, std::vector<Composition>> members;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const std::string& g = grouping.labels[i];
        if (g.empty()) continue;
        if (std::find(order.begin(), order.end(), g) == order.end()) order.push_back(g);
        members[g].push_back(cohort.compositions()[i]);
    }

    GroupComparison out;
    out.variable = std::move(variable);
    const SBPartition basis = pivot_basis(cohort.behaviors().front(), cohort.behaviors());
    std::vector<Eigen::MatrixXd> samples;
    for (const auto& g : order) {
        auto it = members.find(g);
        if (it == members.end()) continue;
        const Composition mean = compositional_mean(it->second);
        std::vector<double> hours(mean.parts().begin(), mean.parts().end());
        for (auto& h : hours) h *= 24.0;
        out.groups.push_back({g, it->second.size(), mean, std::move(hours)});
        samples.push_back(ilr_rows(it->second, basis));
    }
    if (out.groups.empty()) throw DataError("no persons with a group label");
    if (samples.size() >= 2) {
        for (const auto& gm : out.groups) {
            if (gm.n < basis.parts()) {
                throw DataError("group '" + gm.group + "' has " + std::to_string(gm.n) + " persons; need at least " +
                                std::to_string(basis.parts()));
            }
        }
        out.test = james_test(samples);
    }
    return out;
}

Grouping covariate_groups(const CohortTable& cohort, const std::string& covariate) {
    Grouping g;
    auto binary = [&](auto member, const char* zero, const char* one) {
        g.levels = {zero, one};
        for (const auto& p : cohort.persons()) {
            const auto& v = p.covariates.*member;
            g.labels.push_back(v ? (*v ? one : zero) : "");
        }
    };
    if (covariate == "sex") {
        binary(&Covariates::female, "Male", "Female");
    } else if (covariate == "race") {
        binary(&Covariates::nonwhite, "Non-Hispanic White", "Hispanic/Other race");
    } else if (covariate == "health") {
        binary(&Covariates::fair_poor_health, "Excellent/Very good/Good", "Fair/Poor");
    } else if (covariate == "age") {
        g.levels = {"65-74", "75-84", "85+"};
        for (const auto& p : cohort.persons()) {
            const auto& a = p.covariates.age_group;
            g.labels.push_back(a && *a >= 0 && *a <= 2 ? g.levels[static_cast<std::size_t>(*a)] : "");
        }
    } else {
        throw DataError("no grouping for covariate '" + covariate + "' (use sex, age, race or health)");
    }
    return g;
}

}  // namespace hac24
