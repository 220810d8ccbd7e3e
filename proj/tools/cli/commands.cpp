#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "cli/cli.hpp"
#include "cli/svg.hpp"
#include "hac24/coda.hpp"
#include "hac24/errors.hpp"
#include "hac24/ism.hpp"
#include "hac24/lpa.hpp"

namespace hac24::cli {

namespace fs = std::filesystem;

namespace {

void note(const RunConfig& cfg, const std::string& msg) {
    if (cfg.log) *cfg.log << msg << '\n';
}

std::string first_line(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    return line;
}

std::vector<Cell> estimate_cells(const Estimate& e) {
    return {e.estimate, e.se, e.ci_low, e.ci_high, e.p_value};
}

const std::vector<std::string> kEstimateColumns{"estimate", "se", "ci_low", "ci_high", "p_value"};

std::vector<std::string> with_prefix(const std::string& prefix, const std::vector<std::string>& cols) {
    std::vector<std::string> out;
    for (const auto& c : cols) out.push_back(prefix + c);
    return out;
}

std::vector<std::string> resolve_covariates(const std::vector<std::string>& given) {
    if (given.empty()) return known_covariates();
    if (given.size() == 1 && given[0] == "none") return {};
    const auto& known = known_covariates();
    std::set<std::string> seen;
    for (const auto& c : given) {
        if (std::find(known.begin(), known.end(), c) == known.end()) {
            throw UsageError("unknown covariate '" + c + "' (age, sex, race, education, bmi, cesd, health, or none)");
        }
        if (!seen.insert(c).second) throw UsageError("covariate '" + c + "' listed twice");
    }
    return given;
}

CohortTable analysis_cohort(const RunConfig& cfg, const CohortTable& cohort, const std::vector<std::string>& covariates,
                            bool need_outcome) {
    std::vector<std::string> required = covariates;
    if (need_outcome) required.push_back("cognition");
    CompleteCase cc = complete_case(cohort, required);
    if (cc.report.n_excluded > 0) note(cfg, cc.report.summary());
    if (cc.cohort.empty()) throw DataError("no persons left after removing missing values");
    return std::move(cc.cohort);
}

void require_nonempty(const CohortTable& c) {
    if (c.empty()) throw DataError("cohort is empty");
}

fs::path emit(const RunConfig& cfg, const Table& t, Written& written) {
    const fs::path p = write_table(cfg.out_dir, t, cfg.format);
    note(cfg, "wrote " + p.string());
    written.push_back(p);
    return p;
}

void emit_file(const RunConfig& cfg, const std::string& name, const std::string& content, Written& written) {
    const fs::path p = cfg.out_dir / name;
    write_atomic(p, content);
    note(cfg, "wrote " + p.string());
    written.push_back(p);
}

const std::string& behavior_label(const CohortTable& c, const std::string& b) {
    const auto& labels = c.behaviors();
    const auto it = std::find(labels.begin(), labels.end(), b);
    if (it == labels.end()) throw UsageError("unknown behavior '" + b + "' (sit, stand, step, sleep)");
    return *it;
}

// Sit, stand and step as proportions of the day (or hours/day).
Eigen::MatrixXd indicator_data(const CohortTable& cohort, bool hours) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(cohort.size()), 3);
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto parts = cohort.compositions()[i].parts();
        for (Eigen::Index j = 0; j < 3; ++j) {
            x(static_cast<Eigen::Index>(i), j) = parts[static_cast<std::size_t>(j)] * (hours ? 24.0 : 1.0);
        }
    }
    return x;
}

std::vector<std::string> indicator_names(bool hours) {
    if (hours) return {"sit_hours", "stand_hours", "step_hours"};
    return {"sit", "stand", "step"};
}

bool model_uses_hours(const MixtureModel& m) {
    if (m.indicators == indicator_names(true)) return true;
    if (m.indicators == indicator_names(false)) return false;
    throw DataError("model indicators must be sit, stand, step (proportions or hours)");
}

std::vector<CovarianceStructure> parse_structures(const std::string& text) {
    std::vector<CovarianceStructure> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok == "all") {
            for (auto s : all_structures()) out.push_back(s);
        } else if (tok == "free") {
            out.push_back(CovarianceStructure::FreeVarFreeCov);
        } else if (tok == "equal") {
            out.push_back(CovarianceStructure::EqualVarFreeCov);
        } else if (tok == "diagonal") {
            out.push_back(CovarianceStructure::FreeVarZeroCov);
        } else {
            out.push_back(parse_structure(tok));
        }
    }
    if (out.empty()) throw UsageError("--covariance needs at least one structure");
    return out;
}

std::vector<CurveSeries> to_series(const std::vector<ReallocationCurve>& curves) {
    std::vector<CurveSeries> out;
    for (const auto& c : curves) {
        CurveSeries s;
        s.label = c.mode == "pairwise" ? c.from + " to " + c.behavior : c.behavior;
        for (const auto& p : c.points) {
            s.x.push_back(p.delta);
            s.y.push_back(p.effect.estimate);
            s.lo.push_back(p.effect.ci_low);
            s.hi.push_back(p.effect.ci_high);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<ReallocationCurve> build_curves(const CohortTable& cohort, const CodaOptions& opts,
                                            const std::optional<std::string>& pivot, bool pairwise,
                                            const std::vector<double>& deltas) {
    std::vector<ReallocationCurve> curves;
    if (pairwise) {
        if (!pivot) throw UsageError("--pairwise needs --pivot (the behavior receiving time)");
        const std::string& to = behavior_label(cohort, *pivot);
        const CodaFit fit = fit_coda(cohort, to, opts);
        for (const auto& from : cohort.behaviors()) {
            if (from != to) curves.push_back(reallocation_curve_pairwise(fit, from, to, deltas));
        }
    } else {
        std::vector<std::string> targets;
        if (pivot) {
            targets.push_back(behavior_label(cohort, *pivot));
        } else {
            targets = cohort.behaviors();
        }
        for (const auto& b : targets) {
            const CodaFit fit = fit_coda(cohort, b, opts);
            curves.push_back(reallocation_curve_proportional(fit, b, deltas));
        }
    }
    return curves;
}

std::string curves_svg(const std::vector<ReallocationCurve>& curves, bool pairwise) {
    return curve_svg(pairwise ? "Pairwise reallocation" : "Proportional reallocation", "Change in minutes/day",
                     "Difference in outcome", to_series(curves));
}

int largest_profile(const MixtureModel& m) {
    return static_cast<int>(std::max_element(m.weights.begin(), m.weights.end()) - m.weights.begin());
}

}  // namespace

std::vector<double> parse_delta_grid(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string tok;
    try {
        while (std::getline(ss, tok, ':')) {
            std::size_t used = 0;
            v.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        }
    } catch (const std::logic_error&) {
        v.clear();
    }
    if (v.size() != 3) throw UsageError("--delta-grid expects lo:hi:step, got '" + text + "'");
    const double lo = v[0], hi = v[1], step = v[2];
    if (!(step > 0.0) || !(hi >= lo)) throw UsageError("--delta-grid needs lo <= hi and step > 0");
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    if (count > 100000) throw UsageError("--delta-grid has too many points");
    std::vector<double> out;
    for (long i = 0; i <= count; ++i) {
        const double v = lo + static_cast<double>(i) * step;
        out.push_back(std::abs(v) < 1e-9 * step ? 0.0 : v);
    }
    if (lo < 0.0 && hi > 0.0 && std::find(out.begin(), out.end(), 0.0) == out.end()) {
        out.insert(std::upper_bound(out.begin(), out.end(), 0.0), 0.0);
    }
    return out;
}

std::vector<int> parse_int_range(const std::string& text) {
    auto to_int = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::logic_error&) {
            throw UsageError("expected an integer range like 2:6, got '" + text + "'");
        }
    };
    std::vector<int> out;
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        const int lo = to_int(text.substr(0, colon)), hi = to_int(text.substr(colon + 1));
        if (hi < lo) throw UsageError("empty range '" + text + "'");
        for (int k = lo; k <= hi; ++k) out.push_back(k);
    } else {
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(to_int(tok));
    }
    if (out.empty()) throw UsageError("empty range '" + text + "'");
    return out;
}

CohortTable load_input(const RunConfig& cfg) {
    if (cfg.input.empty()) throw UsageError("an input file is required");
    const std::string head = first_line(cfg.input);
    if (head == kDayCsvHeader) {
        if (!cfg.covariate_file) throw UsageError("a day-level input needs --covariate-file");
        DayLoad load = load_day_csv(cfg.input);
        if (!load.errors.empty()) {
            const auto& e = load.errors.front();
            throw DataError(cfg.input.string() + " line " + std::to_string(e.line) + ": " + e.message + " (" +
                            std::to_string(load.errors.size()) + " bad rows)");
        }
        const ValidityResult validity = validate_days(std::move(load.records));
        const CovariateTable cov = load_covariate_csv(*cfg.covariate_file);
        note(cfg, "retained " + std::to_string(validity.retained.size()) + " of " +
                      std::to_string(validity.valid_day_count.size()) + " persons with at least " +
                      std::to_string(kMinValidDays) + " valid days");
        return CohortTable(aggregate_cohort(validity, cov));
    }
    return load_cohort_csv(cfg.input);
}

Written cmd_describe(const RunConfig& cfg) {
    const CohortTable cohort = load_input(cfg);
    require_nonempty(cohort);
    const DescriptiveTable d = describe(cohort);
    Table t{"describe", {"section", "variable", "level", "value", "spread", "q1", "q3", "display"}, {}};
    auto opt = [](const std::optional<double>& v) -> Cell {
        if (v) return *v;
        return std::monostate{};
    };
    for (const auto& r : d.rows) {
        t.add({r.section, r.variable, r.level, opt(r.value), opt(r.spread), opt(r.q1), opt(r.q3), r.display});
    }
    Written w;
    note(cfg, "N = " + std::to_string(d.n));
    emit(cfg, t, w);
    return w;
}

Written cmd_ism(const RunConfig& cfg, const IsmArgs& args) {
    if (args.minutes < 0.0) throw UsageError("--minutes must be nonnegative");
    const auto covs = resolve_covariates(args.covariates);
    const CohortTable cohort = analysis_cohort(cfg, load_input(cfg), covs, true);
    std::optional<Subgroup> sub;
    if (args.subgroups) sub = Subgroup{"step", args.subgroup_step_cut};
    const auto panels = substitution_table(cohort, covs, args.minutes, sub, args.robust);

    Table t{"ism_table", {"panel", "n", "minutes", "from", "to"}, {}};
    for (const auto& c : kEstimateColumns) t.columns.push_back(c);
    for (const auto& p : panels) {
        for (std::size_t i = 0; i < p.labels.size(); ++i) {
            for (std::size_t j = 0; j < p.labels.size(); ++j) {
                if (!p.cells[i][j].present) continue;
                std::vector<Cell> row{p.panel, static_cast<long long>(p.n), p.minutes, p.labels[i], p.labels[j]};
                for (auto& c : estimate_cells(p.cells[i][j].effect)) row.push_back(std::move(c));
                t.add(std::move(row));
            }
        }
    }
    Written w;
    emit(cfg, t, w);

    if (args.flexible) {
        IsmSpec spec;
        spec.dropped = behavior_label(cohort, args.dropped);
        spec.covariates = covs;
        spec.minutes = args.minutes;
        spec.use_robust = args.robust;
        const IsmFit fit = fit_flexible_ism(cohort, spec, args.knot_grid);
        Table tests{"ism_flexible", {"dropped", "knots", "behavior", "statistic", "df", "p_value"}, {}};
        for (const auto& bt : fit.tests) {
            tests.add({spec.dropped, static_cast<long long>(fit.knots), bt.behavior, bt.test.statistic,
                       static_cast<long long>(bt.test.df), bt.test.p_value});
        }
        Table gcv{"ism_gcv", {"knots", "gcv", "chosen"}, {}};
        for (const auto& [k, g] : fit.gcv_path) gcv.add({static_cast<long long>(k), g, k == fit.knots});
        emit(cfg, tests, w);
        emit(cfg, gcv, w);
    }
    return w;
}

Written cmd_coda(const RunConfig& cfg, const CodaArgs& args) {
    const auto covs = resolve_covariates(args.covariates);
    const auto deltas = parse_delta_grid(args.delta_grid);
    const CohortTable cohort = analysis_cohort(cfg, load_input(cfg), covs, true);
    CodaOptions opts;
    opts.covariates = covs;
    opts.use_robust = args.robust;

    Written w;
    Table piv{"coda_pivots", {"pivot"}, {}};
    for (const auto& c : kEstimateColumns) piv.columns.push_back(c);
    for (const auto& r : pivot_table(cohort, opts)) {
        std::vector<Cell> row{r.pivot};
        for (auto& c : estimate_cells(r.effect)) row.push_back(std::move(c));
        piv.add(std::move(row));
    }
    emit(cfg, piv, w);

    const auto curves = build_curves(cohort, opts, args.pivot, args.pairwise, deltas);
    Table ct{"coda_curves", {"mode", "behavior", "from", "delta"}, {}};
    for (const auto& c : kEstimateColumns) ct.columns.push_back(c);
    ct.columns.push_back("extrapolated");
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            std::vector<Cell> row{c.mode, c.behavior, c.from.empty() ? Cell{} : Cell{c.from}, p.delta};
            for (auto& e : estimate_cells(p.effect)) row.push_back(std::move(e));
            row.emplace_back(p.extrapolated);
            ct.add(std::move(row));
        }
    }
    emit(cfg, ct, w);
    emit_file(cfg, "coda_curves.svg", curves_svg(curves, args.pairwise), w);

    if (!args.compare.empty()) {
        Table g{"coda_groups",
                {"variable", "group", "n", "sit_hours", "stand_hours", "step_hours", "sleep_hours", "statistic", "df",
                 "p_value"},
                {}};
        for (const auto& var : args.compare) {
            const GroupComparison cmp = compare_group_means(cohort, covariate_groups(cohort, var), var);
            for (const auto& gm : cmp.groups) {
                std::vector<Cell> row{cmp.variable, gm.group, static_cast<long long>(gm.n)};
                for (double h : gm.hours) row.emplace_back(h);
                if (cmp.test) {
                    row.insert(row.end(), {cmp.test->statistic, static_cast<long long>(cmp.test->df), cmp.test->p_value});
                } else {
                    row.insert(row.end(), {Cell{}, Cell{}, Cell{}});
                }
                g.add(std::move(row));
            }
        }
        emit(cfg, g, w);
    }
    return w;
}

Written cmd_lpa(const RunConfig& cfg, const LpaArgs& args) {
    const auto ks = parse_int_range(args.classes);
    const auto structures = parse_structures(args.covariance);
    static const std::set<std::string> criteria{"aic", "bic", "caic", "sabic", "icl_bic"};
    if (!criteria.count(args.select)) throw UsageError("--select must be one of aic, bic, caic, sabic, icl_bic");
    const CohortTable cohort = load_input(cfg);
    require_nonempty(cohort);
    const Eigen::MatrixXd data = indicator_data(cohort, args.hours);

    struct Candidate {
        MixtureFit fit;
        FitStats stats;
    };
    std::vector<std::optional<Candidate>> fits;
    Table sel{"lpa_selection",
              {"structure", "k", "log_likelihood", "parameters", "n", "aic", "bic", "caic", "sabic", "icl_bic",
               "entropy", "blrt_p", "blrt_used", "replications", "starts", "converged_starts", "degenerate_starts",
               "status"},
              {}};
    for (auto structure : structures) {
        for (int k : ks) {
            MixtureOptions o;
            o.k = k;
            o.structure = structure;
            o.starts = args.starts;
            o.max_iter = args.max_iter;
            o.seed = cfg.seed;
            o.indicators = indicator_names(args.hours);
            note(cfg, "fitting " + to_string(structure) + " K=" + std::to_string(k));
            try {
                MixtureFit f = fit_mixture(data, o);
                const FitStats st = fit_stats(f.model, f.posteriors);
                std::vector<Cell> row{to_string(structure), static_cast<long long>(k), st.log_likelihood,
                                      static_cast<long long>(st.parameters), static_cast<long long>(st.n), st.aic,
                                      st.bic, st.caic, st.sabic, st.icl_bic, st.entropy};
                if (args.blrt && k >= 2) {
                    BlrtOptions bo;
                    bo.n_boot = args.boot;
                    bo.starts = args.starts;
                    bo.starts_boot = args.boot_starts;
                    bo.max_iter = args.max_iter;
                    bo.seed = cfg.seed;
                    const BlrtResult b = blrt(data, k, structure, bo);
                    row.insert(row.end(), {b.p_value, static_cast<long long>(b.used)});
                } else {
                    row.insert(row.end(), {Cell{}, Cell{}});
                }
                row.insert(row.end(), {static_cast<long long>(f.replications), static_cast<long long>(args.starts),
                                       static_cast<long long>(f.converged_starts),
                                       static_cast<long long>(f.degenerate_starts), std::string("ok")});
                sel.add(std::move(row));
                fits.push_back(Candidate{std::move(f), st});
            } catch (const NumericalError& e) {
                note(cfg, std::string("  failed: ") + e.what());
                std::vector<Cell> row{to_string(structure), static_cast<long long>(k)};
                row.resize(sel.columns.size() - 1);
                row.emplace_back(std::string("failed"));
                sel.add(std::move(row));
                fits.emplace_back(std::nullopt);
            }
        }
    }

    auto criterion = [&](const FitStats& s) {
        if (args.select == "aic") return s.aic;
        if (args.select == "caic") return s.caic;
        if (args.select == "sabic") return s.sabic;
        if (args.select == "icl_bic") return s.icl_bic;
        return s.bic;
    };
    int chosen = -1;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        if (!fits[i]) continue;
        if (args.chosen_k && fits[i]->fit.model.k() != *args.chosen_k) continue;
        if (chosen < 0 || criterion(fits[i]->stats) < criterion(fits[static_cast<std::size_t>(chosen)]->stats)) {
            chosen = static_cast<int>(i);
        }
    }
    if (chosen < 0) throw NumericalError("no candidate model could be fitted");
    const Candidate& best = *fits[static_cast<std::size_t>(chosen)];
    const MixtureModel& m = best.fit.model;
    sel.columns.push_back("chosen");
    for (std::size_t i = 0; i < sel.rows.size(); ++i) sel.rows[i].emplace_back(static_cast<int>(i) == chosen);
    note(cfg, "chosen: " + to_string(m.structure) + " K=" + std::to_string(m.k()));

    Written w;
    emit(cfg, sel, w);
    const fs::path model_path = cfg.out_dir / "model.json";
    fs::create_directories(cfg.out_dir);
    save_model(model_path, m);
    note(cfg, "wrote " + model_path.string());
    w.push_back(model_path);

    // Profile parameters with the left-out sleep share derived per profile.
    const auto sleep = derived_sleep_stats(m, args.hours ? 24.0 : 1.0);
    std::vector<std::string> ind = m.indicators;
    const std::string sleep_name = args.hours ? "sleep_hours" : "sleep";
    Table prof{"lpa_profiles", {"profile", "weight", "indicator", "mean", "sd"}, {}};
    for (const auto& i : ind) prof.columns.push_back("corr_" + i);
    prof.columns.push_back("corr_" + sleep_name);
    for (int k = 0; k < m.k(); ++k) {
        const auto& g = m.profiles[static_cast<std::size_t>(k)];
        const auto& s = sleep[static_cast<std::size_t>(k)];
        for (int j = 0; j < m.d(); ++j) {
            std::vector<Cell> row{static_cast<long long>(k + 1), m.weights[static_cast<std::size_t>(k)],
                                  ind[static_cast<std::size_t>(j)], g.mean(j), std::sqrt(g.covariance(j, j))};
            for (int l = 0; l < m.d(); ++l) {
                row.emplace_back(g.covariance(j, l) / std::sqrt(g.covariance(j, j) * g.covariance(l, l)));
            }
            row.emplace_back(s.correlation[static_cast<std::size_t>(j)]);
            prof.add(std::move(row));
        }
        std::vector<Cell> row{static_cast<long long>(k + 1), m.weights[static_cast<std::size_t>(k)], sleep_name, s.mean,
                              s.sd};
        for (double r : s.correlation) row.emplace_back(r);
        row.emplace_back(1.0);
        prof.add(std::move(row));
    }
    emit(cfg, prof, w);

    const auto assign = modal_assignment(best.fit.posteriors);
    const Eigen::MatrixXd d = classification_error_matrix(best.fit.posteriors, assign);
    Table cls{"lpa_classification", {"latent_profile"}, {}};
    for (int j = 0; j < m.k(); ++j) cls.columns.push_back("assigned_" + std::to_string(j + 1));
    for (int k = 0; k < m.k(); ++k) {
        std::vector<Cell> row{static_cast<long long>(k + 1)};
        for (int j = 0; j < m.k(); ++j) row.emplace_back(d(k, j));
        cls.add(std::move(row));
    }
    emit(cfg, cls, w);

    Table asg{"lpa_assignments", {"person_id", "profile"}, {}};
    for (int j = 0; j < m.k(); ++j) asg.columns.push_back("posterior_" + std::to_string(j + 1));
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        std::vector<Cell> row{cohort[i].id, static_cast<long long>(assign[i] + 1)};
        for (int j = 0; j < m.k(); ++j) row.emplace_back(best.fit.posteriors(static_cast<Eigen::Index>(i), j));
        asg.add(std::move(row));
    }
    emit(cfg, asg, w);
    return w;
}

Written cmd_step3(const RunConfig& cfg, const Step3Args& args) {
    if (args.outcome != "cognition") throw UsageError("the only outcome column is 'cognition'");
    static const std::set<std::string> methods{"bch", "naive", "both", "ml"};
    if (!methods.count(args.method)) throw UsageError("--method must be bch, naive, both or ml");
    const MixtureModel model = load_model(args.model);
    const bool hours = model_uses_hours(model);
    const int k = model.k();
    const int ref = args.reference ? *args.reference - 1 : largest_profile(model);
    if (ref < 0 || ref >= k) throw UsageError("--reference must lie in 1.." + std::to_string(k));
    const bool ml = args.method == "ml";
    const auto covs = resolve_covariates(args.covariates);
    if (ml && covs.empty()) throw UsageError("--method ml needs at least one covariate");
    const CohortTable cohort = analysis_cohort(cfg, load_input(cfg), covs, !ml);

    const Eigen::MatrixXd data = indicator_data(cohort, hours);
    const PosteriorMatrix post = posterior(model, data);
    const auto assign = modal_assignment(post);
    const Eigen::MatrixXd d = classification_error_matrix(post, assign);
    Written w;

    Table cls{"step3_classification", {"latent_profile"}, {}};
    for (int j = 0; j < k; ++j) cls.columns.push_back("assigned_" + std::to_string(j + 1));
    for (int a = 0; a < k; ++a) {
        std::vector<Cell> row{static_cast<long long>(a + 1)};
        for (int j = 0; j < k; ++j) row.emplace_back(d(a, j));
        cls.add(std::move(row));
    }

    if (ml) {
        std::vector<CovariateBlock> blocks;
        for (const auto& c : covs) {
            const std::vector<std::string> one{c};
            CovariateColumns cc = covariate_columns(cohort, one);
            blocks.push_back({c, std::move(cc.values), std::move(cc.columns)});
        }
        const auto results = step3_covariates(assign, d, blocks, args.joint, ref);
        Table coef{"step3_ml", {"model", "profile", "column"}, {}};
        for (const auto& c : kEstimateColumns) coef.columns.push_back(c);
        Table tests{"step3_ml_tests", {"model", "block", "statistic", "df", "p_value"}, {}};
        for (std::size_t r = 0; r < results.size(); ++r) {
            const auto& res = results[r];
            const std::string name = args.joint ? "joint" : blocks[r].name;
            const auto q1 = static_cast<Eigen::Index>(res.columns.size());
            Eigen::Index slot = 0;
            for (int a = 0; a < k; ++a) {
                if (a == res.reference) continue;
                for (Eigen::Index c = 0; c < q1; ++c) {
                    const Eigen::Index idx = slot * q1 + c;
                    Estimate e;
                    e.estimate = res.coefficients(a, c);
                    e.se = std::sqrt(res.robust_covariance(idx, idx));
                    e.ci_low = e.estimate - kZ975 * e.se;
                    e.ci_high = e.estimate + kZ975 * e.se;
                    e.p_value = normal_two_sided_p(e.estimate / e.se);
                    std::vector<Cell> row{name, static_cast<long long>(a + 1), res.columns[static_cast<std::size_t>(c)]};
                    for (auto& x : estimate_cells(e)) row.push_back(std::move(x));
                    coef.add(std::move(row));
                }
                ++slot;
            }
            for (const auto& [block, t] : res.tests) {
                tests.add({name, block, t.statistic, static_cast<long long>(t.df), t.p_value});
            }
        }
        emit(cfg, coef, w);
        emit(cfg, tests, w);
        emit(cfg, cls, w);
        return w;
    }

    const Eigen::VectorXd y = cohort.cognition();
    const CovariateColumns cc = covariate_columns(cohort, covs);
    std::vector<Step3Method> run;
    if (args.method == "naive" || args.method == "both") run.push_back(Step3Method::Naive);
    if (args.method == "bch" || args.method == "both") run.push_back(Step3Method::BCH);
    std::vector<Step3Result> results;
    for (auto m : run) results.push_back(step3_distal(post, assign, y, cc.values, cc.columns, m, ref));

    Table t{"step3", {"profile", "n_assigned", "reference"}, {}};
    for (const auto& r : results) {
        for (const auto& c : with_prefix(to_string(r.method) + "_", kEstimateColumns)) t.columns.push_back(c);
    }
    for (int a = 0; a < k; ++a) {
        const auto n_a = std::count(assign.begin(), assign.end(), a);
        std::vector<Cell> row{static_cast<long long>(a + 1), static_cast<long long>(n_a), a == ref};
        for (const auto& r : results) {
            for (auto& c : estimate_cells(r.effects[static_cast<std::size_t>(a)].effect)) row.push_back(std::move(c));
        }
        t.add(std::move(row));
    }
    Table tests{"step3_tests", {"method", "n", "statistic", "df", "p_value", "negative_weights"}, {}};
    for (const auto& r : results) {
        tests.add({to_string(r.method), static_cast<long long>(cohort.size()), r.overall.statistic,
                   static_cast<long long>(r.overall.df), r.overall.p_value,
                   static_cast<long long>(r.negative_weights)});
    }
    emit(cfg, t, w);
    emit(cfg, tests, w);
    emit(cfg, cls, w);
    return w;
}

Written cmd_simulate(const RunConfig& cfg, const SimulateArgs& args) {
    if (args.n == 0) throw UsageError("--n must be positive");
    const SimulationSpec spec = args.spec ? load_simulation_spec(*args.spec) : default_simulation_spec();
    const SimulatedCohort sim = simulate_cohort(spec, args.n, cfg.seed, args.days);
    Written w;
    std::ostringstream s;
    write_cohort_csv(s, sim.cohort);
    emit_file(cfg, "cohort.csv", s.str(), w);
    if (args.days) {
        std::ostringstream d, c;
        write_day_csv(d, sim.days);
        CovariateTable table;
        for (const auto& p : sim.cohort.persons()) table[p.id] = CovariateRecord{p.covariates, p.cognition};
        write_covariate_csv(c, table);
        emit_file(cfg, "days.csv", d.str(), w);
        emit_file(cfg, "covariates.csv", c.str(), w);
    }
    return w;
}

Written cmd_plot(const RunConfig& cfg, const PlotArgs& args) {
    const CohortTable cohort = load_input(cfg);
    require_nonempty(cohort);
    Written w;
    std::optional<MixtureModel> model;
    if (args.model) model = load_model(*args.model);
    auto assignments = [&]() {
        return modal_assignment(posterior(*model, indicator_data(cohort, model_uses_hours(*model))));
    };

    if (args.kind == "ternary") {
        std::vector<std::string> parts;
        std::stringstream ss(args.parts);
        std::string tok;
        while (std::getline(ss, tok, ',')) parts.push_back(behavior_label(cohort, tok));
        if (parts.size() != 3 || std::set<std::string>(parts.begin(), parts.end()).size() != 3) {
            throw UsageError("--parts needs three distinct behaviors");
        }
        std::array<std::size_t, 3> idx{};
        for (std::size_t j = 0; j < 3; ++j) idx[j] = cohort.compositions().front().index_of(parts[j]);
        std::vector<std::array<double, 3>> pts;
        for (const auto& c : cohort.compositions()) pts.push_back({c[idx[0]], c[idx[1]], c[idx[2]]});
        std::vector<int> groups;
        if (model) groups = assignments();
        emit_file(cfg, "ternary.svg", ternary_svg(pts, {parts[0], parts[1], parts[2]}, groups), w);
    } else if (args.kind == "realloc") {
        const auto covs = resolve_covariates(args.covariates);
        const CohortTable analysis = analysis_cohort(cfg, cohort, covs, true);
        CodaOptions opts;
        opts.covariates = covs;
        const auto curves = build_curves(analysis, opts, args.pivot, false, parse_delta_grid(args.delta_grid));
        emit_file(cfg, "realloc.svg", curves_svg(curves, false), w);
    } else if (args.kind == "profiles") {
        if (!model) throw UsageError("--kind profiles needs --model");
        const auto assign = assignments();
        const auto k = static_cast<std::size_t>(model->k());
        std::vector<std::string> groups;
        for (std::size_t g = 0; g < k; ++g) groups.push_back("Profile " + std::to_string(g + 1));
        const auto& labels = cohort.behaviors();
        std::vector<std::vector<std::vector<double>>> values(labels.size(), std::vector<std::vector<double>>(k));
        for (std::size_t i = 0; i < cohort.size(); ++i) {
            const auto parts = cohort.compositions()[i].parts();
            for (std::size_t j = 0; j < labels.size(); ++j) {
                values[j][static_cast<std::size_t>(assign[i])].push_back(parts[j] * 24.0);
            }
        }
        emit_file(cfg, "profiles.svg", boxplot_svg(labels, groups, values, "Hours/day"), w);
    } else {
        throw UsageError("--kind must be ternary, realloc or profiles");
    }
    return w;
}

}  // namespace hac24::cli
