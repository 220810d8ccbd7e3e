#include <iostream>

#include <CLI11.hpp>

#include "cli/cli.hpp"
#include "hac24/errors.hpp"

namespace hac24::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Daily activity composition analyses: substitution models, compositional regression and latent "
                 "profiles."};
    app.name("hac24");
    app.require_subcommand(1);

    RunConfig cfg;
    cfg.log = &out;
    std::string out_dir = ".";
    std::string format = "json";
    std::string covariate_file;
    auto common = [&](CLI::App* sub, bool input) {
        sub->add_option("--out", out_dir, "Output directory")->envname("HAC24_OUT");
        sub->add_option("--seed", cfg.seed, "Random seed");
        sub->add_option("--format", format, "Table format: json or csv")->check(CLI::IsMember({"json", "csv"}));
        if (input) {
            sub->add_option("input", cfg.input, "Cohort CSV, or day-level CSV with --covariate-file")->required();
            sub->add_option("--covariate-file", covariate_file, "Covariates for a day-level input");
        }
    };

    auto* describe = app.add_subcommand("describe", "Descriptive summary of a cohort");
    common(describe, true);

    IsmArgs ism;
    std::string ism_knots = "3,4,5";
    bool no_subgroups = false;
    auto* ism_cmd = app.add_subcommand("ism", "Isotemporal substitution table");
    common(ism_cmd, true);
    ism_cmd->add_option("--minutes", ism.minutes, "Minutes reallocated");
    ism_cmd->add_option("--subgroup-step-cut", ism.subgroup_step_cut, "Step minutes/day splitting the subgroups");
    ism_cmd->add_flag("--no-subgroups", no_subgroups, "Overall table only");
    ism_cmd->add_flag("--flexible", ism.flexible, "Also fit the spline model");
    ism_cmd->add_option("--dropped", ism.dropped, "Behavior left out of the flexible model");
    ism_cmd->add_option("--knots", ism_knots, "Knot counts searched by GCV");
    ism_cmd->add_option("--covariates", ism.covariates, "Adjustment covariates, or none")->delimiter(',');
    ism_cmd->add_flag("--robust", ism.robust, "Sandwich standard errors");

    CodaArgs coda;
    std::string coda_pivot;
    auto* coda_cmd = app.add_subcommand("coda", "Compositional regression, pivot table and reallocation curves");
    common(coda_cmd, true);
    coda_cmd->add_option("--pivot", coda_pivot, "Behavior whose curve is drawn (all when absent)");
    coda_cmd->add_option("--delta-grid", coda.delta_grid, "lo:hi:step in minutes/day");
    coda_cmd->add_flag("--pairwise", coda.pairwise, "Move time from each other behavior to the pivot");
    coda_cmd->add_option("--covariates", coda.covariates, "Adjustment covariates, or none")->delimiter(',');
    coda_cmd->add_option("--compare", coda.compare, "Compare compositional means across sex, age, race, health")
        ->delimiter(',');
    coda_cmd->add_flag("--robust", coda.robust, "Sandwich standard errors");

    LpaArgs lpa;
    int lpa_k = 0;
    auto* lpa_cmd = app.add_subcommand("lpa", "Latent profile selection and the chosen model");
    common(lpa_cmd, true);
    lpa_cmd->add_option("--classes", lpa.classes, "Profile counts, e.g. 2:6");
    lpa_cmd->add_option("--starts", lpa.starts, "Random starts per model");
    lpa_cmd->add_option("--max-iter", lpa.max_iter, "EM iterations per start");
    lpa_cmd->add_option("--covariance", lpa.covariance, "free, equal, diagonal, all, or structure tags");
    lpa_cmd->add_flag("--blrt", lpa.blrt, "Bootstrap likelihood ratio test");
    lpa_cmd->add_option("--boot", lpa.boot, "Bootstrap samples for the BLRT");
    lpa_cmd->add_option("--boot-starts", lpa.boot_starts, "Starts per bootstrap refit");
    lpa_cmd->add_flag("--hours", lpa.hours, "Indicators in hours/day instead of proportions");
    lpa_cmd->add_option("--select", lpa.select, "Selection criterion");
    lpa_cmd->add_option("--k", lpa_k, "Keep this profile count instead of the criterion minimum");

    Step3Args step3;
    int step3_ref = 0;
    auto* step3_cmd = app.add_subcommand("step3", "Profile differences in the outcome, or covariates of membership");
    step3_cmd->add_option("model", step3.model, "Model artifact from lpa")->required();
    common(step3_cmd, true);
    step3_cmd->add_option("--outcome", step3.outcome, "Outcome column");
    step3_cmd->add_option("--covariates", step3.covariates, "Covariates, or none")->delimiter(',');
    step3_cmd->add_option("--method", step3.method, "bch, naive, both or ml");
    step3_cmd->add_option("--reference", step3_ref, "Reference profile (1-based)");
    step3_cmd->add_flag("--joint", step3.joint, "ml: one model with every covariate");

    SimulateArgs sim;
    std::string sim_spec;
    auto* sim_cmd = app.add_subcommand("simulate", "Synthetic cohort");
    common(sim_cmd, false);
    sim_cmd->add_option("spec", sim_spec, "Simulation spec file (built-in default when absent)");
    sim_cmd->add_option("--n", sim.n, "Persons");
    sim_cmd->add_flag("--days", sim.days, "Also write day-level and covariate files");

    PlotArgs plot;
    std::string plot_model, plot_pivot;
    auto* plot_cmd = app.add_subcommand("plot", "SVG figures");
    common(plot_cmd, true);
    plot_cmd->add_option("--kind", plot.kind, "ternary, realloc or profiles");
    plot_cmd->add_option("--model", plot_model, "Model artifact (profiles; colors the ternary)");
    plot_cmd->add_option("--pivot", plot_pivot, "realloc: single behavior");
    plot_cmd->add_option("--parts", plot.parts, "ternary: three behaviors");
    plot_cmd->add_option("--delta-grid", plot.delta_grid, "realloc: lo:hi:step");
    plot_cmd->add_option("--covariates", plot.covariates, "realloc: adjustment covariates, or none")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        cfg.out_dir = out_dir;
        cfg.format = parse_format(format);
        if (!covariate_file.empty()) cfg.covariate_file = covariate_file;
        if (*describe) {
            cfg.subcommand = "describe";
            cmd_describe(cfg);
        } else if (*ism_cmd) {
            cfg.subcommand = "ism";
            ism.subgroups = !no_subgroups;
            ism.knot_grid = parse_int_range(ism_knots);
            cmd_ism(cfg, ism);
        } else if (*coda_cmd) {
            cfg.subcommand = "coda";
            if (!coda_pivot.empty()) coda.pivot = coda_pivot;
            cmd_coda(cfg, coda);
        } else if (*lpa_cmd) {
            cfg.subcommand = "lpa";
            if (lpa_cmd->count("--k")) lpa.chosen_k = lpa_k;
            cmd_lpa(cfg, lpa);
        } else if (*step3_cmd) {
            cfg.subcommand = "step3";
            if (step3_cmd->count("--reference")) step3.reference = step3_ref;
            cmd_step3(cfg, step3);
        } else if (*sim_cmd) {
            cfg.subcommand = "simulate";
            if (!sim_spec.empty()) sim.spec = sim_spec;
            cmd_simulate(cfg, sim);
        } else if (*plot_cmd) {
            cfg.subcommand = "plot";
            if (!plot_model.empty()) plot.model = plot_model;
            if (!plot_pivot.empty()) plot.pivot = plot_pivot;
            cmd_plot(cfg, plot);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    }
    return kOk;
}

}  // namespace hac24::cli
