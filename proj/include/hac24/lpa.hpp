#pragma once

// Latent profile analysis: Gaussian mixtures fitted by multi-start EM, fit
// statistics and the bootstrap LR test, classification error, and step-3
// inference that accounts for misclassified profile membership.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hac24/linmod.hpp"

namespace hac24 {

enum class CovarianceStructure { EqualVarZeroCov, EqualVarFreeCov, FreeVarZeroCov, FreeVarFreeCov };

/// "equal-var-zero-cov", ... ; parse throws UsageError on unknown tags.
std::string to_string(CovarianceStructure s);
CovarianceStructure parse_structure(const std::string& tag);
const std::vector<CovarianceStructure>& all_structures();

/// Means K d + weights (K - 1) + covariance parameters of the structure.
int param_count(int k, int d, CovarianceStructure structure);

struct GaussianProfile {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

struct MixtureModel {
    std::vector<GaussianProfile> profiles;
    std::vector<double> weights;
    CovarianceStructure structure = CovarianceStructure::FreeVarFreeCov;
    double log_likelihood = 0.0;
    Eigen::Index n = 0;
    int parameters = 0;
    std::vector<std::string> indicators;
    int order_by = 0;  // profiles ascend by the mean of this indicator

    int k() const { return static_cast<int>(profiles.size()); }
    int d() const { return profiles.empty() ? 0 : static_cast<int>(profiles.front().mean.size()); }
};

using PosteriorMatrix = Eigen::MatrixXd;  // N x K

struct MixtureOptions {
    int k = 2;
    CovarianceStructure structure = CovarianceStructure::FreeVarFreeCov;
    int starts = 160;
    int max_iter = 250;
    double tol = 1e-8;  // relative log-likelihood change
    std::uint64_t seed = 0;
    double variance_floor = 1e-6;
    int order_by = 0;
    std::vector<std::string> indicators;
};

struct StartRecord {
    std::uint64_t seed = 0;
    bool degenerate = false;
    bool converged = false;
    int iterations = 0;
    double log_likelihood = 0.0;
    std::vector<double> trace;  // log-likelihood after each EM iteration
};

struct MixtureFit {
    MixtureModel model;
    PosteriorMatrix posteriors;
    std::vector<StartRecord> starts;
    int best_start = -1;
    int replications = 0;  // starts reaching the best log-likelihood within 1e-4
    int degenerate_starts = 0;
    int converged_starts = 0;
};

/// Rows of `data` are observations. Throws NumericalError when every start
/// degenerates or none converges.
MixtureFit fit_mixture(const Eigen::MatrixXd& data, const MixtureOptions& options);

/// Per-observation log densities ln(w_k) + ln N(x_i | mu_k, Sigma_k).
Eigen::MatrixXd log_joint(const MixtureModel& model, const Eigen::MatrixXd& data);
double log_likelihood(const MixtureModel& model, const Eigen::MatrixXd& data);
PosteriorMatrix posterior(const MixtureModel& model, const Eigen::MatrixXd& data);

/// Argmax per row; ties go to the lower index.
std::vector<int> modal_assignment(const PosteriorMatrix& posteriors);

/// Relabels profiles ascending by the mean of `order_by`; returns the
/// permutation applied (new position -> old index).
std::vector<int> canonicalize(MixtureModel& model);

/// Draws n observations; `classes` receives the generating profile if given.
Eigen::MatrixXd sample_mixture(const MixtureModel& model, std::size_t n, std::mt19937_64& rng,
                               std::vector<int>* classes = nullptr);

struct FitStats {
    double log_likelihood = 0.0;
    int parameters = 0;
    Eigen::Index n = 0;
    double aic = 0.0;
    double bic = 0.0;
    double caic = 0.0;
    double sabic = 0.0;
    double icl_bic = 0.0;
    double classification_entropy = 0.0;  // EN = sum -p ln p
    double entropy = 1.0;                 // 1 - EN / (N ln K)
};

/// Criteria from (LL, p, N) and an entropy total EN; k only scales entropy.
FitStats information_criteria(double log_likelihood, int parameters, Eigen::Index n, double en, int k);
FitStats fit_stats(const MixtureModel& model, const PosteriorMatrix& posteriors);

struct SelectionRow {
    int k = 0;
    CovarianceStructure structure{};
    FitStats stats;
    int replications = 0;
    int starts = 0;
    std::optional<double> blrt_p;  // K vs K - 1
};

struct BlrtOptions {
    int n_boot = 500;
    int starts = 160;       // observed-data fits
    int starts_boot = 20;   // refits on bootstrap samples
    int max_iter = 250;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    double max_failure_fraction = 0.2;
};

struct BlrtResult {
    double observed_lr = 0.0;
    double p_value = 1.0;
    int n_boot = 0;        // requested
    int used = 0;          // replicates that produced both fits
    int failures = 0;
    std::vector<double> boot_lr;
};

/// Parametric bootstrap of 2 (LL_K - LL_{K-1}) under the fitted K - 1 model.
BlrtResult blrt(const Eigen::MatrixXd& data, int k, CovarianceStructure structure, const BlrtOptions& options);

/// D[k][j]: share of latent class k's posterior mass assigned to class j.
Eigen::MatrixXd classification_error_matrix(const PosteriorMatrix& posteriors, const std::vector<int>& assignments);

enum class Step3Method { Naive, BCH };

std::string to_string(Step3Method m);

struct ClassEffect {
    int profile = 0;  // 0-based
    Estimate effect;  // mean difference versus the reference profile
};

struct Step3Result {
    Step3Method method = Step3Method::Naive;
    int reference = 0;
    FitResult fit;
    std::vector<ClassEffect> effects;  // all K profiles, reference fixed at 0
    WaldTest overall;                  // all class contrasts jointly
    int negative_weights = 0;          // BCH pseudo-observations with w < 0
};

/// Outcome on class indicators (+ covariates). Naive uses the modal
/// assignments; BCH expands each person into K rows weighted by the row of
/// D^{-1} for that person's assignment. SEs are cluster-robust by person.
Step3Result step3_distal(const PosteriorMatrix& posteriors, const std::vector<int>& assignments,
                         const Eigen::VectorXd& outcome, const Eigen::MatrixXd& covariates,
                         const std::vector<std::string>& covariate_names, Step3Method method, int reference = 0);

struct CovariateBlock {
    std::string name;
    Eigen::MatrixXd values;  // N x q
    std::vector<std::string> columns;
};

struct Step3CovariateResult {
    std::vector<std::string> columns;  // "(Intercept)" then covariate columns
    Eigen::MatrixXd coefficients;      // K x (1 + q), reference row zero
    Eigen::MatrixXd robust_covariance; // over the non-reference rows, row-major stacking
    std::vector<std::pair<std::string, WaldTest>> tests;  // per block
    double log_likelihood = 0.0;
    int iterations = 0;
    int reference = 0;
};

/// Multinomial logit of the latent class on covariates, with the modal
/// class linked to it through the fixed D. Damped Newton; sandwich SEs.
Step3CovariateResult step3_covariate(const std::vector<int>& assignments, const Eigen::MatrixXd& d,
                                     const std::vector<CovariateBlock>& blocks, int reference = 0);

/// One model per block (the default), or one joint model.
std::vector<Step3CovariateResult> step3_covariates(const std::vector<int>& assignments, const Eigen::MatrixXd& d,
                                                   const std::vector<CovariateBlock>& blocks, bool joint = false,
                                                   int reference = 0);

struct SleepStats {
    double mean = 0.0;
    double sd = 0.0;
    std::vector<double> correlation;  // with each fitted indicator
};

/// The left-out behavior as `total` minus the fitted indicators.
std::vector<SleepStats> derived_sleep_stats(const MixtureModel& model, double total = 1.0);

inline constexpr int kModelArtifactVersion = 1;

void write_model_json(std::ostream& out, const MixtureModel& model);
MixtureModel read_model_json(std::istream& in);
void save_model(const std::filesystem::path& path, const MixtureModel& model);
MixtureModel load_model(const std::filesystem::path& path);

}  // namespace hac24
