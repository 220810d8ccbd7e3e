#include <cmath>

#include "hac24/errors.hpp"
#include "hac24/lpa.hpp"

namespace hac24 {

FitStats information_criteria(double log_likelihood, int parameters, Eigen::Index n, double en, int k) {
    if (n < 1) throw DataError("information criteria need N >= 1");
    FitStats s;
    s.log_likelihood = log_likelihood;
    s.parameters = parameters;
    s.n = n;
    const double dev = -2.0 * log_likelihood;
    const double p = parameters, nn = static_cast<double>(n);
    s.aic = dev + 2.0 * p;
    s.bic = dev + p * std::log(nn);
    s.caic = dev + p * (std::log(nn) + 1.0);
    s.sabic = dev + p * std::log((nn + 2.0) / 24.0);
    s.classification_entropy = en;
    s.icl_bic = s.bic + 2.0 * en;
    s.entropy = k <= 1 ? 1.0 : 1.0 - en / (nn * std::log(static_cast<double>(k)));
    return s;
}

FitStats fit_stats(const MixtureModel& model, const PosteriorMatrix& posteriors) {
    if (posteriors.cols() != model.k()) throw DataError("posterior columns do not match the number of profiles");
    double en = 0.0;
    for (Eigen::Index i = 0; i < posteriors.rows(); ++i) {
        for (Eigen::Index c = 0; c < posteriors.cols(); ++c) {
            const double v = posteriors(i, c);
            if (v > 0.0) en -= v * std::log(v);
        }
    }
    return information_criteria(model.log_likelihood, model.parameters, posteriors.rows(), en, model.k());
}

BlrtResult blrt(const Eigen::MatrixXd& data, int k, CovarianceStructure structure, const BlrtOptions& options) {
    if (k < 2) throw UsageError("BLRT needs K >= 2");
    if (options.n_boot < 19) throw UsageError("BLRT needs at least 19 bootstrap samples");

    auto fit = [&](const Eigen::MatrixXd& x, int kk, int starts, std::uint64_t seed) {
        MixtureOptions o;
        o.k = kk;
        o.structure = structure;
        o.starts = starts;
        o.max_iter = options.max_iter;
        o.tol = options.tol;
        o.seed = seed;
        return fit_mixture(x, o);
    };

    const MixtureFit null_fit = fit(data, k - 1, options.starts, options.seed);
    const MixtureFit alt_fit = fit(data, k, options.starts, options.seed);
    BlrtResult out;
    out.n_boot = options.n_boot;
    out.observed_lr = 2.0 * (alt_fit.model.log_likelihood - null_fit.model.log_likelihood);

    int exceed = 0;
    for (int b = 0; b < options.n_boot; ++b) {
        const std::uint64_t seed = options.seed + 1000003ULL * static_cast<std::uint64_t>(b + 1);
        std::mt19937_64 rng(seed);
        const Eigen::MatrixXd sim = sample_mixture(null_fit.model, static_cast<std::size_t>(data.rows()), rng);
        try {
            const double l0 = fit(sim, k - 1, options.starts_boot, seed).model.log_likelihood;
            const double l1 = fit(sim, k, options.starts_boot, seed).model.log_likelihood;
            const double lr = 2.0 * (l1 - l0);
            out.boot_lr.push_back(lr);
            if (lr >= out.observed_lr) ++exceed;
        } catch (const NumericalError&) {
            ++out.failures;
        }
    }
    out.used = static_cast<int>(out.boot_lr.size());
    if (out.failures > options.max_failure_fraction * options.n_boot) {
        throw NumericalError("BLRT: " + std::to_string(out.failures) + " of " + std::to_string(options.n_boot) +
                             " bootstrap refits failed");
    }
    out.p_value = (1.0 + exceed) / (out.used + 1.0);
    return out;
}

Eigen::MatrixXd classification_error_matrix(const PosteriorMatrix& posteriors, const std::vector<int>& assignments) {
    const Eigen::Index n = posteriors.rows(), k = posteriors.cols();
    if (static_cast<Eigen::Index>(assignments.size()) != n) throw DataError("one assignment per row is needed");
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int a = assignments[static_cast<std::size_t>(i)];
        if (a < 0 || a >= k) throw DataError("assignment out of range");
        d.col(a) += posteriors.row(i).transpose();
    }
    const Eigen::VectorXd mass = posteriors.colwise().sum().transpose();
    for (Eigen::Index c = 0; c < k; ++c) {
        if (!(mass(c) > 1e-12 * static_cast<double>(n))) {
            throw NumericalError("latent profile " + std::to_string(c + 1) + " has no posterior mass");
        }
        d.row(c) /= mass(c);
    }
    return d;
}

std::vector<SleepStats> derived_sleep_stats(const MixtureModel& model, double total) {
    std::vector<SleepStats> out;
    for (const auto& p : model.profiles) {
        SleepStats s;
        s.mean = total - p.mean.sum();
        const double var = p.covariance.sum();
        s.sd = std::sqrt(std::max(0.0, var));
        for (Eigen::Index j = 0; j < p.mean.size(); ++j) {
            const double cov = -p.covariance.col(j).sum();
            const double denom = s.sd * std::sqrt(p.covariance(j, j));
            s.correlation.push_back(denom > 0.0 ? cov / denom : 0.0);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace hac24
