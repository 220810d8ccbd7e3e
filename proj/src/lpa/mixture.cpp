#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "hac24/errors.hpp"
#include "hac24/kernels.hpp"
#include "hac24/lpa.hpp"

namespace hac24 {

namespace {

struct Degenerate {
    std::string why;
};

bool shared_variance(CovarianceStructure s) {
    return s == CovarianceStructure::EqualVarZeroCov || s == CovarianceStructure::EqualVarFreeCov;
}

bool diagonal(CovarianceStructure s) {
    return s == CovarianceStructure::EqualVarZeroCov || s == CovarianceStructure::FreeVarZeroCov;
}

// Cholesky pieces for one profile: row-major inverse factor and log|Sigma|.
struct Factor {
    std::vector<double> linv;
    double log_det = 0.0;
};

Factor factorize(const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("profile covariance is not positive definite");
    const Eigen::Index d = cov.rows();
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::MatrixXd inv = l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
    Factor f;
    f.linv.resize(static_cast<std::size_t>(d * d));
    for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) f.linv[static_cast<std::size_t>(r * d + c)] = c <= r ? inv(r, c) : 0.0;
    }
    f.log_det = 2.0 * l.diagonal().array().log().sum();
    return f;
}

// Row-wise log-sum-exp; fills `post` with normalized posteriors and returns
// the total log-likelihood.
double normalize(const Eigen::MatrixXd& logj, Eigen::MatrixXd& post) {
    const Eigen::Index n = logj.rows();
    post.resize(n, logj.cols());
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = logj.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (logj.row(i).array() - m).exp();
        const double s = e.sum();
        post.row(i) = e / s;
        ll += m + std::log(s);
    }
    return ll;
}

MixtureModel m_step(const Eigen::MatrixXd& data, const Eigen::MatrixXd& resp, CovarianceStructure structure,
                    double floor) {
    const auto& kern = kernels::active_kernels();
    const Eigen::Index n = data.rows(), d = data.cols(), k = resp.cols();
    const auto nn = static_cast<std::size_t>(n), dd = static_cast<std::size_t>(d);

    MixtureModel m;
    m.structure = structure;
    m.n = n;
    std::vector<Eigen::MatrixXd> scatter;
    std::vector<double> mass;
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::VectorXd sum_wx(d);
        double nk = 0.0;
        kern.weighted_sum(data.data(), nn, dd, resp.col(c).data(), sum_wx.data(), &nk);
        if (!(nk > 1e-8 * static_cast<double>(n))) throw Degenerate{"profile weight collapsed"};
        GaussianProfile p;
        p.mean = sum_wx / nk;
        Eigen::MatrixXd s(d, d);
        kern.weighted_scatter(data.data(), nn, dd, resp.col(c).data(), p.mean.data(), s.data());
        scatter.push_back(std::move(s));
        mass.push_back(nk);
        m.weights.push_back(nk / static_cast<double>(n));
        m.profiles.push_back(std::move(p));
    }
    const double total = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
    for (auto& w : m.weights) w /= total;

    Eigen::MatrixXd pooled;
    if (shared_variance(structure)) {
        pooled = Eigen::MatrixXd::Zero(d, d);
        for (const auto& s : scatter) pooled += s;
        pooled /= std::accumulate(mass.begin(), mass.end(), 0.0);
    }
    for (Eigen::Index c = 0; c < k; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        Eigen::MatrixXd cov = shared_variance(structure) ? pooled : Eigen::MatrixXd(scatter[cc] / mass[cc]);
        if (diagonal(structure)) cov = Eigen::MatrixXd(cov.diagonal().asDiagonal());
        cov = 0.5 * (cov + cov.transpose());
        const double smallest = diagonal(structure)
                                    ? cov.diagonal().minCoeff()
                                    : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov, Eigen::EigenvaluesOnly)
                                          .eigenvalues()
                                          .minCoeff();
        if (!(smallest >= floor)) throw Degenerate{"covariance eigenvalue below the variance floor"};
        m.profiles[cc].covariance = std::move(cov);
    }
    return m;
}

// Random centres drawn from the data, soft responsibilities from scaled
// squared distances to them.
Eigen::MatrixXd initial_responsibilities(const Eigen::MatrixXd& data, int k, std::mt19937_64& rng) {
    const Eigen::Index n = data.rows(), d = data.cols();
    Eigen::MatrixXd resp(n, k);
    if (k == 1) {
        resp.setOnes();
        return resp;
    }
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::vector<Eigen::Index> centres(static_cast<std::size_t>(k));
    std::sample(idx.begin(), idx.end(), centres.begin(), k, rng);
    std::shuffle(centres.begin(), centres.end(), rng);

    const Eigen::RowVectorXd mean = data.colwise().mean();
    Eigen::RowVectorXd var = (data.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n);
    for (Eigen::Index j = 0; j < d; ++j) {
        if (!(var(j) > 0.0)) var(j) = 1.0;
    }
    Eigen::MatrixXd logits(n, k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const Eigen::RowVectorXd centre = data.row(centres[static_cast<std::size_t>(c)]);
        logits.col(c) = -0.5 * ((data.rowwise() - centre).array().square().rowwise() / var.array()).rowwise().sum();
    }
    normalize(logits, resp);
    return resp;
}

}  // namespace

std::string to_string(CovarianceStructure s) {
    switch (s) {
        case CovarianceStructure::EqualVarZeroCov: return "equal-var-zero-cov";
        case CovarianceStructure::EqualVarFreeCov: return "equal-var-free-cov";
        case CovarianceStructure::FreeVarZeroCov: return "free-var-zero-cov";
        case CovarianceStructure::FreeVarFreeCov: return "free-var-free-cov";
    }
    throw UsageError("unknown covariance structure");
}

CovarianceStructure parse_structure(const std::string& tag) {
    for (auto s : all_structures()) {
        if (to_string(s) == tag) return s;
    }
    throw UsageError("unknown covariance structure '" + tag +
                     "' (equal-var-zero-cov, equal-var-free-cov, free-var-zero-cov, free-var-free-cov)");
}

const std::vector<CovarianceStructure>& all_structures() {
    static const std::vector<CovarianceStructure> all{
        CovarianceStructure::EqualVarZeroCov, CovarianceStructure::EqualVarFreeCov,
        CovarianceStructure::FreeVarZeroCov, CovarianceStructure::FreeVarFreeCov};
    return all;
}

int param_count(int k, int d, CovarianceStructure structure) {
    if (k < 1 || d < 1) throw UsageError("param_count needs K >= 1 and d >= 1");
    const int tri = d * (d + 1) / 2;
    int cov = 0;
    switch (structure) {
        case CovarianceStructure::EqualVarZeroCov: cov = d; break;
        case CovarianceStructure::EqualVarFreeCov: cov = tri; break;
        case CovarianceStructure::FreeVarZeroCov: cov = k * d; break;
        case CovarianceStructure::FreeVarFreeCov: cov = k * tri; break;
    }
    return k * d + (k - 1) + cov;
}

Eigen::MatrixXd log_joint(const MixtureModel& model, const Eigen::MatrixXd& data) {
    const Eigen::Index n = data.rows(), d = data.cols();
    if (d != model.d()) throw DataError("data has " + std::to_string(d) + " indicators, model expects " +
                                        std::to_string(model.d()));
    const auto& kern = kernels::active_kernels();
    Eigen::MatrixXd out(n, model.k());
    Eigen::VectorXd maha(n);
    const double base = static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
    for (int c = 0; c < model.k(); ++c) {
        const auto& p = model.profiles[static_cast<std::size_t>(c)];
        const Factor f = factorize(p.covariance);
        kern.mahalanobis_sq(data.data(), static_cast<std::size_t>(n), static_cast<std::size_t>(d), p.mean.data(),
                            f.linv.data(), maha.data());
        out.col(c) = (std::log(model.weights[static_cast<std::size_t>(c)]) - 0.5 * (base + f.log_det)) -
                     0.5 * maha.array();
    }
    return out;
}

double log_likelihood(const MixtureModel& model, const Eigen::MatrixXd& data) {
    Eigen::MatrixXd post;
    return normalize(log_joint(model, data), post);
}

PosteriorMatrix posterior(const MixtureModel& model, const Eigen::MatrixXd& data) {
    PosteriorMatrix post;
    normalize(log_joint(model, data), post);
    return post;
}

std::vector<int> modal_assignment(const PosteriorMatrix& posteriors) {
    std::vector<int> out(static_cast<std::size_t>(posteriors.rows()));
    for (Eigen::Index i = 0; i < posteriors.rows(); ++i) {
        int best = 0;
        for (Eigen::Index c = 1; c < posteriors.cols(); ++c) {
            if (posteriors(i, c) > posteriors(i, best)) best = static_cast<int>(c);
        }
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

std::vector<int> canonicalize(MixtureModel& model) {
    std::vector<int> perm(static_cast<std::size_t>(model.k()));
    std::iota(perm.begin(), perm.end(), 0);
    if (model.k() == 0) return perm;
    if (model.order_by < 0 || model.order_by >= model.d()) throw UsageError("ordering indicator out of range");
    const auto key = [&](int c) { return model.profiles[static_cast<std::size_t>(c)].mean(model.order_by); };
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return key(a) < key(b); });
    std::vector<GaussianProfile> profiles;
    std::vector<double> weights;
    for (int c : perm) {
        profiles.push_back(model.profiles[static_cast<std::size_t>(c)]);
        weights.push_back(model.weights[static_cast<std::size_t>(c)]);
    }
    model.profiles = std::move(profiles);
    model.weights = std::move(weights);
    return perm;
}

MixtureFit fit_mixture(const Eigen::MatrixXd& data, const MixtureOptions& options) {
    const Eigen::Index n = data.rows(), d = data.cols();
    if (options.k < 1) throw UsageError("K must be at least 1");
    if (options.starts < 1) throw UsageError("need at least one start");
    if (options.max_iter < 1) throw UsageError("max_iter must be positive");
    if (d < 1) throw DataError("mixture data has no indicators");
    if (!data.allFinite()) throw DataError("mixture data has non-finite entries");
    const int p = param_count(options.k, static_cast<int>(d), options.structure);
    if (n <= p) {
        throw DataError("need more observations (" + std::to_string(n) + ") than parameters (" + std::to_string(p) +
                        ")");
    }

    MixtureFit out;
    std::optional<MixtureModel> best;
    PosteriorMatrix best_post;
    for (int s = 0; s < options.starts; ++s) {
        StartRecord rec;
        rec.seed = options.seed + static_cast<std::uint64_t>(s);
        std::mt19937_64 rng(rec.seed);
        try {
            MixtureModel model = m_step(data, initial_responsibilities(data, options.k, rng), options.structure,
                                        options.variance_floor);
            PosteriorMatrix post;
            double prev = 0.0;
            for (int it = 1; it <= options.max_iter; ++it) {
                const double ll = normalize(log_joint(model, data), post);
                rec.trace.push_back(ll);
                rec.iterations = it;
                model.log_likelihood = ll;
                if (it > 1 && std::abs(ll - prev) <= options.tol * std::abs(prev)) {
                    rec.converged = true;
                    break;
                }
                if (it == options.max_iter) break;
                prev = ll;
                model = m_step(data, post, options.structure, options.variance_floor);
            }
            rec.log_likelihood = model.log_likelihood;
            if (rec.converged) ++out.converged_starts;
            if (!best || rec.log_likelihood > best->log_likelihood) {
                best = std::move(model);
                best_post = std::move(post);
                out.best_start = s;
            }
        } catch (const Degenerate&) {
            rec.degenerate = true;
            ++out.degenerate_starts;
        } catch (const NumericalError&) {
            rec.degenerate = true;
            ++out.degenerate_starts;
        }
        out.starts.push_back(std::move(rec));
    }
    if (!best) throw NumericalError("all " + std::to_string(options.starts) + " starts degenerated");
    if (out.converged_starts == 0) {
        throw NumericalError("no start converged within " + std::to_string(options.max_iter) + " iterations");
    }
    for (const auto& rec : out.starts) {
        if (!rec.degenerate && std::abs(rec.log_likelihood - best->log_likelihood) <= 1e-4) ++out.replications;
    }

    best->n = n;
    best->parameters = p;
    best->indicators = options.indicators;
    if (best->indicators.empty()) {
        for (Eigen::Index j = 0; j < d; ++j) best->indicators.push_back("x" + std::to_string(j + 1));
    }
    best->order_by = options.order_by;
    const std::vector<int> perm = canonicalize(*best);
    out.posteriors.resize(n, options.k);
    for (int c = 0; c < options.k; ++c) out.posteriors.col(c) = best_post.col(perm[static_cast<std::size_t>(c)]);
    out.model = std::move(*best);
    return out;
}

Eigen::MatrixXd sample_mixture(const MixtureModel& model, std::size_t n, std::mt19937_64& rng,
                               std::vector<int>* classes) {
    const int d = model.d();
    std::discrete_distribution<int> pick(model.weights.begin(), model.weights.end());
    std::normal_distribution<double> z;
    std::vector<Eigen::MatrixXd> chol;
    for (const auto& p : model.profiles) {
        Eigen::LLT<Eigen::MatrixXd> llt(p.covariance);
        if (llt.info() != Eigen::Success) throw NumericalError("profile covariance is not positive definite");
        chol.push_back(llt.matrixL());
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
    if (classes) classes->assign(n, 0);
    Eigen::VectorXd e(d);
    for (std::size_t i = 0; i < n; ++i) {
        const int c = pick(rng);
        for (int j = 0; j < d; ++j) e(j) = z(rng);
        out.row(static_cast<Eigen::Index>(i)) =
            (model.profiles[static_cast<std::size_t>(c)].mean + chol[static_cast<std::size_t>(c)] * e).transpose();
        if (classes) (*classes)[i] = c;
    }
    return out;
}

}  // namespace hac24
