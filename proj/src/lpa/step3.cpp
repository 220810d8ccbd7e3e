#include <cmath>

#include "hac24/errors.hpp"
#include "hac24/lpa.hpp"

namespace hac24 {

namespace {

std::string profile_column(int k) { return "profile" + std::to_string(k + 1); }

void check_assignments(const std::vector<int>& a, Eigen::Index n, Eigen::Index k) {
    if (static_cast<Eigen::Index>(a.size()) != n) throw DataError("one assignment per person is needed");
    for (int v : a) {
        if (v < 0 || v >= k) throw DataError("assignment out of range");
    }
}

WaldTest block_wald(const Eigen::VectorXd& theta, const Eigen::MatrixXd& cov, const std::vector<Eigen::Index>& idx) {
    const auto m = static_cast<Eigen::Index>(idx.size());
    Eigen::VectorXd b(m);
    Eigen::MatrixXd v(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
        b(r) = theta(idx[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < m; ++c) v(r, c) = cov(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(v);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw NumericalError("singular covariance in Wald test");
    WaldTest w;
    w.statistic = std::max(0.0, b.dot(ldlt.solve(b)));
    w.df = static_cast<int>(m);
    w.p_value = chi_square_sf(w.statistic, w.df);
    return w;
}

}  // namespace

std::string to_string(Step3Method m) { return m == Step3Method::Naive ? "naive" : "bch"; }

Step3Result step3_distal(const PosteriorMatrix& posteriors, const std::vector<int>& assignments,
                         const Eigen::VectorXd& outcome, const Eigen::MatrixXd& covariates,
                         const std::vector<std::string>& covariate_names, Step3Method method, int reference) {
    const Eigen::Index n = posteriors.rows(), k = posteriors.cols(), q = covariates.cols();
    check_assignments(assignments, n, k);
    if (k < 2) throw UsageError("step-3 analysis needs at least two profiles");
    if (reference < 0 || reference >= k) throw UsageError("reference profile out of range");
    if (outcome.size() != n) throw DataError("outcome length does not match the posteriors");
    if (covariates.rows() != n && q > 0) throw DataError("covariate rows do not match the posteriors");
    if (static_cast<Eigen::Index>(covariate_names.size()) != q) throw DataError("one name per covariate column");

    // weights[a][k]: weight of latent class k for a person assigned to a
    Eigen::MatrixXd weights = Eigen::MatrixXd::Identity(k, k);
    if (method == Step3Method::BCH) {
        const Eigen::MatrixXd d = classification_error_matrix(posteriors, assignments);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(d);
        if (!lu.isInvertible()) throw NumericalError("classification error matrix is singular");
        weights = lu.inverse();
    }

    std::vector<Eigen::Index> rows_person;
    std::vector<int> rows_class;
    std::vector<double> rows_weight;
    Step3Result out;
    out.method = method;
    out.reference = reference;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int a = assignments[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < k; ++c) {
            const double w = weights(a, c);
            if (w == 0.0) continue;
            if (w < 0.0) ++out.negative_weights;
            rows_person.push_back(i);
            rows_class.push_back(static_cast<int>(c));
            rows_weight.push_back(w);
        }
    }

    const auto m = static_cast<Eigen::Index>(rows_person.size());
    DesignMatrix x;
    x.intercept = true;
    x.values = Eigen::MatrixXd::Zero(m, k + q);
    x.columns.push_back("(Intercept)");
    for (int c = 0; c < k; ++c) {
        if (c != reference) x.columns.push_back(profile_column(c));
    }
    x.columns.insert(x.columns.end(), covariate_names.begin(), covariate_names.end());
    Eigen::VectorXd y(m), w(m);
    std::vector<long> cluster(static_cast<std::size_t>(m));
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto rr = static_cast<std::size_t>(r);
        const Eigen::Index i = rows_person[rr];
        const int c = rows_class[rr];
        x.values(r, 0) = 1.0;
        if (c != reference) x.values(r, c < reference ? c + 1 : c) = 1.0;
        if (q > 0) x.values.row(r).tail(q) = covariates.row(i);
        y(r) = outcome(i);
        w(r) = rows_weight[rr];
        cluster[rr] = static_cast<long>(i);
    }
    out.fit = fit_weighted(x, y, w, cluster);

    std::vector<Eigen::Index> idx;
    for (int c = 0; c < k; ++c) {
        ClassEffect e;
        e.profile = c;
        if (c != reference) {
            const auto j = static_cast<Eigen::Index>(out.fit.index_of(profile_column(c)));
            Eigen::VectorXd unit = Eigen::VectorXd::Zero(out.fit.p);
            unit(j) = 1.0;
            e.effect = linear_combination(out.fit, unit, true);
            idx.push_back(j);
        }
        out.effects.push_back(e);
    }
    out.overall = block_wald(out.fit.coefficients, out.fit.robust_covariance, idx);
    return out;
}

namespace {

// Multinomial logit with a fixed misclassification link. theta stacks the
// non-reference rows of B (each 1 + q long).
struct LinkedLogit {
    const Eigen::MatrixXd& x;  // N x (1 + q), leading column of ones
    const Eigen::MatrixXd& d;
    const std::vector<int>& assigned;
    int k;
    int reference;

    Eigen::Index width() const { return x.cols(); }

    Eigen::MatrixXd probabilities(const Eigen::VectorXd& theta) const {
        const Eigen::Index n = x.rows();
        Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(n, k);
        int slot = 0;
        for (int c = 0; c < k; ++c) {
            if (c == reference) continue;
            eta.col(c) = x * theta.segment(slot * width(), width());
            ++slot;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mx = eta.row(i).maxCoeff();
            eta.row(i) = (eta.row(i).array() - mx).exp();
            eta.row(i) /= eta.row(i).sum();
        }
        return eta;
    }

    double loglik(const Eigen::VectorXd& theta) const {
        const Eigen::MatrixXd pi = probabilities(theta);
        double ll = 0.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            ll += std::log(pi.row(i).dot(d.col(assigned[static_cast<std::size_t>(i)])));
        }
        return ll;
    }

    // Per-person score rows (N x dim).
    Eigen::MatrixXd scores(const Eigen::VectorXd& theta) const {
        const Eigen::MatrixXd pi = probabilities(theta);
        const Eigen::Index n = x.rows();
        Eigen::MatrixXd g(n, theta.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd link = d.col(assigned[static_cast<std::size_t>(i)]);
            const double li = pi.row(i).dot(link);
            int slot = 0;
            for (int c = 0; c < k; ++c) {
                if (c == reference) continue;
                const double f = pi(i, c) * (link(c) / li - 1.0);
                g.block(i, slot * width(), 1, width()) = f * x.row(i);
                ++slot;
            }
        }
        return g;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const { return scores(theta).colwise().sum().transpose(); }

    Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const {
        const Eigen::Index m = theta.size();
        Eigen::MatrixXd h(m, m);
        for (Eigen::Index j = 0; j < m; ++j) {
            const double step = 1e-5 * std::max(1.0, std::abs(theta(j)));
            Eigen::VectorXd up = theta, down = theta;
            up(j) += step;
            down(j) -= step;
            h.col(j) = (gradient(up) - gradient(down)) / (2.0 * step);
        }
        return 0.5 * (h + h.transpose());
    }
};

}  // namespace

Step3CovariateResult step3_covariate(const std::vector<int>& assignments, const Eigen::MatrixXd& d,
                                     const std::vector<CovariateBlock>& blocks, int reference) {
    const Eigen::Index k = d.rows();
    if (d.cols() != k || k < 2) throw DataError("classification error matrix must be square with K >= 2");
    if (reference < 0 || reference >= k) throw UsageError("reference profile out of range");
    const auto n = static_cast<Eigen::Index>(assignments.size());
    check_assignments(assignments, n, k);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(d);
    if (!lu.isInvertible()) throw NumericalError("classification error matrix is singular");

    Eigen::Index q = 0;
    for (const auto& b : blocks) {
        if (b.values.rows() != n) throw DataError("covariate block '" + b.name + "' has the wrong number of rows");
        if (!b.values.allFinite()) throw DataError("covariate block '" + b.name + "' has missing values");
        q += b.values.cols();
    }
    Eigen::MatrixXd x(n, 1 + q);
    x.col(0).setOnes();
    Step3CovariateResult out;
    out.reference = reference;
    out.columns.push_back("(Intercept)");
    Eigen::Index at = 1;
    for (const auto& b : blocks) {
        x.middleCols(at, b.values.cols()) = b.values;
        at += b.values.cols();
        out.columns.insert(out.columns.end(), b.columns.begin(), b.columns.end());
    }

    const LinkedLogit model{x, d, assignments, static_cast<int>(k), reference};
    const Eigen::Index width = 1 + q, dim = (k - 1) * width;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
    std::vector<double> counts(static_cast<std::size_t>(k), 0.5);
    for (int a : assignments) counts[static_cast<std::size_t>(a)] += 1.0;
    int slot = 0;
    for (int c = 0; c < k; ++c) {
        if (c == reference) continue;
        theta(slot * width) = std::log(counts[static_cast<std::size_t>(c)] / counts[static_cast<std::size_t>(reference)]);
        ++slot;
    }

    double ll = model.loglik(theta);
    bool converged = false;
    int it = 0;
    for (; it < 200 && !converged; ++it) {
        const Eigen::VectorXd g = model.gradient(theta);
        const Eigen::MatrixXd h = model.hessian(theta);
        Eigen::LDLT<Eigen::MatrixXd> neg(-h);
        Eigen::VectorXd dir = (neg.info() == Eigen::Success && neg.isPositive()) ? Eigen::VectorXd(neg.solve(g))
                                                                                 : Eigen::VectorXd(g / static_cast<double>(n));
        double step = 1.0;
        Eigen::VectorXd next;
        double next_ll = -std::numeric_limits<double>::infinity();
        for (int halve = 0; halve < 40; ++halve) {
            next = theta + step * dir;
            next_ll = model.loglik(next);
            if (std::isfinite(next_ll) && next_ll >= ll - 1e-12 * std::abs(ll)) break;
            step *= 0.5;
        }
        if (!std::isfinite(next_ll)) throw NumericalError("step-3 covariate model: likelihood became non-finite");
        const double change = std::abs(next_ll - ll);
        const double move = (next - theta).cwiseAbs().maxCoeff();
        theta = next;
        ll = next_ll;
        if (theta.cwiseAbs().maxCoeff() > 50.0) {
            throw NumericalError("step-3 covariate model diverges (separation)");
        }
        converged = move < 1e-8 || (change < 1e-12 * std::max(1.0, std::abs(ll)) &&
                                    model.gradient(theta).cwiseAbs().maxCoeff() < 1e-5);
    }
    if (!converged) throw NumericalError("step-3 covariate model did not converge");
    out.iterations = it;
    out.log_likelihood = ll;

    const Eigen::MatrixXd s = model.scores(theta);
    const Eigen::MatrixXd info = -model.hessian(theta);
    Eigen::FullPivLU<Eigen::MatrixXd> info_lu(info);
    if (!info_lu.isInvertible()) throw NumericalError("step-3 covariate information matrix is singular");
    const Eigen::MatrixXd bread = info_lu.inverse();
    out.robust_covariance = bread * (s.transpose() * s) * bread;
    out.robust_covariance = 0.5 * (out.robust_covariance + out.robust_covariance.transpose());

    out.coefficients = Eigen::MatrixXd::Zero(k, width);
    slot = 0;
    for (int c = 0; c < k; ++c) {
        if (c == reference) continue;
        out.coefficients.row(c) = theta.segment(slot * width, width).transpose();
        ++slot;
    }
    at = 1;
    for (const auto& b : blocks) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index r = 0; r < k - 1; ++r) {
            for (Eigen::Index c = 0; c < b.values.cols(); ++c) idx.push_back(r * width + at + c);
        }
        out.tests.emplace_back(b.name, block_wald(theta, out.robust_covariance, idx));
        at += b.values.cols();
    }
    return out;
}

std::vector<Step3CovariateResult> step3_covariates(const std::vector<int>& assignments, const Eigen::MatrixXd& d,
                                                   const std::vector<CovariateBlock>& blocks, bool joint,
                                                   int reference) {
    if (joint) return {step3_covariate(assignments, d, blocks, reference)};
    std::vector<Step3CovariateResult> out;
    for (const auto& b : blocks) out.push_back(step3_covariate(assignments, d, {b}, reference));
    return out;
}

}  // namespace hac24
