#include <doctest.h>

#include <cmath>
#include <random>

#include "hac24/errors.hpp"
#include "hac24/linmod.hpp"

using namespace hac24;

namespace {

DesignMatrix design(const Eigen::MatrixXd& x, bool intercept = true) {
    DesignMatrix d;
    const Eigen::Index n = x.rows();
    d.values.resize(n, x.cols() + (intercept ? 1 : 0));
    if (intercept) {
        d.values.col(0).setOnes();
        d.columns.push_back("(Intercept)");
    }
    d.values.rightCols(x.cols()) = x;
    for (Eigen::Index j = 0; j < x.cols(); ++j) d.columns.push_back("x" + std::to_string(j + 1));
    d.intercept = intercept;
    return d;
}

DesignMatrix intercept_only(Eigen::Index n) {
    DesignMatrix d;
    d.values = Eigen::MatrixXd::Ones(n, 1);
    d.columns = {"(Intercept)"};
    d.intercept = true;
    return d;
}

Eigen::MatrixXd normals(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd m(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) m(i, j) = z(rng);
    return m;
}

}  // namespace

TEST_CASE("exact linear data is fitted exactly") {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd x = normals(rng, 50, 3);
    const Eigen::VectorXd y = (1.5 + 2.0 * x.col(0).array() - 0.5 * x.col(1).array() + 0.25 * x.col(2).array()).matrix();
    const FitResult f = fit_ols(design(x), y);
    CHECK(f.coefficients(0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(f.coefficients(1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.coefficients(2) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(f.coefficients(3) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(f.residuals.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(f.coefficient("x2") == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("intercept-only fit and its sandwich by hand") {
    const Eigen::VectorXd y = (Eigen::VectorXd(5) << 1, 4, 2, 8, 5).finished();
    const FitResult f = fit_ols(intercept_only(5), y, RobustFlavor::HC0);
    CHECK(f.coefficients(0) == doctest::Approx(4.0));
    const double sum_e2 = 9 + 0 + 4 + 16 + 1;
    CHECK(f.robust_covariance(0, 0) == doctest::Approx(sum_e2 / 25.0));
    const FitResult f1 = fit_ols(intercept_only(5), y, RobustFlavor::HC1);
    CHECK(f1.robust_covariance(0, 0) == doctest::Approx(sum_e2 / 25.0 * 5.0 / 4.0));
    CHECK(f.model_covariance(0, 0) == doctest::Approx(sum_e2 / 4.0 / 5.0));
    CHECK(gcv_score(f) == doctest::Approx(5.0 * sum_e2 / 16.0));
    CHECK(f.edf == doctest::Approx(1.0));
}

TEST_CASE("rank deficiency and size preconditions") {
    std::mt19937_64 rng(2);
    Eigen::MatrixXd x = normals(rng, 30, 3);
    x.col(2) = x.col(0) + x.col(1);
    CHECK_THROWS_AS(fit_ols(design(x), Eigen::VectorXd::Ones(30)), NumericalError);
    CHECK_THROWS_AS(fit_ols(design(normals(rng, 3, 3)), Eigen::VectorXd::Ones(3)), DataError);
    CHECK_THROWS_AS(fit_ols(design(normals(rng, 10, 1)), Eigen::VectorXd::Ones(9)), DataError);
}

TEST_CASE("residuals are orthogonal to the design; slope recovery") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    const Eigen::MatrixXd x = normals(rng, 10000, 1);
    Eigen::VectorXd y(10000);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = 2.0 * x(i, 0) + z(rng);
    const DesignMatrix d = design(x);
    const FitResult f = fit_ols(d, y);
    const Eigen::VectorXd g = d.values.transpose() * f.residuals;
    CHECK(g.cwiseAbs().maxCoeff() < 1e-8 * y.norm() * d.values.norm());
    const double se = std::sqrt(f.model_covariance(1, 1));
    CHECK(std::abs(f.coefficients(1) - 2.0) < 3 * se);
    // homoskedastic: robust and model-based SEs agree within 10%
    CHECK(std::sqrt(f.robust_covariance(1, 1)) / se == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("robust SEs keep coverage under variance proportional to x^2") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    int robust_hits = 0, model_hits = 0;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
        const Eigen::MatrixXd x = normals(rng, 200, 1);
        Eigen::VectorXd y(200);
        for (Eigen::Index i = 0; i < 200; ++i) y(i) = 1.0 + 0.5 * x(i, 0) + 1.5 * std::abs(x(i, 0)) * x(i, 0) * z(rng);
        const FitResult f = fit_ols(design(x), y);
        const double b = f.coefficients(1);
        robust_hits += std::abs(b - 0.5) <= kZ975 * std::sqrt(f.robust_covariance(1, 1));
        model_hits += std::abs(b - 0.5) <= kZ975 * std::sqrt(f.model_covariance(1, 1));
    }
    const double robust_cov = robust_hits / double(reps), model_cov = model_hits / double(reps);
    CHECK(robust_cov > 0.91);
    CHECK(model_cov < 0.85);
}

TEST_CASE("Wald tests and linear combinations") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    const Eigen::MatrixXd x = normals(rng, 300, 3);
    Eigen::VectorXd y(300);
    for (Eigen::Index i = 0; i < 300; ++i) y(i) = 0.3 * x(i, 0) - 0.2 * x(i, 1) + z(rng);
    const FitResult f = fit_ols(design(x), y);

    for (bool robust : {false, true}) {
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(1, 4);
        c(0, 2) = 1.0;
        const WaldTest w = wald_test(f, c, robust);
        const double t = f.coefficients(2) / std::sqrt(f.covariance(robust)(2, 2));
        CHECK(w.statistic == doctest::Approx(t * t).epsilon(1e-10));
        CHECK(w.df == 1);
        CHECK(w.p_value == doctest::Approx(normal_two_sided_p(t)).epsilon(1e-10));

        Eigen::VectorXd u = Eigen::VectorXd::Zero(4);
        u(1) = 1.0;
        const Estimate e = linear_combination(f, u, robust);
        CHECK(e.estimate == f.coefficients(1));
        CHECK(e.se == doctest::Approx(std::sqrt(f.covariance(robust)(1, 1))));
        CHECK(e.ci_low == doctest::Approx(e.estimate - kZ975 * e.se));
        const Estimate neg = linear_combination(f, -u, robust);
        CHECK(neg.estimate == -e.estimate);
        CHECK(neg.se == doctest::Approx(e.se).epsilon(1e-15));
    }

    // worked contrast weights applied to three coefficients
    Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
    w << 0, -0.1, -0.48, 0.44;
    const Estimate e = linear_combination(f, w, false);
    CHECK(e.estimate == doctest::Approx(-0.1 * f.coefficients(1) - 0.48 * f.coefficients(2) + 0.44 * f.coefficients(3)));

    CHECK_THROWS_AS(wald_test(f, Eigen::MatrixXd::Zero(1, 4), false), DataError);
    CHECK_THROWS_AS(wald_test(f, Eigen::MatrixXd::Identity(2, 3), false), DataError);
    CHECK_THROWS_AS(linear_combination(f, Eigen::VectorXd::Ones(3), false), DataError);
}

TEST_CASE("Wald p-values are uniform under a true null") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> z;
    std::vector<int> bins(5, 0);
    const int reps = 1000;
    for (int r = 0; r < reps; ++r) {
        const Eigen::MatrixXd x = normals(rng, 200, 2);
        Eigen::VectorXd y(200);
        for (Eigen::Index i = 0; i < 200; ++i) y(i) = x(i, 0) + z(rng);
        const FitResult f = fit_ols(design(x), y);
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(1, 3);
        c(0, 2) = 1;
        ++bins[std::min(4, static_cast<int>(wald_test(f, c, true).p_value * 5))];
    }
    for (int b : bins) CHECK(std::abs(b - reps / 5) < 60);  // about 4.7 binomial SDs
}

TEST_CASE("scale_estimate") {
    const Estimate e{0.2, 0.05, 0.1, 0.3, 0.01};
    const Estimate s = scale_estimate(e, -2.0);
    CHECK(s.estimate == doctest::Approx(-0.4));
    CHECK(s.ci_low == doctest::Approx(-0.6));
    CHECK(s.ci_high == doctest::Approx(-0.2));
    CHECK(s.p_value == e.p_value);
    const Estimate zero = scale_estimate(e, 0.0);
    CHECK(zero.estimate == 0.0);
    CHECK(zero.ci_low == 0.0);
    CHECK(zero.ci_high == 0.0);
}

TEST_CASE("natural spline basis") {
    std::vector<double> x;
    for (int i = 0; i <= 200; ++i) x.push_back(10.0 + 0.35 * i);
    const NaturalSpline s(x, 5);
    CHECK(s.columns() == 4);
    CHECK(s.knots().front() == doctest::Approx(10.0));
    CHECK(s.knots().back() == doctest::Approx(80.0));
    CHECK(s.knots()[1] == doctest::Approx(27.5));

    // linear beyond the boundary knots: second differences vanish there
    const double h = 1e-3;
    for (double at : {s.knots().front() - 5.0, s.knots().front(), s.knots().back(), s.knots().back() + 7.0}) {
        const Eigen::RowVectorXd d2 = (s.evaluate(at + h) - 2.0 * s.evaluate(at) + s.evaluate(at - h)) / (h * h);
        CHECK(d2.cwiseAbs().maxCoeff() < 1e-5);
    }
    // interior knots carry curvature
    const Eigen::RowVectorXd mid = (s.evaluate(45.0 + h) - 2.0 * s.evaluate(45.0) + s.evaluate(45.0 - h)) / (h * h);
    CHECK(mid.cwiseAbs().maxCoeff() > 1e-6);

    // reproduces a linear truth exactly
    DesignMatrix d;
    d.values.resize(static_cast<Eigen::Index>(x.size()), 5);
    d.values.col(0).setOnes();
    d.values.rightCols(4) = s.evaluate(x);
    d.columns = {"(Intercept)", "s1", "s2", "s3", "s4"};
    Eigen::VectorXd y(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) y(static_cast<Eigen::Index>(i)) = 3.0 - 0.2 * x[i];
    const FitResult f = fit_ols(d, y);
    CHECK(f.residuals.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(f.coefficients(2)) + std::abs(f.coefficients(3)) + std::abs(f.coefficients(4)) < 1e-8);

    CHECK_THROWS_AS(NaturalSpline(std::vector<double>{2, 2, 2}, 4), DataError);
    CHECK_THROWS_AS(NaturalSpline(x, 1), DataError);
}

TEST_CASE("GCV prefers the smaller model under a linear truth") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z;
    // The larger model adds six irrelevant columns.
    int smaller_wins = 0;
    for (int r = 0; r < 200; ++r) {
        const Eigen::MatrixXd x = normals(rng, 100, 7);
        Eigen::VectorXd y(100);
        for (Eigen::Index i = 0; i < 100; ++i) y(i) = 1 + x(i, 0) + z(rng);
        const double small = gcv_score(fit_ols(design(x.leftCols(1)), y));
        const double big = gcv_score(fit_ols(design(x), y));
        smaller_wins += small < big;
    }
    CHECK(smaller_wins >= 180);

    // saturated fit: edf reaches N
    std::mt19937_64 rng2(8);
    const Eigen::MatrixXd x = normals(rng2, 6, 4);
    FitResult f = fit_ols(design(x), Eigen::VectorXd::LinSpaced(6, 0, 1));
    CHECK(gcv_score(f) > 0.0);
    f.edf = 6;
    CHECK_THROWS_AS(gcv_score(f), NumericalError);
}

TEST_CASE("James test") {
    std::mt19937_64 rng(9);
    const Eigen::MatrixXd a = normals(rng, 40, 3);
    const JamesTest same = james_test({a, a});
    CHECK(same.statistic == doctest::Approx(0.0).scale(1.0));
    CHECK(same.p_value == doctest::Approx(1.0));
    CHECK(same.df == 3);
    CHECK_THROWS_AS(james_test({a}), DataError);
    CHECK_THROWS_AS(james_test({a, normals(rng, 3, 3)}), DataError);

    int rejections = 0;
    const int reps = 500;
    for (int r = 0; r < reps; ++r) {
        Eigen::MatrixXd g1 = normals(rng, 60, 3);
        Eigen::MatrixXd g2 = 2.0 * normals(rng, 90, 3);  // unequal covariances
        rejections += james_test({g1, g2}).p_value < 0.05;
    }
    CHECK(std::abs(rejections / double(reps) - 0.05) <= 0.02);

    int strong = 0;
    for (int r = 0; r < 100; ++r) {
        Eigen::MatrixXd g1 = normals(rng, 200, 3);
        Eigen::MatrixXd g2 = normals(rng, 200, 3);
        g2.col(0).array() += 0.6;
        strong += james_test({g1, g2}).p_value < 0.001;
    }
    CHECK(strong >= 95);
}
