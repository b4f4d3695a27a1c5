#include "doctest.h"

#include <cmath>
#include <numeric>

#include "koo/distributions.hpp"
#include "koo/simlab.hpp"
#include "koo/statistics.hpp"
#include "oracles.hpp"

using namespace koo;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd uniform_design(Index n, Index k, std::uint64_t seed)
{
    Rng rng(seed);
    return make_design(DesignKind::random_uniform, n, k, rng);
}

MatrixXd normal_matrix(Index n, Index p, std::uint64_t seed)
{
    Rng rng(seed);
    return sample_errors(ErrorDistSpec::normal(), rng, n, p);
}

}  // namespace

TEST_CASE("K matches the brute-force quadratic form")
{
    const MatrixXd X = uniform_design(30, 3, 21);
    MatrixXd Y = normal_matrix(30, 5, 22);
    Y.col(0) += 0.7 * X.col(1);
    const auto profile = koo_statistics(build_dataset(Y, X));
    for (Index j = 0; j < 3; ++j)
        CHECK(std::abs(profile.kappa(j) - oracle::koo_by_direction(Y, X, j)) < 1e-8);
}

TEST_CASE("K is zero when Y is orthogonal to the direction")
{
    MatrixXd X = MatrixXd::Zero(12, 2);
    X(0, 0) = 1;
    X(1, 1) = 1;
    MatrixXd Y = normal_matrix(12, 3, 23);
    Y.row(0).setZero();
    const auto profile = koo_statistics(build_dataset(Y, X));
    CHECK(profile.kappa(0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(profile.kappa(1) > 0.0);
}

TEST_CASE("log-likelihood-ratio and trace forms")
{
    const MatrixXd X = uniform_design(25, 4, 24);
    MatrixXd Y = normal_matrix(25, 6, 25);
    Y.col(2) += X.col(0);
    const auto profile = koo_statistics(build_dataset(Y, X));
    const VectorXd A = log_lr_statistics(profile);
    const VectorXd C = lawley_hotelling_statistics(profile);
    for (Index j = 0; j < 4; ++j) {
        CHECK(A(j) == std::log1p(profile.kappa(j)));
        CHECK(std::abs(A(j) - oracle::log_likelihood_ratio(Y, X, j)) < 1e-8);
        CHECK(C(j) - 6.0 == doctest::Approx(profile.kappa(j)).epsilon(1e-15));
    }
}

TEST_CASE("derived statistics on fixed values")
{
    KooProfile<double> profile;
    profile.dims = Dimensions{100, 6, 10};
    profile.kappa = VectorXd(3);
    profile.kappa << 0.0, std::exp(1.0) - 1.0, 0.5;
    const VectorXd A = log_lr_statistics(profile);
    CHECK(A(0) == 0.0);
    CHECK(A(1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(lawley_hotelling_statistics(profile)(0) == 6.0);
    profile.dims.p = 18;
    CHECK(lawley_hotelling_statistics(profile)(2) == 18.5);
}

TEST_CASE("K is invariant to response transforms and predictor scaling")
{
    const MatrixXd X = uniform_design(40, 5, 26);
    MatrixXd Y = normal_matrix(40, 4, 27);
    Y.col(1) += 0.5 * X.col(3);
    const VectorXd base = koo_statistics(build_dataset(Y, X)).kappa;

    MatrixXd T(4, 4);
    T << 1, 2, 0, 0, 0, 1, 0, -1, 3, 0, 1, 0, 0, 0, 0.5, 2;
    CHECK((koo_statistics(build_dataset(MatrixXd(Y * T), X)).kappa - base).norm() < 1e-8);

    MatrixXd Xs = X;
    Xs.col(0) *= 100.0;
    Xs.col(3) *= -0.01;
    CHECK((koo_statistics(build_dataset(Y, Xs)).kappa - base).norm() < 1e-8);
    CHECK((base.array() >= 0.0).all());
}

TEST_CASE("limits")
{
    CHECK(spurious_limit(0.4, 0.2) == doctest::Approx(1.0));
    CHECK(spurious_limit(0.2, 0.4) == doctest::Approx(0.5));
    CHECK(true_limit(0.2, 0.2, 0.0) == spurious_limit(0.2, 0.2));
    CHECK(true_limit(0.2, 0.2, 1.0) == doctest::Approx(2.0 / 3.0));
    CHECK(true_limit(0.2, 0.2, 2.0) > true_limit(0.2, 0.2, 1.0));
    CHECK_THROWS_AS(spurious_limit(0.6, 0.4), DomainError);
}

TEST_CASE("delta_j")
{
    const Index p = 30;
    const MatrixXd X = uniform_design(80, 4, 28);
    const MatrixXd I = MatrixXd::Identity(p, p);
    CHECK(delta_j(X, VectorXd::Zero(p), I, 1) == 0.0);

    const VectorXd theta = setting_theta(p);
    CHECK(theta.squaredNorm() == doctest::Approx((1.0 - std::pow(0.25, p)) / 0.75));

    MatrixXd orth = MatrixXd::Zero(80, 2);
    orth.col(0).setOnes();
    orth(0, 1) = 1;
    orth(1, 1) = -1;
    const VectorXd t = VectorXd::Constant(p, 0.5);
    CHECK(delta_j(orth, t, I, 0) == doctest::Approx(80.0 * t.squaredNorm() / p));

    const double d1 = delta_j(X, theta, I, 2);
    CHECK(delta_j(X, VectorXd(2.0 * theta), I, 2) == doctest::Approx(4.0 * d1));
}

TEST_CASE("G_q arithmetic")
{
    VectorXd a = VectorXd::Zero(10);
    a(0) = 0.6;
    a(3) = 0.8;
    const MatrixXd g1 = clt_covariance_gq(MatrixXd(a), 0.2, 0.2, 0.0);
    CHECK(g1(0, 0) == doctest::Approx(0.296296296).epsilon(1e-8));
    CHECK(g1(0, 0) == doctest::Approx(2 * 0.04 * 0.8 / 0.216));

    MatrixXd A2 = MatrixXd::Zero(10, 2);
    A2(0, 0) = 1;
    A2(5, 1) = std::sqrt(0.5);
    A2(6, 1) = std::sqrt(0.5);
    const MatrixXd g2 = clt_covariance_gq(A2, 0.3, 0.1, 2.5);
    CHECK(g2(0, 1) == 0.0);
    const double lead = 0.09 / 0.36;
    CHECK(g2(0, 0) == doctest::Approx(lead * (2 * 0.9 / 0.6 + 2.5)));
    CHECK(g2(1, 1) == doctest::Approx(lead * (2 * 0.9 / 0.6 + 2.5 * 0.5)));
}

TEST_CASE("G_q uses the elementwise square of the direction cross products")
{
    MatrixXd A(4, 2);
    A << 1, 0.6, 0, 0.8, 0, 0, 0, 0;
    const MatrixXd g = clt_covariance_gq(A, 0.2, 0.2, 0.0);
    const double lead = 0.04 / 0.36;
    CHECK(g(0, 1) == doctest::Approx(lead * (2 * 0.8 / 0.6) * 0.36));
}

TEST_CASE("sigma_true^2")
{
    CHECK(clt_sigma_true_sq(0.2, 0.2, 0.0) ==
          doctest::Approx(clt_covariance_gq(MatrixXd(VectorXd::Unit(5, 0)), 0.2, 0.2, 0.0)(0, 0)));
    CHECK(clt_sigma_true_sq(0.2, 0.2, 1.0) == doctest::Approx(0.08 * 2.6 / 0.216));
    CHECK(clt_sigma_true_sq(0.2, 0.2, 1.0) == doctest::Approx(0.962963).epsilon(1e-6));
    const double big = 1e7;
    CHECK(clt_sigma_true_sq(0.2, 0.2, big) / (big * big) ==
          doctest::Approx(2 * 0.008 / 0.216).epsilon(1e-5));
}

TEST_CASE("chi-square ratio sampler moments")
{
    Rng rng(29);
    const Dimensions dims{2000, 200, 400};
    const double m = static_cast<double>(dims.m_tilde());
    double sum = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) sum += chisq_ratio_sample(dims, 0.0, rng);
    CHECK(sum / draws == doctest::Approx(200.0 / (m - 2.0)).epsilon(0.005));

    const Dimensions one{2000, 1, 10};
    double small = 0.0;
    for (int i = 0; i < 1000; ++i) small = std::max(small, chisq_ratio_sample(one, 0.0, rng));
    CHECK(small < 30.0 / static_cast<double>(one.m_tilde()));
}

TEST_CASE("spurious K concentrate at the limit")
{
    Rng rng(30);
    const MatrixXd X = make_design(DesignKind::random_uniform, 2000, 400, rng);
    const MatrixXd Y = sample_errors(ErrorDistSpec::normal(), rng, 2000, 400);
    const auto profile = koo_statistics(build_dataset(Y, X));
    CHECK(std::abs(profile.kappa.mean() - 1.0 / 3.0) < 0.01);
    CHECK(profile.spurious_limit == doctest::Approx(1.0 / 3.0));
}
