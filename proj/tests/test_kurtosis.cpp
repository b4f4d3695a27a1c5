#include "doctest.h"

#include <cmath>
#include <string>

#include "koo/distributions.hpp"
#include "koo/kurtosis.hpp"
#include "koo/simlab.hpp"
#include "oracles.hpp"

using namespace koo;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("kurtosis estimate by hand")
{
    MatrixXd W(1, 1);
    W << 2.0;
    const auto est = excess_kurtosis_from_gram(W, VectorXd::Ones(2), 2.0);
    CHECK(est.raw_value == doctest::Approx(-2.0));
    CHECK(est.tau_hat == doctest::Approx(kTauClampLow));
    CHECK(est.clamped);
}

TEST_CASE("kurtosis estimate matches the dense formula")
{
    Rng rng(41);
    const MatrixXd X = make_design(DesignKind::random_uniform, 60, 8, rng);
    const MatrixXd Y = sample_errors(ErrorDistSpec::exponential(), rng, 60, 10);
    const auto data = build_dataset(Y, X);
    const auto est = excess_kurtosis_estimate(data, residual_gram(Y, X));
    CHECK(est.raw_value == doctest::Approx(oracle::kurtosis_estimate(Y, X)).epsilon(1e-10));
}

TEST_CASE("kurtosis estimate clamps")
{
    MatrixXd W = MatrixXd::Identity(2, 2) * 100.0;
    const auto est = excess_kurtosis_from_gram(W, VectorXd::Constant(10, 0.5), 10.0);
    CHECK(est.raw_value > kTauClampHigh);
    CHECK(est.tau_hat == kTauClampHigh);
    CHECK_THROWS_AS(excess_kurtosis_from_gram(W, VectorXd::Zero(3), 1.0), DomainError);
}

TEST_CASE("matched sampler branches")
{
    const auto chi = matched_sampler(1.0);
    CHECK(chi.law == ErrorLaw::standardized_chi_squared);
    CHECK(chi.param == doctest::Approx(12.0));

    const auto bern = matched_sampler(-1.2);
    CHECK(bern.law == ErrorLaw::standardized_bernoulli);
    CHECK(bern.param == doctest::Approx((6.0 - std::sqrt(6.0)) / 12.0).epsilon(1e-12));
    CHECK(bern.param == doctest::Approx(0.29588).epsilon(1e-4));
    CHECK(bern.excess_kurtosis() == doctest::Approx(-1.2).epsilon(1e-12));

    CHECK(matched_sampler(0.01).law == ErrorLaw::standard_normal);
    CHECK(matched_sampler(-0.049).law == ErrorLaw::standard_normal);

    const auto printed = matched_sampler(-1.2, BernoulliConvention::printed);
    CHECK(printed.param * (1.0 - printed.param) == doctest::Approx(1.0 / 7.2));
    CHECK(printed.param <= 0.5);

    CHECK_THROWS_AS(matched_sampler(std::nan("")), DomainError);
    CHECK_THROWS_AS(matched_sampler(-2.5), DomainError);
}

TEST_CASE("matched sampler reproduces the requested kurtosis")
{
    for (double tau : {-1.9, -1.2, -0.5, 0.3, 1.0, 4.0, 6.0}) {
        CAPTURE(tau);
        CHECK(matched_sampler(tau).excess_kurtosis() == doctest::Approx(tau).epsilon(1e-10));
    }
}

TEST_CASE("sampler moments over a million draws")
{
    const std::vector<ErrorDistSpec> laws = {
        ErrorDistSpec::normal(),       ErrorDistSpec::uniform(),         ErrorDistSpec::exponential(),
        ErrorDistSpec::chi_squared(12), ErrorDistSpec::chi_squared(3),   ErrorDistSpec::bernoulli(0.3),
        ErrorDistSpec::poisson(1.0),    ErrorDistSpec::student_t(10.0)};
    for (std::size_t l = 0; l < laws.size(); ++l) {
        const auto& law = laws[l];
        CAPTURE(law.to_string());
        Rng rng = substream(7, 0x77, l);
        const MatrixXd draws = sample_errors(law, rng, 1000, 1000);
        const Eigen::ArrayXXd v = draws.array();
        const double mean = v.mean();
        const Eigen::ArrayXXd c = v - mean;
        const double var = c.square().mean();
        const double kurt = c.square().square().mean() / (var * var) - 3.0;
        CHECK(std::abs(mean) < 0.01);
        CHECK(std::abs(var - 1.0) < 0.01);
        CHECK(std::abs(kurt - law.excess_kurtosis()) < 0.15);
    }
}

TEST_CASE("error law text form round-trips")
{
    for (const auto& law : {ErrorDistSpec::normal(), ErrorDistSpec::chi_squared(12), ErrorDistSpec::bernoulli(0.25),
                            ErrorDistSpec::student_t(3), ErrorDistSpec::uniform(), ErrorDistSpec::poisson(1),
                            ErrorDistSpec::exponential()})
        CHECK(ErrorDistSpec::parse(law.to_string()) == law);
    CHECK_THROWS(ErrorDistSpec::parse("cauchy"));
    CHECK_THROWS(ErrorDistSpec::parse("t:2"));
}

TEST_CASE("substreams are reproducible and distinct")
{
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
}
