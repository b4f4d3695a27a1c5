#include "doctest.h"

#include <algorithm>
#include <vector>

#include "koo/bootstrap.hpp"
#include "koo/simlab.hpp"
#include "koo/statistics.hpp"
#include "oracles.hpp"

using namespace koo;
using Eigen::MatrixXd;

TEST_CASE("order statistic quantile")
{
    std::vector<double> m = {1, 4, 2, 5, 3};
    std::sort(m.begin(), m.end());
    CHECK(quantile_order_statistic(m, 0.0) == 5.0);
    CHECK(quantile_order_statistic(m, 0.2) == 4.0);
    CHECK(quantile_order_statistic(m, 0.5) == 3.0);

    std::vector<double> thousand(1000);
    for (int i = 0; i < 1000; ++i) thousand[static_cast<std::size_t>(i)] = i + 1;
    CHECK(quantile_order_statistic(thousand, 0.05) == 950.0);
    CHECK(quantile_order_statistic(thousand, 0.1) == 900.0);
    CHECK_THROWS_AS(quantile_order_statistic(thousand, 1.0), DomainError);
    CHECK_THROWS_AS(quantile_order_statistic({}, 0.05), DomainError);
}

TEST_CASE("quantile is monotone in nu")
{
    Rng rng(51);
    const MatrixXd X = make_design(DesignKind::random_uniform, 80, 10, rng);
    BootstrapConfig cfg;
    cfg.n_reps = 300;
    cfg.seed = 9;
    const auto maxima = bootstrap_maxima(X, gram_inverse(X), 15, cfg);
    CHECK(std::is_sorted(maxima.begin(), maxima.end()));
    double previous = quantile_order_statistic(maxima, 0.0);
    for (double nu = 0.01; nu < 0.99; nu += 0.01) {
        const double q = quantile_order_statistic(maxima, nu);
        CHECK(q <= previous);
        previous = q;
    }
}

TEST_CASE("bootstrap replicate matches the dense null statistic")
{
    Rng rng(52);
    const MatrixXd X = make_design(DesignKind::random_uniform, 40, 5, rng);
    BootstrapConfig cfg;
    cfg.n_reps = 1;
    cfg.seed = 17;
    const auto maxima = bootstrap_maxima(X, gram_inverse(X), 6, cfg);

    // Regenerate the single replicate's error matrix from its substream.
    Rng replay = substream(17, 0xb0070001, 0);
    const MatrixXd E = sample_errors(ErrorDistSpec::normal(), replay, 40, 6);
    double best = 0.0;
    for (Index j = 0; j < 5; ++j) best = std::max(best, oracle::koo_by_direction(E, X, j));
    CHECK(maxima[0] == doctest::Approx(best).epsilon(1e-10));
}

TEST_CASE("bootstrap restricted to candidates")
{
    Rng rng(53);
    const MatrixXd X = make_design(DesignKind::random_uniform, 60, 6, rng);
    const MatrixXd G = gram_inverse(X);
    BootstrapConfig cfg;
    cfg.n_reps = 50;
    const std::vector<Index> some = {1, 4};
    const auto all = bootstrap_maxima(X, G, 8, cfg);
    const auto sub = bootstrap_maxima(X, G, 8, cfg, some);
    CHECK(sub.back() <= all.back());
    const std::vector<Index> bad = {6};
    CHECK_THROWS_AS(bootstrap_maxima(X, G, 8, cfg, bad), DomainError);
}

TEST_CASE("bootstrap threshold is identical for any worker count")
{
    Rng rng(54);
    const MatrixXd X = make_design(DesignKind::random_uniform, 100, 20, rng);
    const MatrixXd Y = sample_errors(ErrorDistSpec::normal(), rng, 100, 20);
    const auto data = build_dataset(Y, X);
    const auto cache = make_projection_cache(data);
    BootstrapConfig cfg;
    cfg.n_reps = 400;
    cfg.seed = 77;
    cfg.sampler = ErrorDistSpec::chi_squared(12);
    cfg.workers = 1;
    const auto one = bootstrap_threshold(data, cache, cfg, {}, true);
    cfg.workers = 8;
    const auto eight = bootstrap_threshold(data, cache, cfg, {}, true);
    CHECK(one.value == eight.value);
    CHECK(one.bootstrap_maxima == eight.bootstrap_maxima);
    CHECK(one.n_reps == 400);
    CHECK(one.sampler == ErrorDistSpec::chi_squared(12));
}

TEST_CASE("bootstrap config validation")
{
    BootstrapConfig cfg;
    cfg.nu = 1.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg.nu = 0.05;
    cfg.n_reps = 0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
}
