#include "doctest.h"

#include <cmath>
#include <vector>

#include "koo/selector.hpp"

using namespace koo;
using Eigen::VectorXd;

namespace {

KooProfile<double> profile_of(std::vector<double> kappa, Dimensions dims)
{
    KooProfile<double> p;
    p.kappa = Eigen::Map<VectorXd>(kappa.data(), static_cast<Index>(kappa.size()));
    p.dims = dims;
    p.spurious_limit = spurious_limit(dims);
    return p;
}

SelectionRule kbt_at(double value)
{
    ThresholdEstimate est;
    est.value = value;
    est.nu = 0.05;
    est.n_reps = 1000;
    return SelectionRule::kbt(est);
}

}  // namespace

TEST_CASE("information-criterion cutoffs")
{
    const Dimensions dims{100, 20, 20};
    const auto p = profile_of({0.9, 0.1}, dims);
    CHECK(rule_cutoff(dims, SelectionRule::kaic()) == doctest::Approx(std::exp(0.4) - 1.0));
    CHECK(rule_cutoff(dims, SelectionRule::kaic()) == doctest::Approx(0.4918).epsilon(1e-4));
    CHECK(select(p, SelectionRule::kaic()) == std::vector<Index>{0});

    CHECK(rule_cutoff(dims, SelectionRule::kbic()) == doctest::Approx(1.5119).epsilon(1e-4));
    CHECK(select(p, SelectionRule::kbic()).empty());

    CHECK(rule_cutoff(dims, SelectionRule::kcp()) == doctest::Approx(0.5));
    CHECK(select(p, SelectionRule::kcp()) == std::vector<Index>{0});

    CHECK(rule_cutoff(dims, SelectionRule::fixed_margin(0.5)) == doctest::Approx(0.2 * 1.5 / 0.6));
    CHECK_THROWS_AS(SelectionRule::fixed_margin(0.0), DomainError);
    CHECK_THROWS_AS(rule_cutoff(dims, SelectionRule{RuleKind::kbt, std::nullopt, 0.0}), DomainError);
}

TEST_CASE("cutoffs agree with the log and linear scale inequalities")
{
    const Dimensions dims{150, 30, 45};
    const double c = dims.c_n();
    const double a = dims.alpha_n();
    std::vector<double> kappa;
    for (int i = 0; i < 200; ++i) kappa.push_back(0.01 * i * i / 20.0);
    const auto p = profile_of(kappa, dims);
    const auto aic = select(p, SelectionRule::kaic());
    const auto bic = select(p, SelectionRule::kbic());
    const auto cp = select(p, SelectionRule::kcp());
    std::vector<Index> aic_ref, bic_ref, cp_ref;
    for (Index j = 0; j < p.kappa.size(); ++j) {
        if (std::log(1.0 + p.kappa(j)) > 2.0 * c) aic_ref.push_back(j);
        if (std::log(1.0 + p.kappa(j)) > std::log(150.0) * c) bic_ref.push_back(j);
        if ((1.0 - a) * p.kappa(j) > 2.0 * c) cp_ref.push_back(j);
    }
    CHECK(aic == aic_ref);
    CHECK(bic == bic_ref);
    CHECK(cp == cp_ref);
    for (Index j : bic) CHECK(std::find(aic.begin(), aic.end(), j) != aic.end());
}

TEST_CASE("boundary equality is not selected")
{
    const Dimensions dims{100, 20, 20};
    const auto p = profile_of({0.5, 0.5000001}, dims);
    CHECK(select(p, SelectionRule::kcp()) == std::vector<Index>{1});
    CHECK(select(profile_of({2.0}, dims), kbt_at(2.0)).empty());
}

TEST_CASE("report ranking and rank-ordered selection")
{
    const Dimensions dims{100, 20, 3};
    const auto report = build_report(profile_of({3, 1, 5}, dims), {kbt_at(2.0)});
    REQUIRE(report.ranked.size() == 3);
    CHECK(report.ranked[0].id == 2);
    CHECK(report.ranked[1].id == 0);
    CHECK(report.ranked[2].id == 1);
    CHECK(report.outcomes[0].selected == std::vector<Index>{2, 0});
    CHECK(report.outcomes[0].cutoff == 2.0);
    CHECK(report.outcomes[0].label == "KBT(nu=0.05)");
}

TEST_CASE("ties rank by index and empty selections keep the ranking")
{
    const Dimensions dims{100, 20, 2};
    const auto report = build_report(profile_of({2, 2}, dims), {SelectionRule::kbic(), kbt_at(10.0)});
    CHECK(report.ranked[0].id == 0);
    CHECK(report.ranked[1].id == 1);
    CHECK(report.outcomes[1].selected.empty());
    CHECK(report.ranked.size() == 2);
}

TEST_CASE("always-keep columns bypass selection")
{
    const Dimensions dims{100, 20, 4};
    const std::vector<Index> keep = {3};
    const auto report = build_report(profile_of({0.1, 4.0, 0.2, 9.0}, dims), {SelectionRule::kaic()}, keep);
    CHECK(report.ranked.size() == 3);
    CHECK(report.outcomes[0].selected == std::vector<Index>{1});
    CHECK(report.always_keep == keep);
    CHECK(candidate_indices(4, keep) == std::vector<Index>{0, 1, 2});
}

TEST_CASE("raising a statistic never drops it")
{
    const Dimensions dims{100, 20, 5};
    std::vector<double> kappa = {0.3, 0.6, 0.2, 0.9, 0.45};
    const auto before = select(profile_of(kappa, dims), SelectionRule::kcp());
    kappa[1] += 1.0;
    kappa[4] += 0.1;
    const auto after = select(profile_of(kappa, dims), SelectionRule::kcp());
    for (Index j : before) CHECK(std::find(after.begin(), after.end(), j) != after.end());
}
