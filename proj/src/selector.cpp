#include "koo/selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "koo/errors.hpp"

namespace koo {

SelectionRule SelectionRule::kbt(ThresholdEstimate estimate)
{
    SelectionRule rule{RuleKind::kbt, std::move(estimate), 0.0};
    return rule;
}

SelectionRule SelectionRule::fixed_margin(double vartheta)
{
    if (!(vartheta > 0.0)) throw DomainError("fixed margin vartheta must be positive");
    return {RuleKind::fixed_margin, std::nullopt, vartheta};
}

std::string SelectionRule::label() const
{
    std::ostringstream os;
    os << to_string(kind);
    if (kind == RuleKind::kbt && threshold) os << "(nu=" << threshold->nu << ")";
    if (kind == RuleKind::fixed_margin) os << "(vartheta=" << vartheta << ")";
    return os.str();
}

double rule_cutoff(const Dimensions& dims, const SelectionRule& rule)
{
    const double c = dims.c_n();
    const double alpha = dims.alpha_n();
    double cutoff = 0.0;
    switch (rule.kind) {
    case RuleKind::kaic: cutoff = std::expm1(2.0 * c); break;
    case RuleKind::kbic: cutoff = std::expm1(c * std::log(static_cast<double>(dims.n))); break;
    case RuleKind::kcp: cutoff = 2.0 * c / (1.0 - alpha); break;
    case RuleKind::kbt:
        if (!rule.threshold) throw DomainError("KBT rule without a bootstrap threshold");
        cutoff = rule.threshold->value;
        break;
    case RuleKind::fixed_margin:
        cutoff = c * (1.0 + rule.vartheta) / (1.0 - alpha - c);
        break;
    }
    if (!std::isfinite(cutoff)) throw DomainError(rule.label() + " cutoff is not finite");
    return cutoff;
}

std::vector<Index> candidate_indices(Index k, std::span<const Index> always_keep)
{
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(k));
    for (Index j = 0; j < k; ++j)
        if (std::find(always_keep.begin(), always_keep.end(), j) == always_keep.end())
            out.push_back(j);
    return out;
}

std::vector<Index> select(const KooProfile<double>& profile, const SelectionRule& rule,
                          std::span<const Index> candidates)
{
    const double cutoff = rule_cutoff(profile.dims, rule);
    std::vector<Index> all;
    if (candidates.empty()) {
        all = candidate_indices(profile.kappa.size(), {});
        candidates = all;
    }
    std::vector<Index> out;
    for (Index j : candidates)
        if (profile.kappa(j) > cutoff) out.push_back(j);
    std::sort(out.begin(), out.end());
    return out;
}

SelectionReport build_report(const KooProfile<double>& profile,
                             const std::vector<SelectionRule>& rules,
                             std::span<const Index> always_keep)
{
    SelectionReport report;
    report.dims = profile.dims;
    report.always_keep.assign(always_keep.begin(), always_keep.end());
    std::sort(report.always_keep.begin(), report.always_keep.end());

    const auto cand = candidate_indices(profile.kappa.size(), always_keep);
    for (Index j : cand) report.ranked.push_back({j, profile.kappa(j)});
    std::stable_sort(report.ranked.begin(), report.ranked.end(),
                     [](const RankedEntry& a, const RankedEntry& b) { return a.kappa > b.kappa; });

    for (const auto& rule : rules) {
        RuleOutcome outcome;
        outcome.rule = rule;
        outcome.label = rule.label();
        outcome.cutoff = rule_cutoff(profile.dims, rule);
        for (const auto& entry : report.ranked)
            if (entry.kappa > outcome.cutoff) outcome.selected.push_back(entry.id);
        report.outcomes.push_back(std::move(outcome));
    }
    return report;
}

}  // namespace koo
