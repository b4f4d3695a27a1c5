#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "koo/bootstrap.hpp"
#include "koo/statistics.hpp"

namespace koo {

/// One thresholding rule. Every rule reduces to "select j when K_j > cutoff".
struct SelectionRule {
    RuleKind kind = RuleKind::kaic;
    std::optional<ThresholdEstimate> threshold;  // KBT only
    double vartheta = 0.0;                       // FixedMargin only

    static SelectionRule kaic() { return {RuleKind::kaic, std::nullopt, 0.0}; }
    static SelectionRule kbic() { return {RuleKind::kbic, std::nullopt, 0.0}; }
    static SelectionRule kcp() { return {RuleKind::kcp, std::nullopt, 0.0}; }
    static SelectionRule kbt(ThresholdEstimate estimate);
    /// Oracle-only rule K_j > c(1 + vartheta)/(1 - alpha - c); a valid margin
    /// needs vartheta below the smallest true delta, which data cannot reveal.
    static SelectionRule fixed_margin(double vartheta);

    /// Display name, e.g. "KAIC" or "KBT(nu=0.05)".
    std::string label() const;
};

/// The rule's threshold expressed on the K scale:
///   KAIC  e^{2c} - 1        KBIC  n^{c} - 1        KCp  2c/(1 - alpha)
///   KBT   bootstrap value   FixedMargin  c(1 + vartheta)/(1 - alpha - c)
double rule_cutoff(const Dimensions& dims, const SelectionRule& rule);

/// Indices j (ascending) among `candidates` with K_j strictly above the
/// rule's cutoff. An empty candidate list means all predictors.
std::vector<Index> select(const KooProfile<double>& profile, const SelectionRule& rule,
                          std::span<const Index> candidates = {});

struct RankedEntry {
    Index id = 0;       // 0-based predictor column
    double kappa = 0.0;
};

struct RuleOutcome {
    SelectionRule rule;
    std::string label;
    double cutoff = 0.0;
    std::vector<Index> selected;  // in rank order (descending K_j)
};

struct SelectionReport {
    Dimensions dims;
    std::vector<RankedEntry> ranked;   // candidates, descending K_j, ties by index
    std::vector<RuleOutcome> outcomes;
    std::vector<Index> always_keep;    // bypass selection, never ranked
};

/// Ranks all candidates and applies every rule. Predictors listed in
/// `always_keep` are excluded from ranking and from every selected set.
SelectionReport build_report(const KooProfile<double>& profile,
                             const std::vector<SelectionRule>& rules,
                             std::span<const Index> always_keep = {});

/// All predictor indices not in `always_keep`, ascending.
std::vector<Index> candidate_indices(Index k, std::span<const Index> always_keep);

}  // namespace koo
