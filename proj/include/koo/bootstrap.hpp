#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "koo/distributions.hpp"
#include "koo/kurtosis.hpp"
#include "koo/linmodel.hpp"

namespace koo {

/// Threshold families for K_j.
enum class RuleKind { kbt, kaic, kbic, kcp, fixed_margin };

std::string to_string(RuleKind kind);

struct BootstrapConfig {
    double nu = 0.05;           // significance level in [0, 1)
    int n_reps = 1000;          // N
    std::uint64_t seed = 0;
    ErrorDistSpec sampler = ErrorDistSpec::normal();
    int workers = 1;

    void validate() const;
};

/// A critical value in K units with the configuration that produced it.
struct ThresholdEstimate {
    double value = 0.0;
    RuleKind rule = RuleKind::kbt;
    double nu = 0.0;
    int n_reps = 0;
    std::uint64_t seed = 0;
    ErrorDistSpec sampler;
    /// Sorted ascending; empty unless retained.
    std::vector<double> bootstrap_maxima;
};

/// The ceil((1 - nu) N)-th smallest of the maxima (1-based); nu = 0 gives
/// the largest value. `sorted_maxima` must be ascending.
double quantile_order_statistic(std::span<const double> sorted_maxima, double nu);

/// Multiplier bootstrap of max_j K~_j under the null.
///
/// Replicate r draws an n x p matrix E~ from the configured sampler on its
/// own substream of `seed`, forms E~'QE~ = E~'E~ - (X'E~)' G (X'E~) and
/// records the largest K~_j over `candidates` (all predictors when empty).
/// Returns the N maxima sorted ascending; identical for any worker count.
std::vector<double> bootstrap_maxima(const Eigen::MatrixXd& X, const Eigen::MatrixXd& gram_inv,
                                     Index p, const BootstrapConfig& config,
                                     std::span<const Index> candidates = {});

ThresholdEstimate threshold_from_maxima(std::vector<double> sorted_maxima,
                                        const BootstrapConfig& config, bool retain_maxima);

/// Estimate of the (1 - nu) critical value of the largest spurious K_j.
ThresholdEstimate bootstrap_threshold(const RegressionDataset<double>& data,
                                      const ProjectionCache<double>& cache,
                                      const BootstrapConfig& config,
                                      std::span<const Index> candidates = {},
                                      bool retain_maxima = false);

}  // namespace koo
