#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "koo/distributions.hpp"
#include "koo/errors.hpp"
#include "koo/linmodel.hpp"

namespace koo {

inline constexpr double kTauClampLow = -1.999;
inline constexpr double kTauClampHigh = 6.0;
inline constexpr double kTauDeadZone = 0.05;

struct KurtosisEstimate {
    double tau_hat = 0.0;    // clamped into [kTauClampLow, kTauClampHigh]
    bool clamped = false;    // true when tau_hat != raw_value
    double raw_value = 0.0;
};

/// Moment estimator of the error excess kurtosis:
///   { p^{-1} sum_i (W_ii - (n-k))^2 - 2(n-k) } / sum_i Q_ii^2
/// with W = Y'QY and Q_ii the diagonal of the residual projector.
template <typename DerivedW, typename DerivedQ>
KurtosisEstimate excess_kurtosis_from_gram(const Eigen::MatrixBase<DerivedW>& W,
                                           const Eigen::MatrixBase<DerivedQ>& q_diag,
                                           double n_minus_k)
{
    const double trace_qq = static_cast<double>(q_diag.squaredNorm());
    if (!(trace_qq > 0.0)) throw DomainError("tr(Q o Q) must be positive");
    const auto p = static_cast<double>(W.rows());
    const double dev =
        static_cast<double>((W.diagonal().array() - n_minus_k).square().sum()) / p;
    KurtosisEstimate est;
    est.raw_value = (dev - 2.0 * n_minus_k) / trace_qq;
    est.tau_hat = std::clamp(est.raw_value, kTauClampLow, kTauClampHigh);
    est.clamped = est.tau_hat != est.raw_value;
    return est;
}

template <typename Scalar, typename DerivedW>
KurtosisEstimate excess_kurtosis_estimate(const RegressionDataset<Scalar>& data,
                                          const Eigen::MatrixBase<DerivedW>& W,
                                          const Matrix<Scalar>& gram_inv)
{
    const auto& d = data.dims();
    return excess_kurtosis_from_gram(W, residual_projector_diagonal(data.x(), gram_inv),
                                     static_cast<double>(d.n - d.k));
}

template <typename Scalar, typename DerivedW>
KurtosisEstimate excess_kurtosis_estimate(const RegressionDataset<Scalar>& data,
                                          const Eigen::MatrixBase<DerivedW>& W)
{
    return excess_kurtosis_estimate(data, W, gram_inverse(data.x()));
}

/// Which root equation picks the Bernoulli multiplier for negative tau.
enum class BernoulliConvention {
    /// rho(1 - rho) = 1/(6 + tau); a standardized B(1, rho) then has excess
    /// kurtosis exactly tau.
    kurtosis_matched,
    /// rho(1 - rho) = 1/(6 - tau), kept for comparison runs.
    printed,
};

/// Multiplier law whose excess kurtosis matches tau_hat: standard normal
/// inside the dead zone |tau| < 0.05, standardized chi2(12/tau) above it and
/// a standardized Bernoulli (root rho <= 1/2) below it.
ErrorDistSpec matched_sampler(double tau_hat,
                              BernoulliConvention convention = BernoulliConvention::kurtosis_matched);

}  // namespace koo
