#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "koo/errors.hpp"
#include "koo/linmodel.hpp"

namespace koo {

/// Knock-one-out statistics K_j for every predictor of a dataset.
template <typename Scalar>
struct KooProfile {
    Vector<Scalar> kappa;
    Dimensions dims;
    double spurious_limit = 0.0;
};

inline void check_ratios(double c_n, double alpha_n)
{
    if (!(c_n > 0.0) || !(alpha_n >= 0.0) || !(c_n + alpha_n < 1.0))
        throw DomainError("ratios must satisfy c > 0, alpha >= 0, c + alpha < 1");
}

/// Almost-sure limit c/(1 - c - alpha) of a spurious K_j.
inline double spurious_limit(double c_n, double alpha_n)
{
    check_ratios(c_n, alpha_n);
    return c_n / (1.0 - c_n - alpha_n);
}

inline double spurious_limit(const Dimensions& dims)
{
    return spurious_limit(dims.c_n(), dims.alpha_n());
}

/// Limit (1 + delta) c/(1 - c - alpha) of a true K_j with signal strength delta.
inline double true_limit(double c_n, double alpha_n, double delta)
{
    return (1.0 + delta) * spurious_limit(c_n, alpha_n);
}

inline double true_limit(const Dimensions& dims, double delta)
{
    return true_limit(dims.c_n(), dims.alpha_n(), delta);
}

/// K_j = b_j' W^{-1} b_j with B = Y'A and W = Y'QY.
///
/// W is factorized once; each K_j is the squared norm of a column of
/// L^{-1} B. Raises SingularError when W is not numerically positive definite.
template <typename Scalar>
KooProfile<Scalar> koo_statistics(const RegressionDataset<Scalar>& data,
                                  const ProjectionCache<Scalar>& cache)
{
    const Eigen::LLT<Matrix<Scalar>> llt(cache.residual_gram);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 0))
        throw SingularError("residual Gram matrix Y'QY is not positive definite");
    Matrix<Scalar> z = data.y().transpose() * cache.knockout_dirs;
    llt.matrixL().solveInPlace(z);

    KooProfile<Scalar> profile;
    profile.kappa = z.colwise().squaredNorm().transpose();
    profile.dims = data.dims();
    profile.spurious_limit = spurious_limit(data.dims());
    return profile;
}

template <typename Scalar>
KooProfile<Scalar> koo_statistics(const RegressionDataset<Scalar>& data)
{
    return koo_statistics(data, make_projection_cache(data));
}

/// Log-likelihood-ratio form A_j = log(1 + K_j).
template <typename Scalar>
Vector<Scalar> log_lr_statistics(const KooProfile<Scalar>& profile)
{
    return profile.kappa.unaryExpr([](Scalar v) { return std::log1p(v); });
}

/// Lawley-Hotelling form C_j = p + K_j.
template <typename Scalar>
Vector<Scalar> lawley_hotelling_statistics(const KooProfile<Scalar>& profile)
{
    return profile.kappa.array() + static_cast<Scalar>(profile.dims.p);
}

/// Signal strength p^{-1} (x_j'Q_j x_j)(theta_j' Sigma^{-1} theta_j), using
/// x_j'Q_j x_j = 1 / g_jj from the Gram inverse G.
template <typename DerivedG, typename DerivedT, typename DerivedS>
double delta_j_with_gram(const Eigen::MatrixBase<DerivedG>& G,
                         const Eigen::MatrixBase<DerivedT>& theta_j,
                         const Eigen::MatrixBase<DerivedS>& sigma, Index j)
{
    using Scalar = typename DerivedT::Scalar;
    const Eigen::LLT<Matrix<Scalar>> llt(sigma);
    if (llt.info() != Eigen::Success) throw SingularError("Sigma is not positive definite");
    const Vector<Scalar> w = llt.matrixL().solve(Vector<Scalar>(theta_j));
    const double xqx = 1.0 / static_cast<double>(G(j, j));
    return xqx * static_cast<double>(w.squaredNorm()) / static_cast<double>(theta_j.size());
}

template <typename DerivedX, typename DerivedT, typename DerivedS>
double delta_j(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedT>& theta_j,
               const Eigen::MatrixBase<DerivedS>& sigma, Index j)
{
    return delta_j_with_gram(gram_inverse(X), theta_j, sigma, j);
}

/// Asymptotic covariance of sqrt(p)(K_{j_1..j_q} - limit) for spurious
/// predictors with directions A_q (n x q, unit columns) and error excess
/// kurtosis tau.
template <typename Derived>
Matrix<typename Derived::Scalar> clt_covariance_gq(const Eigen::MatrixBase<Derived>& A_q,
                                                   double c_n, double alpha_n, double tau)
{
    using Scalar = typename Derived::Scalar;
    check_ratios(c_n, alpha_n);
    const double rest = 1.0 - alpha_n - c_n;
    const Matrix<Scalar> cross = A_q.transpose() * A_q;
    const Matrix<Scalar> sq = A_q.cwiseProduct(A_q);
    const Matrix<Scalar> fourth = sq.transpose() * sq;
    const Scalar lead = static_cast<Scalar>(c_n * c_n / (rest * rest));
    const Scalar gauss = static_cast<Scalar>(2.0 * (1.0 - alpha_n) / rest);
    Matrix<Scalar> g = lead * (gauss * cross.cwiseProduct(cross) + static_cast<Scalar>(tau) * fourth);
    return (g + g.transpose()) / Scalar(2);
}

template <typename Derived>
Matrix<typename Derived::Scalar> clt_covariance_gq(const Eigen::MatrixBase<Derived>& A_q,
                                                   const Dimensions& dims, double tau)
{
    return clt_covariance_gq(A_q, dims.c_n(), dims.alpha_n(), tau);
}

/// Asymptotic variance of sqrt(p)(K_j - (1 + delta) limit) for a true predictor.
inline double clt_sigma_true_sq(double c_n, double alpha_n, double delta)
{
    check_ratios(c_n, alpha_n);
    if (!(delta >= 0.0)) throw DomainError("delta must be non-negative");
    const double rest = 1.0 - alpha_n - c_n;
    return 2.0 * c_n * c_n * ((1.0 - alpha_n) * (1.0 + 2.0 * delta) + c_n * delta * delta) /
           (rest * rest * rest);
}

inline double clt_sigma_true_sq(const Dimensions& dims, double delta)
{
    return clt_sigma_true_sq(dims.c_n(), dims.alpha_n(), delta);
}

/// One draw of chi2(p; noncentrality) / chi2(n - k - p + 1), the exact law of
/// K_j under normal errors. The noncentral numerator is built as
/// chi2(p - 1) + (Z + sqrt(noncentrality))^2.
template <typename Urbg>
double chisq_ratio_sample(const Dimensions& dims, double noncentrality, Urbg& rng)
{
    if (dims.m_tilde() < 1) throw DomainError("n - k - p + 1 must be at least 1");
    if (!(noncentrality >= 0.0)) throw DomainError("noncentrality must be non-negative");
    std::normal_distribution<double> normal;
    double numerator = 0.0;
    if (dims.p > 1) {
        std::chi_squared_distribution<double> rest(static_cast<double>(dims.p - 1));
        numerator = rest(rng);
    }
    const double shifted = normal(rng) + std::sqrt(noncentrality);
    numerator += shifted * shifted;
    std::chi_squared_distribution<double> denom(static_cast<double>(dims.m_tilde()));
    return numerator / denom(rng);
}

}  // namespace koo
