#pragma once

// Direct, slow reference computations used to check the fast kernels.

#include <cmath>

#include <Eigen/Dense>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd hat_matrix(const MatrixXd& X)
{
    if (X.cols() == 0) return MatrixXd::Zero(X.rows(), X.rows());
    const MatrixXd pinv = X.completeOrthogonalDecomposition().pseudoInverse();
    return X * pinv;
}

inline MatrixXd residual_maker(const MatrixXd& X)
{
    return MatrixXd::Identity(X.rows(), X.rows()) - hat_matrix(X);
}

inline MatrixXd drop_column(const MatrixXd& X, Eigen::Index j)
{
    MatrixXd out(X.rows(), X.cols() - 1);
    for (Eigen::Index c = 0, d = 0; c < X.cols(); ++c)
        if (c != j) out.col(d++) = X.col(c);
    return out;
}

inline double log_det(const MatrixXd& m)
{
    const Eigen::PartialPivLU<MatrixXd> lu(m);
    return lu.matrixLU().diagonal().array().abs().log().sum();
}

/// a_j = Q_j x_j / |Q_j x_j| built from the design without column j.
inline VectorXd direction(const MatrixXd& X, Eigen::Index j)
{
    const VectorXd v = residual_maker(drop_column(X, j)) * X.col(j);
    return v / v.norm();
}

/// K_j = a_j' Y (Y'QY)^{-1} Y' a_j with every matrix formed explicitly.
inline double koo_by_direction(const MatrixXd& Y, const MatrixXd& X, Eigen::Index j)
{
    const MatrixXd W = Y.transpose() * residual_maker(X) * Y;
    const VectorXd b = Y.transpose() * direction(X, j);
    return b.dot(W.fullPivLu().solve(b));
}

/// log|Sigma_j| - log|Sigma| with Sigma = Y'QY/n and Sigma_j = Y'Q_jY/n.
inline double log_likelihood_ratio(const MatrixXd& Y, const MatrixXd& X, Eigen::Index j)
{
    const double n = static_cast<double>(Y.rows());
    const MatrixXd full = Y.transpose() * residual_maker(X) * Y / n;
    const MatrixXd reduced = Y.transpose() * residual_maker(drop_column(X, j)) * Y / n;
    return log_det(reduced) - log_det(full);
}

/// Excess kurtosis moment estimator from the explicit projector.
inline double kurtosis_estimate(const MatrixXd& Y, const MatrixXd& X)
{
    const MatrixXd Q = residual_maker(X);
    const MatrixXd W = Y.transpose() * Q * Y;
    const double nk = static_cast<double>(X.rows() - X.cols());
    double dev = 0.0;
    for (Eigen::Index i = 0; i < W.rows(); ++i) dev += (W(i, i) - nk) * (W(i, i) - nk);
    dev /= static_cast<double>(W.rows());
    return (dev - 2.0 * nk) / Q.diagonal().squaredNorm();
}

}  // namespace oracle
