#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/QR>

#include "koo/errors.hpp"

namespace koo {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Sizes of a regression problem: n observations, p responses, k predictors.
struct Dimensions {
    Index n = 0;
    Index p = 0;
    Index k = 0;

    double c_n() const { return static_cast<double>(p) / static_cast<double>(n); }
    double alpha_n() const { return static_cast<double>(k) / static_cast<double>(n); }
    /// Degrees of freedom of the chi-square denominator under normal errors.
    Index m_tilde() const { return n - k - p + 1; }

    /// Validated construction; requires n > p + k and p >= 1.
    static Dimensions checked(Index n, Index p, Index k)
    {
        if (n <= 0 || p <= 0 || k < 0)
            throw DimensionError("dimensions must satisfy n > 0, p > 0, k >= 0");
        if (n <= p + k)
            throw DimensionError("need n > p + k (n=" + std::to_string(n) + ", p=" +
                                 std::to_string(p) + ", k=" + std::to_string(k) + ")");
        return Dimensions{n, p, k};
    }

    friend bool operator==(const Dimensions&, const Dimensions&) = default;
};

namespace detail {

inline constexpr double kGramRcondFloor = 1e-12;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m)
{
    return m.allFinite();
}

}  // namespace detail

/// (X'X)^{-1} for a full column rank design.
///
/// A Cholesky factorization of X'X is tried first. When it fails or its
/// reciprocal condition estimate drops below 1e-12, the inverse is rebuilt
/// from a column-pivoted QR of X; a rank-deficient X raises RankError.
template <typename Derived>
Matrix<typename Derived::Scalar> gram_inverse(const Eigen::MatrixBase<Derived>& X)
{
    using Scalar = typename Derived::Scalar;
    const Index k = X.cols();
    if (k == 0) return Matrix<Scalar>(0, 0);

    const Matrix<Scalar> gram = X.transpose() * X;
    Eigen::LLT<Matrix<Scalar>> llt(gram);
    if (llt.info() == Eigen::Success && llt.rcond() >= detail::kGramRcondFloor)
        return llt.solve(Matrix<Scalar>::Identity(k, k));

    Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(X);
    if (qr.rank() < k)
        throw RankError("predictor matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                        " < k=" + std::to_string(k) + ")");
    const Matrix<Scalar> r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
    const Matrix<Scalar> r_inv =
        r.template triangularView<Eigen::Upper>().solve(Matrix<Scalar>::Identity(k, k));
    const auto& perm = qr.colsPermutation();
    return perm * (r_inv * r_inv.transpose()) * perm.transpose();
}

/// Unit knock-one-out directions a_j = Q_j x_j / |Q_j x_j| for every column.
///
/// Uses X G u_j = g_jj Q_j x_j, so column j is X G u_j / sqrt(g_jj); all k
/// directions come out of one n x k by k x k product.
template <typename DerivedX, typename DerivedG>
Matrix<typename DerivedX::Scalar> knockout_directions(const Eigen::MatrixBase<DerivedX>& X,
                                                      const Eigen::MatrixBase<DerivedG>& G)
{
    using Scalar = typename DerivedX::Scalar;
    const Vector<Scalar> scale = G.diagonal().cwiseSqrt().cwiseInverse();
    return (X * G) * scale.asDiagonal();
}

template <typename Derived>
Matrix<typename Derived::Scalar> knockout_directions(const Eigen::MatrixBase<Derived>& X)
{
    return knockout_directions(X, gram_inverse(X));
}

/// W = Y'QY evaluated as R'R with residuals R = Y - X G X'Y.
template <typename DerivedY, typename DerivedX, typename DerivedG>
Matrix<typename DerivedY::Scalar> residual_gram(const Eigen::MatrixBase<DerivedY>& Y,
                                                const Eigen::MatrixBase<DerivedX>& X,
                                                const Eigen::MatrixBase<DerivedG>& G)
{
    using Scalar = typename DerivedY::Scalar;
    Matrix<Scalar> resid = Y;
    if (X.cols() > 0) resid.noalias() -= X * (G * (X.transpose() * Y));
    Matrix<Scalar> W = Matrix<Scalar>::Zero(Y.cols(), Y.cols());
    W.template selfadjointView<Eigen::Lower>().rankUpdate(resid.transpose());
    W.template triangularView<Eigen::StrictlyUpper>() = W.transpose();
    return W;
}

template <typename DerivedY, typename DerivedX>
Matrix<typename DerivedY::Scalar> residual_gram(const Eigen::MatrixBase<DerivedY>& Y,
                                                const Eigen::MatrixBase<DerivedX>& X)
{
    return residual_gram(Y, X, gram_inverse(X));
}

/// Diagonal of the residual projector, Q_ii = 1 - x_i' G x_i (Q is not formed).
template <typename DerivedX, typename DerivedG>
Vector<typename DerivedX::Scalar> residual_projector_diagonal(const Eigen::MatrixBase<DerivedX>& X,
                                                              const Eigen::MatrixBase<DerivedG>& G)
{
    using Scalar = typename DerivedX::Scalar;
    if (X.cols() == 0) return Vector<Scalar>::Ones(X.rows());
    const Matrix<Scalar> xg = X * G;
    return Vector<Scalar>::Ones(X.rows()) - xg.cwiseProduct(X).rowwise().sum();
}

/// Observed responses Y (n x p) and predictors X (n x k), validated on construction.
template <typename Scalar>
class RegressionDataset {
public:
    const Matrix<Scalar>& y() const { return y_; }
    const Matrix<Scalar>& x() const { return x_; }
    const Dimensions& dims() const { return dims_; }

    template <typename DY, typename DX>
    friend RegressionDataset<typename DY::Scalar> build_dataset(const Eigen::MatrixBase<DY>&,
                                                                const Eigen::MatrixBase<DX>&);

private:
    RegressionDataset(Matrix<Scalar> y, Matrix<Scalar> x, Dimensions dims)
        : y_(std::move(y)), x_(std::move(x)), dims_(dims)
    {
    }

    Matrix<Scalar> y_;
    Matrix<Scalar> x_;
    Dimensions dims_;
};

/// Validates (Y, X): equal row counts, n > p + k, finite entries and a
/// positive definite X'X.
template <typename DY, typename DX>
RegressionDataset<typename DY::Scalar> build_dataset(const Eigen::MatrixBase<DY>& Y,
                                                     const Eigen::MatrixBase<DX>& X)
{
    using Scalar = typename DY::Scalar;
    if (Y.rows() != X.rows())
        throw DimensionError("Y and X must have the same number of rows");
    const Dimensions dims = Dimensions::checked(Y.rows(), Y.cols(), X.cols());
    if (!detail::all_finite(Y) || !detail::all_finite(X))
        throw DataError("non-finite entry in Y or X");
    // Surfaces RankError before any statistic is computed.
    (void)gram_inverse(X);
    return RegressionDataset<Scalar>(Y, X, dims);
}

/// The projection quantities shared by the statistics and the bootstrap.
template <typename Scalar>
struct ProjectionCache {
    Matrix<Scalar> gram_inverse;    // (X'X)^{-1}, k x k
    Matrix<Scalar> knockout_dirs;   // columns a_j, n x k
    Matrix<Scalar> residual_gram;   // Y'QY, p x p
};

template <typename Scalar>
ProjectionCache<Scalar> make_projection_cache(const RegressionDataset<Scalar>& data)
{
    ProjectionCache<Scalar> cache;
    cache.gram_inverse = gram_inverse(data.x());
    cache.knockout_dirs = knockout_directions(data.x(), cache.gram_inverse);
    cache.residual_gram = residual_gram(data.y(), data.x(), cache.gram_inverse);
    return cache;
}

}  // namespace koo
