#include "doctest.h"

#include <cmath>

#include "koo/distributions.hpp"
#include "koo/linmodel.hpp"
#include "koo/simlab.hpp"
#include "oracles.hpp"

using namespace koo;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd uniform_design(Index n, Index k, std::uint64_t seed)
{
    Rng rng(seed);
    return make_design(DesignKind::random_uniform, n, k, rng);
}

MatrixXd normal_matrix(Index n, Index p, std::uint64_t seed)
{
    Rng rng(seed);
    return sample_errors(ErrorDistSpec::normal(), rng, n, p);
}

}  // namespace

TEST_CASE("build_dataset derives ratios")
{
    const auto data = build_dataset(normal_matrix(100, 20, 1), uniform_design(100, 20, 2));
    CHECK(data.dims().n == 100);
    CHECK(data.dims().c_n() == doctest::Approx(0.2));
    CHECK(data.dims().alpha_n() == doctest::Approx(0.2));
}

TEST_CASE("build_dataset rejects bad inputs")
{
    CHECK_THROWS_AS(build_dataset(normal_matrix(100, 60, 1), uniform_design(100, 50, 2)), DimensionError);
    CHECK_THROWS_AS(build_dataset(normal_matrix(99, 5, 1), uniform_design(100, 5, 2)), DimensionError);

    MatrixXd X = uniform_design(50, 4, 3);
    X.col(3) = X.col(1);
    CHECK_THROWS_AS(build_dataset(normal_matrix(50, 3, 1), X), RankError);

    MatrixXd Y = normal_matrix(50, 3, 1);
    Y(4, 2) = std::nan("");
    CHECK_THROWS_AS(build_dataset(Y, uniform_design(50, 4, 3)), DataError);
}

TEST_CASE("gram_inverse matches a direct inverse")
{
    const MatrixXd X = uniform_design(60, 8, 4);
    const MatrixXd G = gram_inverse(X);
    CHECK((G * (X.transpose() * X) - MatrixXd::Identity(8, 8)).norm() < 1e-8);
}

TEST_CASE("gram_inverse falls back to QR on an ill-conditioned full-rank design")
{
    MatrixXd X = uniform_design(40, 3, 5);
    X.col(2) = X.col(0) + 1e-7 * X.col(1) + 1e-7 * uniform_design(40, 1, 6).col(0);
    const MatrixXd G = gram_inverse(X);
    const Eigen::JacobiSVD<MatrixXd> svd(X, Eigen::ComputeThinV);
    const MatrixXd reference = svd.matrixV() *
                               svd.singularValues().array().inverse().square().matrix().asDiagonal() *
                               svd.matrixV().transpose();
    CHECK((G - reference).norm() / reference.norm() < 1e-6);
    CHECK((G - G.transpose()).norm() <= 1e-8 * G.norm());
}

TEST_CASE("knockout directions on orthonormal columns are the unit vectors")
{
    MatrixXd X = MatrixXd::Zero(4, 2);
    X(0, 0) = 1;
    X(1, 1) = 1;
    const MatrixXd A = knockout_directions(X);
    CHECK((A - X).norm() < 1e-12);
}

TEST_CASE("knockout direction of a three-row example")
{
    MatrixXd X(3, 2);
    X << 1, 1, 1, 0, 1, 0;
    const MatrixXd A = knockout_directions(X);
    VectorXd expected(3);
    expected << 0, 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
    CHECK((A.col(0) - expected).norm() < 1e-12);
}

TEST_CASE("fast directions agree with the per-column projector")
{
    const MatrixXd X = uniform_design(50, 10, 7);
    const MatrixXd A = knockout_directions(X);
    for (Index j = 0; j < X.cols(); ++j) {
        CHECK((A.col(j) - oracle::direction(X, j)).norm() < 1e-8);
        CHECK(std::abs(A.col(j).norm() - 1.0) < 1e-10);
        for (Index i = 0; i < X.cols(); ++i)
            if (i != j) CHECK(std::abs(A.col(j).dot(X.col(i))) < 1e-8);
    }
}

TEST_CASE("direction scaling and permutation")
{
    const MatrixXd X = uniform_design(40, 5, 8);
    const MatrixXd A = knockout_directions(X);

    MatrixXd scaled = X;
    scaled.col(2) *= 3.5;
    scaled.col(4) *= -0.25;
    const MatrixXd As = knockout_directions(scaled);
    CHECK((As.col(2) - A.col(2)).norm() < 1e-10);
    CHECK((As.col(4) + A.col(4)).norm() < 1e-10);
    CHECK((As.col(0) - A.col(0)).norm() < 1e-10);

    Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
    perm.indices() << 3, 0, 4, 1, 2;
    const MatrixXd Ap = knockout_directions(MatrixXd(X * perm));
    CHECK((Ap - A * perm).norm() < 1e-10);
}

TEST_CASE("residual gram by hand")
{
    MatrixXd X(2, 1);
    X << 1, 1;
    MatrixXd Y(2, 1);
    Y << 1, 3;
    CHECK(residual_gram(Y, X)(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("residual gram vanishes on the column span")
{
    const MatrixXd X = uniform_design(30, 4, 9);
    MatrixXd coef(4, 3);
    coef << 1, 2, 0, -1, 0.5, 3, 0, 0, 1, 2, 2, 2;
    CHECK(residual_gram(MatrixXd(X * coef), X).norm() < 1e-8);
}

TEST_CASE("residual gram matches the dense projector")
{
    const MatrixXd X = uniform_design(45, 6, 10);
    const MatrixXd Y = normal_matrix(45, 5, 11);
    const MatrixXd W = residual_gram(Y, X);
    const MatrixXd dense = Y.transpose() * oracle::residual_maker(X) * Y;
    CHECK((W - dense).norm() < 1e-8);
    CHECK((W - W.transpose()).norm() < 1e-10);
    CHECK(Eigen::LLT<MatrixXd>(W).info() == Eigen::Success);

    const VectorXd q = residual_projector_diagonal(X, gram_inverse(X));
    CHECK((q - oracle::residual_maker(X).diagonal()).norm() < 1e-10);
}

TEST_CASE("residual gram depends only on the span of X")
{
    const MatrixXd X = uniform_design(35, 4, 12);
    const MatrixXd Y = normal_matrix(35, 3, 13);
    MatrixXd T(4, 4);
    T << 2, 1, 0, 0, 0, 1, 3, 0, 1, 0, 1, 1, 0, 0, 0, -2;
    CHECK((residual_gram(Y, X) - residual_gram(Y, MatrixXd(X * T))).norm() < 1e-8);
}

TEST_CASE("empty design leaves Y untouched")
{
    const MatrixXd Y = normal_matrix(10, 2, 14);
    const MatrixXd X(10, 0);
    CHECK((residual_gram(Y, X) - Y.transpose() * Y).norm() < 1e-10);
    CHECK(residual_projector_diagonal(X, gram_inverse(X)).isOnes());
}
