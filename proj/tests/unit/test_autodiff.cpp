#include <gtest/gtest.h>

#include <random>

#include "sumformer/autodiff.hpp"
#include "sumformer/gradcheck.hpp"

using namespace sumformer;

TEST(Tape, SquareGradient) {
  Tape t;
  Var p = t.parameter(Matrix::Constant(1, 1, 3.0));
  const auto g = t.gradient(sum_all(square(p)));
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g[0](0, 0), 6.0);
}

TEST(Tape, ConstantLossHasZeroGradient) {
  Tape t;
  Var p = t.parameter(Matrix::Constant(2, 2, 1.0));
  Var c = t.constant(Matrix::Constant(1, 1, 4.0));
  const auto g = t.gradient(c);
  EXPECT_EQ(g[0], Matrix::Zero(2, 2));
  (void)p;
}

TEST(Tape, NonScalarLossThrows) {
  Tape t;
  Var p = t.parameter(Matrix::Ones(2, 1));
  EXPECT_THROW(t.gradient(p), ContractError);
}

TEST(Tape, ForeignLossThrows) {
  Tape a, b;
  a.parameter(Matrix::Ones(1, 1));
  Var lb = b.constant(Matrix::Ones(1, 1));
  EXPECT_THROW(a.gradient(lb), ContractError);
}

TEST(Tape, ReluSubgradientAtZeroIsZero) {
  Tape t;
  Var p = t.parameter((Matrix(1, 3) << -1.0, 0.0, 2.0).finished());
  const auto g = t.gradient(sum_all(relu(p)));
  EXPECT_EQ(g[0], (Matrix(1, 3) << 0.0, 0.0, 1.0).finished());
}

TEST(Tape, MatmulGradients) {
  Tape t;
  const Matrix av = (Matrix(2, 2) << 1, 2, 3, 4).finished();
  const Matrix bv = (Matrix(2, 1) << 5, 6).finished();
  Var a = t.parameter(av);
  Var b = t.parameter(bv);
  const auto g = t.gradient(sum_all(matmul(a, b)));
  // d/dA sum(AB) = 1 B^T, d/dB = A^T 1.
  EXPECT_EQ(g[0], (Matrix(2, 2) << 5, 6, 5, 6).finished());
  EXPECT_EQ(g[1], (Matrix(2, 1) << 4, 6).finished());
}

TEST(Tape, GroupOpsAreAdjoint) {
  Tape t;
  Var a = t.parameter(Matrix::Ones(6, 2));
  Var s = group_sum(a, 3);
  EXPECT_EQ(s.value(), Matrix::Constant(2, 2, 3.0));
  Var r = group_repeat(s, 3);
  EXPECT_EQ(r.rows(), 6);
  const auto g = t.gradient(sum_all(r));
  EXPECT_EQ(g[0], Matrix::Constant(6, 2, 3.0));
}

TEST(Tape, MixedExpressionMatchesHandDerivative) {
  // L = mean((2 * (x o w) + b broadcast - y)^2) with scalar-ish shapes.
  Tape t;
  Var w = t.parameter((Matrix(1, 2) << 0.5, -1.0).finished());
  Var b = t.parameter((Matrix(1, 2) << 0.1, 0.2).finished());
  Var x = t.constant((Matrix(1, 2) << 2.0, 3.0).finished());
  Var y = t.constant((Matrix(1, 2) << 1.0, 1.0).finished());
  Var out = add_row(2.0 * hadamard(x, w), b) - y;
  const auto g = t.gradient(mean_all(square(out)));
  // r = [2*1+0.1-1, 2*(-3)+0.2-1] = [1.1, -6.8]
  EXPECT_NEAR(g[0](0, 0), 2.0 * 2.0 * 1.1 * 2.0 / 2.0, 1e-12);
  EXPECT_NEAR(g[0](0, 1), 2.0 * 3.0 * -6.8 * 2.0 / 2.0, 1e-12);
  EXPECT_NEAR(g[1](0, 0), 1.1, 1e-12);
  EXPECT_NEAR(g[1](0, 1), -6.8, 1e-12);
}

TEST(Tape, HconcatSplitsGradient) {
  Tape t;
  Var a = t.parameter(Matrix::Ones(2, 1));
  Var b = t.parameter(Matrix::Ones(2, 2));
  Var c = hconcat(a, b);
  EXPECT_EQ(c.cols(), 3);
  const auto g = t.gradient(sum_all(scale(c, 2.0)));
  EXPECT_EQ(g[0], Matrix::Constant(2, 1, 2.0));
  EXPECT_EQ(g[1], Matrix::Constant(2, 2, 2.0));
}

TEST(Tape, ShapeErrors) {
  Tape t;
  Var a = t.parameter(Matrix::Ones(2, 3));
  EXPECT_THROW(matmul(a, a), ShapeError);
  EXPECT_THROW(add(a, t.constant(Matrix::Ones(3, 2))), ShapeError);
  EXPECT_THROW(group_sum(a, 4), ShapeError);
}

TEST(GradientCheck, RandomNetworksAgreeWithFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GradientCheckResult r = check_mlp_gradient(seed);
    EXPECT_LE(r.relative_error, 1e-5) << "seed " << seed;
    EXPECT_GE(r.spec.layer_count(), 2u);
  }
}

TEST(GradientCheck, IsDeterministic) {
  const GradientCheckResult a = check_mlp_gradient(42);
  const GradientCheckResult b = check_mlp_gradient(42);
  EXPECT_EQ(a.relative_error, b.relative_error);
  EXPECT_EQ(a.input, b.input);
}
