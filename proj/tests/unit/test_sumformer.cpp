#include <gtest/gtest.h>

#include <random>

#include "sumformer/sumformer.hpp"

using namespace sumformer;

namespace {

TargetFunction first_token_target() {
  TargetFunction t;
  t.name = "first_token";
  t.formula = "g = x";
  t.g = [](const RowVector& x, const Matrix&) { return x; };
  return t;
}

LatentPolynomial constant_poly(double c, std::size_t arity) {
  return {{LatentMonomial{c, std::vector<int>(arity, 0)}}};
}

}  // namespace

TEST(MlpSumformer, ZeroPsiGivesZero) {
  SumformerModel m = make_mlp_sumformer(2, 4, 2, 8, 1);
  auto& psi = std::get<MlpMap>(m.psi);
  psi.params = zero_mlp(psi.spec);
  EXPECT_EQ(sumformer_forward(m, Matrix::Random(5, 2)), Matrix::Zero(5, 2));
}

TEST(MlpSumformer, ProjectionPsiIsIdentity) {
  SumformerModel m = make_mlp_sumformer(2, 4, 1, 8, 1);
  MlpMap psi{MlpSpec{{6, 2}}, {}};
  psi.params = zero_mlp(psi.spec);
  psi.params.weights[0].topRows(2) = Matrix::Identity(2, 2);
  m.psi = psi;
  const Matrix x = Matrix::Random(4, 2);
  EXPECT_EQ(sumformer_forward(m, x), x);
}

TEST(MlpSumformer, Equivariant) {
  const SumformerModel m = make_mlp_sumformer(3, 8, 2, 16, 2);
  const CheckReport r =
      check_equivariance([&](const Matrix& x) { return sumformer_forward(m, x); }, 5, 3);
  EXPECT_LE(r.max_violation, 1e-10);
}

TEST(PolynomialSumformer, Equivariant) {
  const SumformerModel m = make_polynomial_sumformer(4, 2, 2, 16, 3);
  EXPECT_EQ(m.d_latent, 14);
  EXPECT_FALSE(m.phi_trainable());
  EXPECT_TRUE(m.psi_trainable());
  const CheckReport r =
      check_equivariance([&](const Matrix& x) { return sumformer_forward(m, x); }, 4, 2);
  EXPECT_LE(r.max_violation, 1e-10);
}

TEST(Sumformer, ShapeErrors) {
  const SumformerModel m = make_mlp_sumformer(2, 4, 1, 8, 1);
  EXPECT_THROW(sumformer_forward(m, Matrix::Zero(3, 3)), ShapeError);
  SumformerModel bad = m;
  bad.d_latent = 5;
  EXPECT_THROW(bad.validate(), ShapeError);
}

TEST(ContinuousSumformer, HandSetPsi) {
  // q(x1, {x2, x3}) = x1 + x2 x3 with x2 x3 = (s1^2 - s2) / 2 over the rest.
  std::vector<PsiTerm> terms;
  terms.push_back({{{1}}, constant_poly(1.0, 3)});
  terms.push_back({{{0}}, {{LatentMonomial{0.5, {2, 0, 0}}, LatentMonomial{-0.5, {0, 1, 0}}}}});
  const SumformerModel m = build_continuous_sumformer(3, 1, {terms});
  const Matrix out = sumformer_forward(m, (Matrix(3, 1) << 1, 2, 3).finished());
  EXPECT_LE((out - (Matrix(3, 1) << 7, 5, 5).finished()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ContinuousSumformer, PowerSumMinusToken) {
  const std::vector<PsiTerm> terms{{{{0}}, {{LatentMonomial{1.0, {1, 0}}}}}};
  const SumformerModel m = build_continuous_sumformer(2, 1, {terms});
  EXPECT_EQ(sumformer_forward(m, (Matrix(2, 1) << 1, 4).finished()),
            (Matrix(2, 1) << 4, 1).finished());
}

TEST(ContinuousSumformer, EmptyTermsGiveZero) {
  const SumformerModel m = build_continuous_sumformer(2, 2, {{}, {}});
  EXPECT_EQ(sumformer_forward(m, Matrix::Random(2, 2)), Matrix::Zero(2, 2));
}

TEST(ContinuousSumformer, GenerationFitOfRestSum) {
  // g(x, rest) = sum over pairs in rest (n = 3, so rest has two tokens):
  // fit it as a function of the rest with the generation oracle, then
  // transcribe the fit into psi terms.
  GenerationOptions o;
  o.d = 1;
  o.n = 2;
  const GenerationFit fit = generation_oracle([](const Matrix& r) { return r(0, 0) * r(1, 0); }, o);
  // psi sees Sigma - phi(x) over a degree-3 basis; the fit uses the degree-2
  // basis, whose entries are its first two coordinates.
  LatentPolynomial poly;
  for (std::size_t j = 0; j < fit.products.size(); ++j) {
    std::vector<int> e(3, 0);
    for (std::size_t idx : fit.products[j]) ++e[idx];
    poly.terms.push_back({fit.coefficients[j], e});
  }
  const SumformerModel m = build_continuous_sumformer(3, 1, {{PsiTerm{{{0}}, poly}}});
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const Matrix x = random_sequence(3, 1, rng);
    const Matrix out = sumformer_forward(m, x);
    EXPECT_NEAR(out(0, 0), x(1, 0) * x(2, 0), 1e-9);
    EXPECT_NEAR(out(1, 0), x(0, 0) * x(2, 0), 1e-9);
    EXPECT_NEAR(out(2, 0), x(0, 0) * x(1, 0), 1e-9);
  }
}

TEST(ContinuousSumformer, ArityMismatch) {
  const std::vector<PsiTerm> terms{{{{0}}, {{LatentMonomial{1.0, {1}}}}}};
  EXPECT_THROW(build_continuous_sumformer(2, 1, {terms}), ShapeError);
}

TEST(Discrete, AnchorLookup) {
  const DiscreteSumformer s = build_discrete_sumformer(first_token_target(), 2, 2, 1);
  EXPECT_EQ(s.forward((Matrix(2, 1) << 0.6, 0.1).finished()), (Matrix(2, 1) << 0.5, 0.0).finished());
}

TEST(Discrete, ConstantTarget) {
  for (int delta : {1, 3, 5}) {
    const DiscreteSumformer s = build_discrete_sumformer(constant_target(1.5), delta, 3, 1);
    std::mt19937_64 rng(delta);
    EXPECT_EQ(s.forward(random_sequence(3, 1, rng)), Matrix::Constant(3, 1, 1.5));
  }
}

TEST(Discrete, LipschitzBound) {
  const TargetFunction t = square_rest_target();
  const DiscreteSumformer s = build_discrete_sumformer(t, 4, 2, 1);
  const double err =
      sup_error([&](const Matrix& x) { return s.forward(x); }, t, 2, 1, 1000, 0);
  EXPECT_LE(err, std::sqrt(5.0) * 0.25 * std::sqrt(2.0));
  EXPECT_GT(err, 0.0);
}

TEST(Discrete, PiecewiseConstantWithinCell) {
  const DiscreteSumformer s = build_discrete_sumformer(square_rest_target(), 4, 3, 1);
  const Matrix a = (Matrix(3, 1) << 0.26, 0.51, 0.99).finished();
  const Matrix b = (Matrix(3, 1) << 0.49, 0.74, 0.76).finished();
  EXPECT_EQ(s.forward(a), s.forward(b));
}

TEST(Discrete, ExactlyEquivariant) {
  const DiscreteSumformer s = build_discrete_sumformer(square_rest_target(), 4, 4, 1);
  CheckOptions o;
  o.tol = 0.0;
  const CheckReport r = check_equivariance([&](const Matrix& x) { return s.forward(x); }, 4, 1, o);
  EXPECT_EQ(r.max_violation, 0.0);
}

TEST(Discrete, ExactAtAnchors) {
  const TargetFunction t = cubic_interaction_target();
  const DiscreteSumformer s = build_discrete_sumformer(t, 3, 3, 1);
  const Matrix x = (Matrix(3, 1) << s.anchor(2)(0), s.anchor(0)(0), s.anchor(2)(0)).finished();
  EXPECT_EQ(s.forward(x), t(x));
}

TEST(Discrete, QuantizerAndEncoder) {
  const DiscreteSumformer s(4, 2, 2, 2);
  const RowVector x = (RowVector(2) << 0.3, 0.8).finished();
  EXPECT_EQ(s.quantize(x), (std::vector<int>{1, 3}));
  EXPECT_EQ(s.cell_count(), 16);
  const auto h = s.encode(x);
  EXPECT_EQ(std::count(h.begin(), h.end(), 1), 1);
  EXPECT_EQ(h[std::size_t(s.cell_index(x))], 1);
  EXPECT_EQ(s.quantize(s.anchor(s.cell_index(x))), s.quantize(x));
}

TEST(Discrete, Errors) {
  const DiscreteSumformer s = build_discrete_sumformer(square_rest_target(), 2, 2, 1);
  EXPECT_THROW(s.forward((Matrix(2, 1) << 1.0, 0.5).finished()), DomainError);
  EXPECT_THROW(s.forward((Matrix(2, 1) << -0.1, 0.5).finished()), DomainError);
  EXPECT_THROW(s.forward(Matrix::Zero(3, 1)), ShapeError);
  EXPECT_THROW(build_discrete_sumformer(square_rest_target(), 100, 4, 1), BudgetError);
}

TEST(SupError, Basics) {
  const TargetFunction t = square_sum_target();
  const SequenceMap f = t.lifted();
  EXPECT_EQ(sup_error(f, t, 3, 2, 100, 1), 0.0);
  EXPECT_NEAR(sup_error([&](const Matrix& x) { return Matrix(f(x).array() + 0.25); }, t, 3, 2, 100, 1),
              0.25, 1e-12);
}

TEST(SupError, RefinementRoughlyHalves) {
  const TargetFunction t = square_rest_target();
  const DiscreteSumformer coarse = build_discrete_sumformer(t, 4, 2, 1);
  const DiscreteSumformer fine = build_discrete_sumformer(t, 8, 2, 1);
  const double e4 = sup_error([&](const Matrix& x) { return coarse.forward(x); }, t, 2, 1, 1000, 3);
  const double e8 = sup_error([&](const Matrix& x) { return fine.forward(x); }, t, 2, 1, 1000, 3);
  EXPECT_GE(e8 / e4, 0.3);
  EXPECT_LE(e8 / e4, 0.8);
}
