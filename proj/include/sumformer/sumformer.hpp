#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sumformer/equivariance.hpp"
#include "sumformer/mlp.hpp"
#include "sumformer/multisym.hpp"
#include "sumformer/targets.hpp"
#include "sumformer/tensor.hpp"

namespace sumformer {

// phi as the fixed monomial map over a degree basis.
struct PolynomialPhi {
  DegreeBasis basis;
};

// A trainable token-wise network.
struct MlpMap {
  MlpSpec spec;
  MlpParams params;
};

// c * prod_j s_j^{e_j} over the d' latent coordinates.
struct LatentMonomial {
  double coefficient = 0.0;
  std::vector<int> exponents;
};

struct LatentPolynomial {
  std::vector<LatentMonomial> terms;

  double evaluate(const RowVector& s) const;
};

// One summand x^alpha * sigma_alpha(Sigma - phi(x)).
struct PsiTerm {
  MultiDegree alpha;
  LatentPolynomial sigma;
};

// psi_i(x, Sigma) = sum over components[i] of x^alpha * sigma_alpha(Sigma - phi(x)).
struct PolynomialPsi {
  std::vector<std::vector<PsiTerm>> components;
};

using PhiMap = std::variant<PolynomialPhi, MlpMap>;
using PsiMap = std::variant<MlpMap, PolynomialPsi>;

// S(X)_i = psi(x_i, Sigma) with Sigma = sum_k phi(x_k).
struct SumformerModel {
  Eigen::Index d = 0;
  Eigen::Index d_latent = 0;
  PhiMap phi;
  PsiMap psi;

  Eigen::Index output_dim() const;
  bool phi_trainable() const { return std::holds_alternative<MlpMap>(phi); }
  bool psi_trainable() const { return std::holds_alternative<MlpMap>(psi); }
  void validate() const;
};

// Token-wise phi, n x d'.
Matrix phi_rows(const SumformerModel& model, const Matrix& x);
Matrix sumformer_forward(const SumformerModel& model, const Matrix& x);

// MLP phi (d -> d') and MLP psi (d + d' -> d), both `hidden` x `units`.
SumformerModel make_mlp_sumformer(Eigen::Index d, Eigen::Index d_latent, int hidden, int units,
                                  std::uint64_t seed);

// Exact monomial phi for sequences of length n, MLP psi; d' = C(n+d, d) - 1.
SumformerModel make_polynomial_sumformer(Eigen::Index n, Eigen::Index d, int hidden, int units,
                                         std::uint64_t seed);

// Polynomial phi of order n and the fixed polynomial psi given by one term
// list per output coordinate (d lists). Throws ShapeError on arity mismatch.
SumformerModel build_continuous_sumformer(Eigen::Index n, Eigen::Index d,
                                          std::vector<std::vector<PsiTerm>> components);

// Piecewise-constant construction on a grid of Delta cells per axis.
//
// A token is quantized to the cell holding it (cells are half-open
// [c/Delta, (c+1)/Delta)); phi maps it to the unit histogram vector of its
// cell, so Sigma - phi(x_i) is the exact integer histogram of the other
// n - 1 tokens. The table stores the target at the lower-left anchors for
// every (cell, histogram) pair.
class DiscreteSumformer {
 public:
  using Histogram = std::vector<int>;
  using Key = std::pair<std::int64_t, Histogram>;

  DiscreteSumformer(int delta, Eigen::Index n, Eigen::Index d, Eigen::Index output_dim);

  int delta() const { return delta_; }
  Eigen::Index n() const { return n_; }
  Eigen::Index d() const { return d_; }
  Eigen::Index output_dim() const { return output_dim_; }
  std::int64_t cell_count() const { return cell_count_; }
  const std::map<Key, RowVector>& table() const { return table_; }

  // Per-axis cell coordinates; DomainError outside [0,1).
  std::vector<int> quantize(const RowVector& x) const;
  std::int64_t cell_index(const RowVector& x) const;
  RowVector anchor(std::int64_t cell) const;
  // phi*(x): unit vector of the token's cell.
  Histogram encode(const RowVector& x) const;

  void insert(Key key, RowVector value);
  Matrix forward(const Matrix& x) const;

 private:
  int delta_;
  Eigen::Index n_;
  Eigen::Index d_;
  Eigen::Index output_dim_;
  std::int64_t cell_count_;
  std::map<Key, RowVector> table_;
};

// Throws BudgetError when Delta^{n d} > max_grid_points.
DiscreteSumformer build_discrete_sumformer(const TargetFunction& target, int delta, Eigen::Index n,
                                           Eigen::Index d, double max_grid_points = 1e6);

Matrix discrete_forward(const DiscreteSumformer& model, const Matrix& x);

// Largest |f(X) - S(X)| entry over `sample_count` uniform X in [0,1)^{n x d}.
// A Monte-Carlo lower bound on the true sup norm.
double sup_error(const SequenceMap& model, const TargetFunction& target, Eigen::Index n,
                 Eigen::Index d, int sample_count, std::uint64_t seed);

}  // namespace sumformer
