#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sumformer/tensor.hpp"

namespace sumformer {

// Exponent vector alpha in N_0^d.
struct MultiDegree {
  std::vector<int> exponents;

  int order() const;
  Eigen::Index dim() const { return static_cast<Eigen::Index>(exponents.size()); }
  friend bool operator==(const MultiDegree&, const MultiDegree&) = default;
  friend auto operator<=>(const MultiDegree&, const MultiDegree&) = default;
};

// All multidegrees with 1 <= |alpha| <= n_max in graded-lexicographic order:
// by order ascending, then lexicographically descending in the exponents, so
// (1,0) precedes (0,1) and (2,0) precedes (1,1).
struct DegreeBasis {
  Eigen::Index d = 0;
  int n_max = 0;
  std::vector<MultiDegree> degrees;

  Eigen::Index size() const { return static_cast<Eigen::Index>(degrees.size()); }
};

// C(n_max + d, d) - 1 with overflow detection (CountOverflowError).
std::uint64_t latent_dimension(int n_max, int d);

DegreeBasis enumerate_multidegrees(int d, int n_max);

// x^alpha = prod_i x_i^alpha_i, each power by repeated multiplication.
double monomial(const RowVector& x, const MultiDegree& alpha);

// phi(x): 1 x d' row of monomials in basis order.
RowVector monomial_features(const RowVector& x, const DegreeBasis& basis);

// n x d' matrix whose row i is monomial_features(x.row(i)).
Matrix monomial_feature_rows(const Matrix& x, const DegreeBasis& basis);

// p_alpha(X) = sum_i x_i^alpha, rows reduced in order.
double power_sum(const Matrix& x, const MultiDegree& alpha);

// Sigma = sum_i phi(x_i), rows reduced in order.
RowVector power_sum_vector(const Matrix& x, const DegreeBasis& basis);

// Same as power_sum_vector after sorting the rows lexicographically, which
// makes the result bitwise independent of row order.
RowVector canonical_power_sum_vector(const Matrix& x, const DegreeBasis& basis);

// A product of power sums, given as indices into the basis (possibly
// repeated). The empty product is the constant 1.
using PowerSumProduct = std::vector<std::size_t>;

struct GenerationFit {
  DegreeBasis basis;
  std::vector<PowerSumProduct> products;
  std::vector<double> coefficients;
  double max_residual = 0.0;

  // Evaluates sum_j c_j * prod p_{alpha}(X) at a sequence.
  double evaluate(const Matrix& x) const;
  // Same, but from a precomputed power-sum vector.
  double evaluate_from_power_sums(const RowVector& sigma) const;
  // Coefficient of the given product (0 if absent); order of indices is ignored.
  double coefficient(PowerSumProduct product) const;
};

struct GenerationOptions {
  int d = 1;
  int n = 2;
  // Total polynomial degree in X of each product; defaults to 2 * n.
  std::optional<int> max_product_degree;
  int sample_count = 500;
  std::uint64_t seed = 0;
  int invariance_permutations = 10;
  double invariance_tol = 1e-9;
};

// All products of basis power sums with total degree <= max_degree, the
// constant first, then by degree.
std::vector<PowerSumProduct> enumerate_power_sum_products(const DegreeBasis& basis,
                                                          int max_degree);

// Least-squares fit of a multisymmetric target over products of power sums
// evaluated at uniform samples in [0,1]^{n x d}. Throws InvarianceViolation
// if the target changes under a row permutation of a sample.
GenerationFit generation_oracle(const std::function<double(const Matrix&)>& target,
                                const GenerationOptions& options);

}  // namespace sumformer
