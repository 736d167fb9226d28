#include "sumformer/multisym.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <random>
#include <string>

#include "sumformer/equivariance.hpp"

namespace sumformer {

int MultiDegree::order() const {
  int total = 0;
  for (int e : exponents) total += e;
  return total;
}

std::uint64_t latent_dimension(int n_max, int d) {
  if (d < 1 || n_max < 1) throw ContractError("latent_dimension: need d >= 1 and n_max >= 1");
  // C(n+i, i) = C(n+i-1, i-1) * (n+i) / i, exact at every step.
  std::uint64_t c = 1;
  for (int i = 1; i <= d; ++i) {
    std::uint64_t num = 0;
    if (__builtin_mul_overflow(c, static_cast<std::uint64_t>(n_max + i), &num)) {
      throw CountOverflowError("latent_dimension: C(" + std::to_string(n_max + d) + "," +
                               std::to_string(d) + ") overflows 64 bits");
    }
    c = num / static_cast<std::uint64_t>(i);
  }
  return c - 1;
}

namespace {

// Appends every exponent vector of length `dims` summing to `remaining`,
// lexicographically descending.
void compositions(int remaining, std::size_t pos, std::vector<int>& current,
                  std::vector<MultiDegree>& out) {
  if (pos + 1 == current.size()) {
    current[pos] = remaining;
    out.push_back(MultiDegree{current});
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[pos] = e;
    compositions(remaining - e, pos + 1, current, out);
  }
}

}  // namespace

DegreeBasis enumerate_multidegrees(int d, int n_max) {
  const std::uint64_t count = latent_dimension(n_max, d);
  if (count > static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max())) {
    throw CountOverflowError("enumerate_multidegrees: count exceeds index range");
  }
  DegreeBasis basis;
  basis.d = d;
  basis.n_max = n_max;
  basis.degrees.reserve(static_cast<std::size_t>(count));
  std::vector<int> current(static_cast<std::size_t>(d), 0);
  for (int order = 1; order <= n_max; ++order) compositions(order, 0, current, basis.degrees);
  return basis;
}

double monomial(const RowVector& x, const MultiDegree& alpha) {
  if (x.cols() != alpha.dim()) {
    throw ShapeError("monomial: token of width " + std::to_string(x.cols()) +
                     " for multidegree of length " + std::to_string(alpha.dim()));
  }
  double value = 1.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (int e = 0; e < alpha.exponents[static_cast<std::size_t>(i)]; ++e) value *= x(i);
  }
  return value;
}

RowVector monomial_features(const RowVector& x, const DegreeBasis& basis) {
  if (x.cols() != basis.d) {
    throw ShapeError("monomial_features: token of width " + std::to_string(x.cols()) +
                     ", basis for d=" + std::to_string(basis.d));
  }
  RowVector out(basis.size());
  for (Eigen::Index j = 0; j < basis.size(); ++j) {
    out(j) = monomial(x, basis.degrees[static_cast<std::size_t>(j)]);
  }
  return out;
}

Matrix monomial_feature_rows(const Matrix& x, const DegreeBasis& basis) {
  Matrix out(x.rows(), basis.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = monomial_features(x.row(i), basis);
  return out;
}

double power_sum(const Matrix& x, const MultiDegree& alpha) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) total += monomial(x.row(i), alpha);
  return total;
}

RowVector power_sum_vector(const Matrix& x, const DegreeBasis& basis) {
  RowVector total = RowVector::Zero(basis.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i) total += monomial_features(x.row(i), basis);
  return total;
}

RowVector canonical_power_sum_vector(const Matrix& x, const DegreeBasis& basis) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::lexicographical_compare(x.row(a).begin(), x.row(a).end(), x.row(b).begin(),
                                        x.row(b).end());
  });
  Matrix sorted(x.rows(), x.cols());
  for (std::size_t i = 0; i < order.size(); ++i) sorted.row(Eigen::Index(i)) = x.row(order[i]);
  return power_sum_vector(sorted, basis);
}

namespace {

void products_from(const DegreeBasis& basis, std::size_t start, int budget,
                   PowerSumProduct& current, std::vector<PowerSumProduct>& out) {
  for (std::size_t j = start; j < basis.degrees.size(); ++j) {
    const int order = basis.degrees[j].order();
    if (order > budget) continue;
    current.push_back(j);
    out.push_back(current);
    products_from(basis, j, budget - order, current, out);
    current.pop_back();
  }
}

int product_degree(const DegreeBasis& basis, const PowerSumProduct& p) {
  int total = 0;
  for (std::size_t j : p) total += basis.degrees[j].order();
  return total;
}

}  // namespace

std::vector<PowerSumProduct> enumerate_power_sum_products(const DegreeBasis& basis,
                                                          int max_degree) {
  std::vector<PowerSumProduct> out;
  out.emplace_back();
  PowerSumProduct current;
  products_from(basis, 0, max_degree, current, out);
  std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    return product_degree(basis, a) < product_degree(basis, b);
  });
  return out;
}

double GenerationFit::evaluate_from_power_sums(const RowVector& sigma) const {
  double total = 0.0;
  for (std::size_t j = 0; j < products.size(); ++j) {
    double term = coefficients[j];
    for (std::size_t idx : products[j]) term *= sigma(Eigen::Index(idx));
    total += term;
  }
  return total;
}

double GenerationFit::evaluate(const Matrix& x) const {
  return evaluate_from_power_sums(power_sum_vector(x, basis));
}

double GenerationFit::coefficient(PowerSumProduct product) const {
  std::sort(product.begin(), product.end());
  for (std::size_t j = 0; j < products.size(); ++j) {
    if (products[j] == product) return coefficients[j];
  }
  return 0.0;
}

GenerationFit generation_oracle(const std::function<double(const Matrix&)>& target,
                                const GenerationOptions& options) {
  if (options.sample_count < 1) throw ContractError("generation_oracle: sample_count < 1");
  GenerationFit fit;
  fit.basis = enumerate_multidegrees(options.d, options.n);
  const int max_degree = options.max_product_degree.value_or(2 * options.n);
  fit.products = enumerate_power_sum_products(fit.basis, max_degree);

  std::mt19937_64 rng(options.seed);
  std::vector<Matrix> samples;
  samples.reserve(static_cast<std::size_t>(options.sample_count));
  for (int s = 0; s < options.sample_count; ++s) {
    samples.push_back(random_sequence(options.n, options.d, rng));
  }

  std::vector<double> values(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) values[s] = target(samples[s]);

  for (int t = 0; t < options.invariance_permutations; ++t) {
    const std::size_t s = static_cast<std::size_t>(t) % samples.size();
    const Permutation p = Permutation::random(options.n, rng);
    const double permuted = target(permute(samples[s], p));
    if (!(std::abs(permuted - values[s]) <= options.invariance_tol)) {
      throw InvarianceViolation("generation_oracle: target not invariant under permutation " +
                                p.str() + " (|delta| = " + std::to_string(std::abs(permuted - values[s])) +
                                ")");
    }
  }

  const Eigen::Index rows = options.sample_count;
  const Eigen::Index cols = static_cast<Eigen::Index>(fit.products.size());
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index s = 0; s < rows; ++s) {
    const RowVector sigma = power_sum_vector(samples[static_cast<std::size_t>(s)], fit.basis);
    for (Eigen::Index j = 0; j < cols; ++j) {
      double term = 1.0;
      for (std::size_t idx : fit.products[static_cast<std::size_t>(j)]) term *= sigma(Eigen::Index(idx));
      design(s, j) = term;
    }
    rhs(s) = values[static_cast<std::size_t>(s)];
  }
  // Products of power sums are algebraically dependent once the basis is
  // larger than n*d, so the design can be rank deficient; take the
  // minimum-norm solution.
  const Eigen::VectorXd coef = design.completeOrthogonalDecomposition().solve(rhs);
  fit.coefficients.assign(coef.data(), coef.data() + coef.size());
  fit.max_residual = (design * coef - rhs).cwiseAbs().maxCoeff();
  return fit;
}

}  // namespace sumformer
