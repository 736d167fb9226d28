#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sumformer/tensor.hpp"

namespace sumformer {

// A bijection on {0, ..., n-1} stored as an index array.
class Permutation {
 public:
  Permutation() = default;
  // Throws ContractError unless `mapping` is a bijection.
  explicit Permutation(std::vector<Eigen::Index> mapping);

  static Permutation identity(Eigen::Index n);
  // Uniform over S_n (Fisher-Yates).
  static Permutation random(Eigen::Index n, std::mt19937_64& rng);
  // Uniform over permutations with p(0) = 0.
  static Permutation random_fixing_first(Eigen::Index n, std::mt19937_64& rng);

  Eigen::Index size() const { return static_cast<Eigen::Index>(map_.size()); }
  Eigen::Index operator[](Eigen::Index i) const { return map_[static_cast<std::size_t>(i)]; }
  const std::vector<Eigen::Index>& mapping() const { return map_; }

  Permutation inverse() const;
  std::string str() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<Eigen::Index> map_;
};

// Row i of the result is row p[i] of x.
Matrix permute(const Matrix& x, const Permutation& p);

// The permutation r with permute(permute(x, p), q) == permute(x, compose(q, p)).
Permutation compose(const Permutation& q, const Permutation& p);

// All permutations of {0..n-1} in lexicographic order.
std::vector<Permutation> all_permutations(Eigen::Index n);

// Sequence-to-sequence map and the two ways of writing a semi-invariant
// function: on the whole sequence (first row distinguished) or on
// (token, remaining n-1 tokens).
using SequenceMap = std::function<Matrix(const Matrix&)>;
using SequenceToPoint = std::function<RowVector(const Matrix&)>;
using SemiInvariantFn = std::function<RowVector(const RowVector& token, const Matrix& rest)>;

// Rows of x except row i, in their original order.
Matrix others(const Matrix& x, Eigen::Index i);

// f(X)_i = g(x_i, X without row i).
SequenceMap lift(SemiInvariantFn g);

SequenceToPoint as_sequence_to_point(SemiInvariantFn g);

struct CheckReport {
  double max_violation = 0.0;
  bool passed = true;
  std::size_t evaluations = 0;
  Matrix witness_input;
  Permutation witness_permutation;
};

struct CheckOptions {
  int trials = 100;
  std::uint64_t seed = 0;
  double tol = 1e-10;
  // Inputs are sampled uniformly from [low, high).
  double low = 0.0;
  double high = 1.0;
  // Up to this n every trial checks all permutations; beyond it one random
  // permutation per trial.
  Eigen::Index exhaustive_up_to = 6;
};

// max over trials of || f(pi X) - pi f(X) ||_inf.
CheckReport check_equivariance(const SequenceMap& f, Eigen::Index n, Eigen::Index d,
                               const CheckOptions& options = {});

// max over trials of || g(pi X) - g(X) ||_inf for pi fixing the first row.
CheckReport check_semi_invariance(const SequenceToPoint& g, Eigen::Index n, Eigen::Index d,
                                  const CheckOptions& options = {});

// Uniform [low, high) sample of an n x d sequence.
Matrix random_sequence(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng, double low = 0.0,
                       double high = 1.0);

}  // namespace sumformer
