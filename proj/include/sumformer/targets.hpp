#pragma once

#include <string>
#include <vector>

#include "sumformer/equivariance.hpp"

namespace sumformer {

enum class TargetKind { PolynomialType, NonPolynomialType };

// A semi-invariant g(token, remaining tokens) and its equivariant lift
// f(X)_i = g(x_i, X without x_i). Outputs have the token width d.
struct TargetFunction {
  std::string name;
  std::string formula;
  TargetKind kind = TargetKind::PolynomialType;
  // True for benchmark stand-ins not taken from the reference experiments.
  bool invented = false;
  SemiInvariantFn g;

  SequenceMap lifted() const { return lift(g); }
  Matrix operator()(const Matrix& x) const { return lifted()(x); }
};

// g = x + 7 x^2 + 3 x (sum of rest)^3, component-wise.
TargetFunction cubic_interaction_target();
// g = x + (sum of rest)^2, component-wise.
TargetFunction square_sum_target();
// g = sin(pi x) * exp(-|sum of rest|^2).
TargetFunction sine_decay_target();
// g = max over rest r of softplus(3 (x - r)) - softplus(x), component-wise.
TargetFunction softplus_max_target();
// g = x + sum over rest of r^2, component-wise; Lipschitz on [0,1).
TargetFunction square_rest_target();
// g = c for every token.
TargetFunction constant_target(double c);

// Names accepted by target_by_name.
std::vector<std::string> target_names();
TargetFunction target_by_name(const std::string& name);

}  // namespace sumformer
