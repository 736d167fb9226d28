#include "sumformer/targets.hpp"

#include <cmath>
#include <numbers>

namespace sumformer {

namespace {

RowVector rest_sum(const Matrix& rest, Eigen::Index d) {
  RowVector s = RowVector::Zero(d);
  for (Eigen::Index i = 0; i < rest.rows(); ++i) s += rest.row(i);
  return s;
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

TargetFunction cubic_interaction_target() {
  TargetFunction t;
  t.name = "cubic_interaction";
  t.formula = "x + 7 x^2 + 3 x (sum rest)^3";
  t.kind = TargetKind::PolynomialType;
  t.g = [](const RowVector& x, const Matrix& rest) -> RowVector {
    const RowVector s = rest_sum(rest, x.cols());
    RowVector out(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      out(c) = x(c) + 7.0 * x(c) * x(c) + 3.0 * x(c) * s(c) * s(c) * s(c);
    }
    return out;
  };
  return t;
}

TargetFunction square_sum_target() {
  TargetFunction t;
  t.name = "square_sum";
  t.formula = "x + (sum rest)^2";
  t.kind = TargetKind::PolynomialType;
  t.invented = true;
  t.g = [](const RowVector& x, const Matrix& rest) -> RowVector {
    const RowVector s = rest_sum(rest, x.cols());
    return x + s.cwiseAbs2();
  };
  return t;
}

TargetFunction sine_decay_target() {
  TargetFunction t;
  t.name = "sine_decay";
  t.formula = "sin(pi x) exp(-|sum rest|^2)";
  t.kind = TargetKind::NonPolynomialType;
  t.invented = true;
  t.g = [](const RowVector& x, const Matrix& rest) -> RowVector {
    const RowVector s = rest_sum(rest, x.cols());
    const double decay = std::exp(-s.squaredNorm());
    RowVector out(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) out(c) = std::sin(std::numbers::pi * x(c)) * decay;
    return out;
  };
  return t;
}

TargetFunction softplus_max_target() {
  TargetFunction t;
  t.name = "softplus_max";
  t.formula = "max_r softplus(3 (x - r)) - softplus(x)";
  t.kind = TargetKind::NonPolynomialType;
  t.invented = true;
  t.g = [](const RowVector& x, const Matrix& rest) -> RowVector {
    RowVector out(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < rest.rows(); ++r) {
        best = std::max(best, softplus(3.0 * (x(c) - rest(r, c))));
      }
      if (rest.rows() == 0) best = 0.0;
      out(c) = best - softplus(x(c));
    }
    return out;
  };
  return t;
}

TargetFunction square_rest_target() {
  TargetFunction t;
  t.name = "square_rest";
  t.formula = "x + sum rest^2";
  t.kind = TargetKind::PolynomialType;
  t.invented = true;
  t.g = [](const RowVector& x, const Matrix& rest) -> RowVector {
    RowVector out = x;
    for (Eigen::Index r = 0; r < rest.rows(); ++r) out += rest.row(r).cwiseAbs2();
    return out;
  };
  return t;
}

TargetFunction constant_target(double c) {
  TargetFunction t;
  t.name = "constant";
  t.formula = "c";
  t.kind = TargetKind::PolynomialType;
  t.invented = true;
  t.g = [c](const RowVector& x, const Matrix&) -> RowVector {
    return RowVector::Constant(x.cols(), c);
  };
  return t;
}

std::vector<std::string> target_names() {
  return {"cubic_interaction", "square_sum", "sine_decay", "softplus_max", "square_rest",
          "constant"};
}

TargetFunction target_by_name(const std::string& name) {
  if (name == "cubic_interaction") return cubic_interaction_target();
  if (name == "square_sum") return square_sum_target();
  if (name == "sine_decay") return sine_decay_target();
  if (name == "softplus_max") return softplus_max_target();
  if (name == "square_rest") return square_rest_target();
  if (name == "constant") return constant_target(1.0);
  throw ContractError("unknown target '" + name + "'");
}

}  // namespace sumformer
