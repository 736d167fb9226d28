#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sumformer/attention.hpp"

namespace sumformer {

struct VerifyConfig {
  Eigen::Index n = 4;
  Eigen::Index d = 2;
  Eigen::Index k = 2;
  int delta = 8;
  int trials = 100;
  std::uint64_t seed = 0;
  // Replaces every floating-point tolerance when set.
  std::optional<double> tol;
  LinformerValueScale linformer_scale = LinformerValueScale::Rank;
};

struct PropertyResult {
  std::string name;
  bool passed = false;
  double max_residual = 0.0;
  double tolerance = 0.0;
  std::string detail;
  // Input that produced max_residual, empty when not applicable.
  Matrix witness;
};

struct VerifyReport {
  std::vector<PropertyResult> properties;

  bool all_passed() const;
  const PropertyResult* find(const std::string& name) const;
};

// Oracle and invariant suite over the sum-extraction constructions, the
// Sumformer realizations, the generation oracle and the gradient engine.
VerifyReport run_verification(const VerifyConfig& config);

}  // namespace sumformer
