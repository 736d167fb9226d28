#pragma once

#include <cstdint>

#include "sumformer/mlp.hpp"

namespace sumformer {

struct GradientCheckResult {
  double relative_error = 0.0;  // |g_tape - g_fd|_2 / max(|g_tape|_2, |g_fd|_2)
  double max_abs_error = 0.0;
  MlpSpec spec;
  Matrix input;
  int resamples = 0;  // draws rejected for pre-activations near a ReLU kink
};

struct GradientCheckOptions {
  int max_width = 16;
  int max_hidden_layers = 2;
  int max_rows = 4;
  double step = 1e-5;
  double kink_margin = 1e-3;
};

// Draws a random MLP (widths <= max_width), input rows in [-1,1] and target
// from `seed`, rejecting draws with any hidden pre-activation within
// kink_margin of 0, then compares the tape gradient of the mean squared
// error with central finite differences over every parameter.
GradientCheckResult check_mlp_gradient(std::uint64_t seed, const GradientCheckOptions& options = {});

}  // namespace sumformer
