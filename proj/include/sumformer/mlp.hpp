#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sumformer/autodiff.hpp"
#include "sumformer/tensor.hpp"

namespace sumformer {

// Layer widths, input first and output last. Hidden layers use ReLU, the
// output layer is affine. Two widths means a single affine map.
struct MlpSpec {
  std::vector<int> widths;

  void validate() const;
  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }
  std::size_t layer_count() const { return widths.size() - 1; }

  // `hidden` layers of `units` each between `in` and `out`.
  static MlpSpec uniform(int in, int hidden, int units, int out);
};

// Layer l maps rows through x * weights[l] + biases[l]; weights[l] is
// widths[l] x widths[l+1], biases[l] is 1 x widths[l+1].
struct MlpParams {
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;

  std::size_t scalar_count() const;
};

// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) for weights and biases.
MlpParams init_mlp(const MlpSpec& spec, std::mt19937_64& rng);
MlpParams zero_mlp(const MlpSpec& spec);

void check_params(const MlpSpec& spec, const MlpParams& params);

// Token-wise forward pass (one row per token). Uses the exact-order matmul.
Matrix mlp_forward(const MlpSpec& spec, const MlpParams& params, const Matrix& x,
                   MacCounter* counter = nullptr);

// Parameters registered on a tape, in weights[0], biases[0], weights[1], ... order.
struct MlpVars {
  std::vector<Var> weights;
  std::vector<Var> biases;
};

MlpVars register_mlp(Tape& tape, const MlpParams& params);
Var mlp_forward(const MlpSpec& spec, const MlpVars& vars, Var x);

}  // namespace sumformer
