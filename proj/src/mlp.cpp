#include "sumformer/mlp.hpp"

#include <cmath>
#include <string>

namespace sumformer {

void MlpSpec::validate() const {
  if (widths.size() < 2) throw ContractError("MlpSpec: need at least two widths");
  for (int w : widths) {
    if (w < 1) throw ContractError("MlpSpec: widths must be positive");
  }
}

MlpSpec MlpSpec::uniform(int in, int hidden, int units, int out) {
  MlpSpec spec;
  spec.widths.push_back(in);
  for (int i = 0; i < hidden; ++i) spec.widths.push_back(units);
  spec.widths.push_back(out);
  spec.validate();
  return spec;
}

std::size_t MlpParams::scalar_count() const {
  std::size_t total = 0;
  for (const auto& w : weights) total += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) total += static_cast<std::size_t>(b.size());
  return total;
}

MlpParams init_mlp(const MlpSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  MlpParams p;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const int fan_in = spec.widths[l];
    const int fan_out = spec.widths[l + 1];
    const double bound = std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    }
    Matrix b(1, fan_out);
    for (Eigen::Index j = 0; j < b.cols(); ++j) b(0, j) = dist(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

MlpParams zero_mlp(const MlpSpec& spec) {
  spec.validate();
  MlpParams p;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    p.weights.push_back(Matrix::Zero(spec.widths[l], spec.widths[l + 1]));
    p.biases.push_back(Matrix::Zero(1, spec.widths[l + 1]));
  }
  return p;
}

void check_params(const MlpSpec& spec, const MlpParams& params) {
  spec.validate();
  if (params.weights.size() != spec.layer_count() || params.biases.size() != spec.layer_count()) {
    throw ShapeError("MlpParams: layer count does not match spec");
  }
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const auto& w = params.weights[l];
    const auto& b = params.biases[l];
    if (w.rows() != spec.widths[l] || w.cols() != spec.widths[l + 1] || b.rows() != 1 ||
        b.cols() != spec.widths[l + 1]) {
      throw ShapeError("MlpParams: layer " + std::to_string(l) + " has shape " + shape_str(w) +
                       " / " + shape_str(b));
    }
  }
}

Matrix mlp_forward(const MlpSpec& spec, const MlpParams& params, const Matrix& x,
                   MacCounter* counter) {
  check_params(spec, params);
  if (x.cols() != spec.input_width()) {
    throw ShapeError("mlp_forward: input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(spec.input_width()));
  }
  Matrix h = x;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    h = add_row(matmul(h, params.weights[l], counter), params.biases[l]);
    if (l + 1 < spec.layer_count()) h = relu(h);
  }
  return h;
}

MlpVars register_mlp(Tape& tape, const MlpParams& params) {
  MlpVars vars;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    vars.weights.push_back(tape.parameter(params.weights[l]));
    vars.biases.push_back(tape.parameter(params.biases[l]));
  }
  return vars;
}

Var mlp_forward(const MlpSpec& spec, const MlpVars& vars, Var x) {
  if (vars.weights.size() != spec.layer_count()) {
    throw ShapeError("mlp_forward: layer count does not match spec");
  }
  if (x.cols() != spec.input_width()) {
    throw ShapeError("mlp_forward: input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(spec.input_width()));
  }
  Var h = x;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    h = add_row(matmul(h, vars.weights[l]), vars.biases[l]);
    if (l + 1 < spec.layer_count()) h = relu(h);
  }
  return h;
}

}  // namespace sumformer
