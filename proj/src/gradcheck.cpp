#include "sumformer/gradcheck.hpp"

#include <cmath>
#include <random>

namespace sumformer {

namespace {

double mse(const MlpSpec& spec, const MlpParams& params, const Matrix& x, const Matrix& y) {
  const Matrix diff = mlp_forward(spec, params, x) - y;
  return diff.squaredNorm() / double(diff.size());
}

bool near_kink(const MlpSpec& spec, const MlpParams& params, const Matrix& x, double margin) {
  Matrix h = x;
  for (std::size_t l = 0; l + 1 < spec.layer_count(); ++l) {
    h = add_row(matmul(h, params.weights[l]), params.biases[l]);
    if ((h.array().abs() < margin).any()) return true;
    h = relu(h);
  }
  return false;
}

}  // namespace

GradientCheckResult check_mlp_gradient(std::uint64_t seed, const GradientCheckOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> width(1, options.max_width);
  std::uniform_int_distribution<int> hidden(1, options.max_hidden_layers);
  std::uniform_int_distribution<int> rows(1, options.max_rows);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  GradientCheckResult result;
  MlpParams params;
  Matrix x, y;
  for (;;) {
    MlpSpec spec;
    spec.widths.push_back(width(rng));
    const int h = hidden(rng);
    for (int i = 0; i < h; ++i) spec.widths.push_back(width(rng));
    spec.widths.push_back(width(rng));
    params = init_mlp(spec, rng);
    const int r = rows(rng);
    x = Matrix::NullaryExpr(r, spec.input_width(), [&] { return unit(rng); });
    y = Matrix::NullaryExpr(r, spec.output_width(), [&] { return unit(rng); });
    result.spec = spec;
    if (!near_kink(spec, params, x, options.kink_margin)) break;
    ++result.resamples;
  }
  result.input = x;
  const MlpSpec& spec = result.spec;

  Tape tape;
  MlpVars vars = register_mlp(tape, params);
  Var out = mlp_forward(spec, vars, tape.constant(x));
  Var loss = mean_all(square(out - tape.constant(y)));
  const std::vector<Matrix> grads = tape.gradient(loss);

  // Same layout as the tape: w0, b0, w1, b1, ...
  std::vector<Matrix*> slots;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    slots.push_back(&params.weights[l]);
    slots.push_back(&params.biases[l]);
  }
  double diff_sq = 0.0, tape_sq = 0.0, fd_sq = 0.0;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    Matrix& p = *slots[s];
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        const double saved = p(i, j);
        p(i, j) = saved + options.step;
        const double up = mse(spec, params, x, y);
        p(i, j) = saved - options.step;
        const double down = mse(spec, params, x, y);
        p(i, j) = saved;
        const double fd = (up - down) / (2.0 * options.step);
        const double g = grads[s](i, j);
        diff_sq += (g - fd) * (g - fd);
        tape_sq += g * g;
        fd_sq += fd * fd;
        result.max_abs_error = std::max(result.max_abs_error, std::abs(g - fd));
      }
    }
  }
  const double scale = std::sqrt(std::max(tape_sq, fd_sq));
  result.relative_error = scale == 0.0 ? std::sqrt(diff_sq) : std::sqrt(diff_sq) / scale;
  return result;
}

}  // namespace sumformer
