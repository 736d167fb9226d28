#include "sumformer/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "sumformer/autodiff.hpp"

namespace sumformer {

Dataset generate_dataset(const TargetFunction& target, Eigen::Index n, Eigen::Index d, int count,
                         double split_fraction, std::uint64_t seed) {
  if (count < 2) throw ContractError("generate_dataset: count >= 2");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw ContractError("generate_dataset: split fraction must lie in (0, 1)");
  }
  Dataset data;
  data.n = n;
  data.d = d;
  data.target_name = target.name;
  data.seed = seed;
  std::mt19937_64 rng(seed);
  const SequenceMap f = target.lifted();
  for (int s = 0; s < count; ++s) {
    data.inputs.push_back(random_sequence(n, d, rng));
    data.targets.push_back(f(data.inputs.back()));
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  auto n_train = static_cast<std::size_t>(std::llround(count * split_fraction));
  n_train = std::clamp<std::size_t>(n_train, 1, order.size() - 1);
  data.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  data.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return data;
}

double relative_l2_error(const std::vector<Matrix>& pred, const std::vector<Matrix>& truth) {
  if (pred.size() != truth.size()) throw ShapeError("relative_l2_error: sample count mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    if (pred[s].rows() != truth[s].rows() || pred[s].cols() != truth[s].cols()) {
      throw ShapeError("relative_l2_error: shape mismatch at sample " + std::to_string(s));
    }
    num += (pred[s] - truth[s]).squaredNorm();
    den += truth[s].squaredNorm();
  }
  if (den == 0.0) throw DomainError("relative_l2_error: truth has zero norm");
  return std::sqrt(num) / std::sqrt(den);
}

bool operator==(const TrainReport& a, const TrainReport& b) {
  auto same_curve = [](const auto& x, const auto& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].epoch != y[i].epoch || x[i].value != y[i].value) return false;
    }
    return true;
  };
  return same_curve(a.validation, b.validation) && a.train_loss == b.train_loss &&
         a.best_validation_error == b.best_validation_error && a.epochs == b.epochs &&
         a.seed == b.seed;
}

void AdamOptimizer::step(std::vector<Matrix*>& params, const std::vector<Matrix>& grads) {
  if (params.size() != grads.size()) throw ShapeError("adam: gradient count mismatch");
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, double(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, double(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i].cwiseAbs2();
    Matrix& p = *params[i];
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        const double mh = m_[i](r, c) / c1;
        const double vh = v_[i](r, c) / c2;
        p(r, c) -= config_.learning_rate * mh / (std::sqrt(vh) + config_.epsilon);
      }
    }
  }
}

std::vector<Matrix*> trainable_parameters(SumformerModel& model) {
  std::vector<Matrix*> out;
  auto add = [&out](MlpMap& m) {
    for (std::size_t l = 0; l < m.params.weights.size(); ++l) {
      out.push_back(&m.params.weights[l]);
      out.push_back(&m.params.biases[l]);
    }
  };
  if (auto* m = std::get_if<MlpMap>(&model.phi)) add(*m);
  if (auto* m = std::get_if<MlpMap>(&model.psi)) add(*m);
  return out;
}

namespace {

Matrix stack_rows(const std::vector<Matrix>& items) {
  if (items.empty()) return Matrix{};
  Matrix out(items.front().rows() * static_cast<Eigen::Index>(items.size()), items.front().cols());
  Eigen::Index r = 0;
  for (const auto& m : items) {
    out.middleRows(r, m.rows()) = m;
    r += m.rows();
  }
  return out;
}

}  // namespace

LossAndGradient loss_and_gradient(const SumformerModel& model, const std::vector<Matrix>& inputs,
                                  const std::vector<Matrix>& targets) {
  model.validate();
  if (inputs.empty() || inputs.size() != targets.size()) {
    throw ContractError("loss_and_gradient: need matching, non-empty inputs and targets");
  }
  const auto* psi = std::get_if<MlpMap>(&model.psi);
  if (psi == nullptr) throw ContractError("loss_and_gradient: psi must be a network");
  const Eigen::Index n = inputs.front().rows();

  Tape tape;
  const Matrix x_stacked = stack_rows(inputs);
  Var x = tape.constant(x_stacked);
  Var phi;
  if (const auto* m = std::get_if<MlpMap>(&model.phi)) {
    phi = mlp_forward(m->spec, register_mlp(tape, m->params), x);
  } else {
    phi = tape.constant(phi_rows(model, x_stacked));
  }
  Var sigma = group_repeat(group_sum(phi, n), n);
  Var out = mlp_forward(psi->spec, register_mlp(tape, psi->params), hconcat(x, sigma));
  Var loss = mean_all(square(out - tape.constant(stack_rows(targets))));

  LossAndGradient result;
  result.loss = loss.value()(0, 0);
  result.gradients = tape.gradient(loss);
  return result;
}

std::vector<Matrix> predict(const SumformerModel& model, const std::vector<Matrix>& inputs) {
  std::vector<Matrix> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) out.push_back(sumformer_forward(model, x));
  return out;
}

TrainReport train(SumformerModel& model, const Dataset& data, const TrainConfig& config) {
  std::vector<Matrix*> params = trainable_parameters(model);
  if (params.empty() || !model.psi_trainable()) {
    throw ContractError("train: model has no trainable psi network");
  }
  if (config.epochs < 0 || config.eval_every < 1) throw ContractError("train: bad epoch config");

  std::vector<Matrix> train_x, train_y, val_x, val_y;
  for (std::size_t i : data.train) {
    train_x.push_back(data.inputs[i]);
    train_y.push_back(data.targets[i]);
  }
  for (std::size_t i : data.validation) {
    val_x.push_back(data.inputs[i]);
    val_y.push_back(data.targets[i]);
  }

  TrainReport report;
  report.seed = config.seed;
  report.config = config;
  auto evaluate = [&](int epoch) {
    const double err = relative_l2_error(predict(model, val_x), val_y);
    report.validation.push_back({epoch, err});
    report.best_validation_error =
        report.validation.size() == 1 ? err : std::min(report.best_validation_error, err);
  };
  evaluate(0);

  AdamOptimizer adam(config.adam);
  std::mt19937_64 rng(config.seed);
  const std::size_t count = train_x.size();
  const std::size_t batch =
      config.adam.batch_size == 0 ? count : std::min(config.adam.batch_size, count);
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (batch < count) {
      for (std::size_t i = count; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(order[i - 1], order[pick(rng)]);
      }
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < count; start += batch) {
      const std::size_t end = std::min(start + batch, count);
      std::vector<Matrix> bx, by;
      if (batch == count) {
        bx = train_x;
        by = train_y;
      } else {
        for (std::size_t j = start; j < end; ++j) {
          bx.push_back(train_x[order[j]]);
          by.push_back(train_y[order[j]]);
        }
      }
      LossAndGradient lg = loss_and_gradient(model, bx, by);
      if (!std::isfinite(lg.loss)) {
        report.epochs = epoch - 1;
        throw DivergenceError("train: loss became non-finite at epoch " + std::to_string(epoch),
                              report);
      }
      epoch_loss += lg.loss * double(end - start);
      adam.step(params, lg.gradients);
    }
    report.train_loss.push_back(epoch_loss / double(count));
    report.epochs = epoch;
    if (epoch % config.eval_every == 0) evaluate(epoch);
  }
  return report;
}

TrainReport run_experiment(const TargetFunction& target, const ExperimentConfig& config,
                           std::uint64_t seed, SumformerModel* trained) {
  const Dataset data =
      generate_dataset(target, config.n, config.d, config.points, config.split_fraction, seed);
  SumformerModel model =
      config.polynomial_phi
          ? make_polynomial_sumformer(config.n, config.d, config.hidden_layers,
                                      config.hidden_units, seed + 1)
          : make_mlp_sumformer(config.d, config.d_latent, config.hidden_layers,
                               config.hidden_units, seed + 1);
  TrainConfig tc = config.train;
  tc.seed = seed + 2;
  TrainReport report = train(model, data, tc);
  if (trained != nullptr) *trained = std::move(model);
  return report;
}

std::vector<SweepRow> latent_sweep(const TargetFunction& target, const ExperimentConfig& base,
                                   const std::vector<Eigen::Index>& d_list,
                                   const std::vector<Eigen::Index>& dprime_list,
                                   const std::vector<std::uint64_t>& seeds, int threads) {
  if (d_list.empty() || dprime_list.empty() || seeds.empty()) {
    throw ContractError("latent_sweep: empty parameter list");
  }
  std::vector<SweepRow> rows;
  for (Eigen::Index d : d_list) {
    for (Eigen::Index dp : dprime_list) {
      for (std::uint64_t s : seeds) {
        rows.push_back({d, dp, s, 0.0, latent_dimension(int(base.n), int(d))});
      }
    }
  }
  auto run_cell = [&](std::size_t i) {
    ExperimentConfig cfg = base;
    cfg.d = rows[i].d;
    cfg.d_latent = rows[i].d_latent;
    cfg.polynomial_phi = false;
    rows[i].best_validation_error = run_experiment(target, cfg, rows[i].seed).best_validation_error;
  };
  const std::size_t workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < rows.size(); i += workers) run_cell(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_curve_csv(std::ostream& os, const TrainReport& report) {
  os << "epoch,split,metric,value\n";
  for (const auto& p : report.validation) {
    os << p.epoch << ",validation,relative_l2," << fmt(p.value) << "\n";
  }
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "d,d_prime,seed,best_val_err,dprime_formula\n";
  for (const auto& r : rows) {
    os << r.d << "," << r.d_latent << "," << r.seed << "," << fmt(r.best_validation_error) << ","
       << r.dprime_formula << "\n";
  }
}

}  // namespace sumformer
