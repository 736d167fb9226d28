#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "sumformer/sumformer.hpp"
#include "sumformer/targets.hpp"

namespace sumformer {

struct Dataset {
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  std::string target_name;
  std::uint64_t seed = 0;
  std::vector<Matrix> inputs;
  std::vector<Matrix> targets;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// `count` sequences uniform in [0,1)^{n x d}; round(count * split_fraction)
// of them (after a seeded shuffle) form the training split.
Dataset generate_dataset(const TargetFunction& target, Eigen::Index n, Eigen::Index d, int count,
                         double split_fraction, std::uint64_t seed);

// |pred - truth|_2 / |truth|_2 over all entries. Throws DomainError when the
// truth has zero norm.
double relative_l2_error(const std::vector<Matrix>& pred, const std::vector<Matrix>& truth);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // 0 means full batch.
  std::size_t batch_size = 32;
};

struct TrainConfig {
  int epochs = 200;
  AdamConfig adam;
  std::uint64_t seed = 0;  // batch shuffling
  int eval_every = 5;
};

struct CurvePoint {
  int epoch = 0;
  double value = 0.0;
};

struct TrainReport {
  std::vector<CurvePoint> validation;  // relative L2, epoch 0 and every eval_every epochs
  std::vector<double> train_loss;      // mean squared error after each epoch
  double best_validation_error = 0.0;
  int epochs = 0;
  std::uint64_t seed = 0;
  TrainConfig config;

  friend bool operator==(const TrainReport& a, const TrainReport& b);
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, TrainReport last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const TrainReport& last_good() const { return last_good_; }

 private:
  TrainReport last_good_;
};

// Per-parameter Adam state.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig config) : config_(config) {}
  void step(std::vector<Matrix*>& params, const std::vector<Matrix>& grads);

 private:
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long step_ = 0;
};

// Trainable matrices of the model in tape registration order (phi then psi).
std::vector<Matrix*> trainable_parameters(SumformerModel& model);

// Mean squared error of the model over the given samples together with its
// gradient with respect to trainable_parameters(model).
struct LossAndGradient {
  double loss = 0.0;
  std::vector<Matrix> gradients;
};
LossAndGradient loss_and_gradient(const SumformerModel& model, const std::vector<Matrix>& inputs,
                                  const std::vector<Matrix>& targets);

std::vector<Matrix> predict(const SumformerModel& model, const std::vector<Matrix>& inputs);

// Full training loop. Throws ContractError when nothing is trainable and
// DivergenceError when the loss becomes non-finite.
TrainReport train(SumformerModel& model, const Dataset& data, const TrainConfig& config);

// One (target, n, d, d', seed) experiment: dataset and MLP Sumformer
// (hidden x units per network) both seeded from `seed`. The trained model is
// moved into `trained` when given.
struct ExperimentConfig {
  Eigen::Index n = 3;
  Eigen::Index d = 2;
  Eigen::Index d_latent = 32;
  int points = 2000;
  double split_fraction = 0.8;
  int hidden_layers = 5;
  int hidden_units = 50;
  bool polynomial_phi = false;
  TrainConfig train;
};

TrainReport run_experiment(const TargetFunction& target, const ExperimentConfig& config,
                           std::uint64_t seed, SumformerModel* trained = nullptr);

struct SweepRow {
  Eigen::Index d = 0;
  Eigen::Index d_latent = 0;
  std::uint64_t seed = 0;
  double best_validation_error = 0.0;
  std::uint64_t dprime_formula = 0;  // C(n+d, d) - 1
};

// One row per (d, d', seed) in that key order. Cells may run on `threads`
// worker threads; results do not depend on the thread count.
std::vector<SweepRow> latent_sweep(const TargetFunction& target, const ExperimentConfig& base,
                                   const std::vector<Eigen::Index>& d_list,
                                   const std::vector<Eigen::Index>& dprime_list,
                                   const std::vector<std::uint64_t>& seeds, int threads = 1);

// CSV writers; doubles use 17 significant digits.
void write_curve_csv(std::ostream& os, const TrainReport& report);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace sumformer
