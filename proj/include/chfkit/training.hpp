#pragma once

// Mini-batch training of an Mlp on standardized data: mean-square-error
// loss, Adam with bias correction, per-epoch exponential learning-rate
// decay, and seeded shuffling. Everything is deterministic given the seed.

#include "chfkit/matrix.hpp"
#include "chfkit/mlp.hpp"
#include "chfkit/rng.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace chfkit {

struct TrainConfig {
  int epochs = 500;
  int batch_size = 32;
  double lr0 = 1e-3;
  double decay_rate = 0.99; // lr at epoch e is lr0 * decay_rate^e
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// Standardized inputs (rows are samples) and standardized targets.
struct TrainData {
  Matrix x;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
};

class TrainingDiverged : public std::runtime_error {
public:
  TrainingDiverged(const std::string& what, int epoch, std::size_t batch, double lr)
      : std::runtime_error(what), epoch(epoch), batch(batch), lr(lr) {}
  int epoch;
  std::size_t batch;
  double lr;
};

/// Per-parameter gradients laid out like the layers they belong to.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;

  static Gradients zeros_like(const Mlp& m);
};

/// Scratch buffers for one backward pass.
struct BackpropWorkspace {
  explicit BackpropWorkspace(const Mlp& m);
  std::vector<std::vector<double>> acts, pre;
  std::vector<double> delta, prev;
};

/// Accumulates scale * d/dtheta (f(x) - y)^2 into grads and returns the
/// squared error. x is standardized; f is the network without scalers.
double accumulate_gradients(const Mlp& m, std::span<const double> x, double y, double scale,
                            Gradients& grads);
double accumulate_gradients(const Mlp& m, std::span<const double> x, double y, double scale,
                            Gradients& grads, BackpropWorkspace& ws);

/// Mean squared error of the network (standardized units) over a data set.
double mean_squared_error(const Mlp& m, const TrainData& data);

/// Resumable training state. Running e1 epochs and then e2 more epochs
/// gives exactly the same network as running e1 + e2 epochs in one go.
class Trainer {
public:
  Trainer(Mlp initial, TrainConfig cfg);

  /// Runs one epoch and returns the post-epoch training MSE.
  double run_epoch(const TrainData& data);
  void run(const TrainData& data, int epochs);

  const Mlp& model() const { return model_; }
  Mlp release() { return std::move(model_); }
  int epochs_done() const { return epoch_; }
  const std::vector<double>& loss_trace() const { return trace_; }
  double learning_rate() const;

private:
  Mlp model_;
  TrainConfig cfg_;
  Rng rng_;
  BackpropWorkspace ws_;
  Gradients m1_, m2_, grad_;
  std::vector<std::size_t> order_;
  long step_ = 0;
  int epoch_ = 0;
  std::vector<double> trace_;
};

struct TrainResult {
  Mlp model;
  std::vector<double> loss_trace;
};

TrainResult train(const Mlp& initial, const TrainData& data, const TrainConfig& cfg);

/// Largest |analytic - central difference| / max(1, |analytic|, |numeric|)
/// over all parameters for the single-sample loss (f(x) - y)^2.
double gradient_check(const Mlp& m, std::span<const double> x, double y, double step = 1e-5);

/// Smallest |pre-activation| over all hidden neurons for one input; relu
/// gradients are only checkable when this exceeds the difference step.
double min_abs_preactivation(const Mlp& m, std::span<const double> x);

} // namespace chfkit
