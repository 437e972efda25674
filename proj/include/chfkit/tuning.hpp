#pragma once

// Scaled-down hyperparameter search: seeded random sampling of network
// shape and optimizer settings, pruned by successive halving over
// geometric epoch rungs.

#include "chfkit/mlp.hpp"
#include "chfkit/training.hpp"

#include <cstdint>
#include <vector>

namespace chfkit {

struct SearchSpace {
  int min_depth = 4;
  int max_depth = 8;
  int min_width = 10;
  int max_width = 70;
  std::vector<int> batch_sizes = {8, 16, 32, 64};
  double lr_min = 1e-4;
  double lr_max = 1e-2;
  std::vector<Activation> activations = {Activation::elu, Activation::relu, Activation::softplus,
                                         Activation::sigmoid, Activation::tanh};
};

struct Candidate {
  std::vector<std::size_t> hidden;
  Activation activation = Activation::tanh;
  int batch_size = 32;
  double lr0 = 1e-3;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Learning rates are drawn log-uniformly, widths independently per layer.
std::vector<Candidate> sample_candidates(const SearchSpace& space, int count, std::uint64_t seed);

struct TuneOptions {
  int min_epochs = 2;   // first rung
  int max_epochs = 54;  // last rung is capped here
  int reduction = 3;    // keep the best 1/reduction at each rung
  long budget = 0;      // total epochs over all candidates; 0 = unlimited
  double decay_rate = 0.99;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct RungRecord {
  int rung;
  std::size_t candidate;
  int epochs;
  double validation_loss;
};

struct TuneResult {
  std::size_t best_index = 0;
  Candidate best;
  TrainConfig best_config;
  double best_validation_loss = 0.0;
  std::vector<RungRecord> history;
  long epochs_used = 0;
};

/// Rung epoch counts implied by the options: min_epochs * reduction^k,
/// capped at max_epochs.
std::vector<int> rung_schedule(const TuneOptions& opts);

/// Successive halving over explicit candidates. The validation split is
/// carved from `data` with the options' seed. Survivors of a rung resume
/// training rather than restarting, which is equivalent to a fresh run of
/// the longer length. Disjoint candidates train concurrently.
TuneResult tune(const std::vector<Candidate>& candidates, const TrainData& data,
                const TuneOptions& opts);

/// Validation loss of every candidate trained for `epochs` (no pruning).
std::vector<double> exhaustive_validation_losses(const std::vector<Candidate>& candidates,
                                                 const TrainData& data, const TuneOptions& opts,
                                                 int epochs);

} // namespace chfkit
