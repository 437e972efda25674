#include "chfkit/tuning.hpp"

#include "chfkit/errors.hpp"
#include "chfkit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>

namespace chfkit {

std::vector<Candidate> sample_candidates(const SearchSpace& space, int count, std::uint64_t seed) {
  if (space.min_depth < 1 || space.max_depth < space.min_depth || space.min_width < 1 ||
      space.max_width < space.min_width || space.batch_sizes.empty() || space.activations.empty() ||
      !(space.lr_min > 0.0) || space.lr_max < space.lr_min) {
    throw ValidationError("invalid search space");
  }
  Rng rng(seed);
  auto pick_int = [&](int lo, int hi) {
    return lo + static_cast<int>(rng.index(static_cast<std::uint64_t>(hi - lo + 1)));
  };
  std::vector<Candidate> out;
  for (int k = 0; k < count; ++k) {
    Candidate c;
    const int depth = pick_int(space.min_depth, space.max_depth);
    for (int d = 0; d < depth; ++d) {
      c.hidden.push_back(static_cast<std::size_t>(pick_int(space.min_width, space.max_width)));
    }
    c.activation = space.activations[rng.index(space.activations.size())];
    c.batch_size = space.batch_sizes[rng.index(space.batch_sizes.size())];
    c.lr0 = std::exp(rng.uniform(std::log(space.lr_min), std::log(space.lr_max)));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<int> rung_schedule(const TuneOptions& opts) {
  if (opts.min_epochs < 1 || opts.max_epochs < opts.min_epochs || opts.reduction < 2) {
    throw ValidationError("invalid rung schedule: need 1 <= min_epochs <= max_epochs, reduction >= 2");
  }
  std::vector<int> rungs;
  long e = opts.min_epochs;
  while (e < opts.max_epochs) {
    rungs.push_back(static_cast<int>(e));
    e *= opts.reduction;
  }
  rungs.push_back(opts.max_epochs);
  return rungs;
}

namespace {

struct Split {
  TrainData train;
  TrainData validation;
};

Split carve_validation(const TrainData& data, double fraction, std::uint64_t seed) {
  const std::size_t n = data.size();
  const auto n_val = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (n_val < 1 || n_val >= n) {
    throw ValidationError("tuning needs at least one training and one validation row");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  Split s;
  for (std::size_t k = 0; k < n; ++k) {
    auto& dst = k < n - n_val ? s.train : s.validation;
    dst.x.append_row(data.x.row(idx[k]));
    dst.y.push_back(data.y[idx[k]]);
  }
  return s;
}

std::unique_ptr<Trainer> make_trainer(const Candidate& c, std::size_t input_dim,
                                      const TuneOptions& opts, std::size_t index, int epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = c.batch_size;
  cfg.lr0 = c.lr0;
  cfg.decay_rate = opts.decay_rate;
  cfg.seed = opts.seed + 1000003ULL * (index + 1);
  auto m = make_mlp(input_dim, c.hidden, c.activation, cfg.seed);
  return std::make_unique<Trainer>(std::move(m), cfg);
}

TrainConfig config_for(const Candidate& c, const TuneOptions& opts, int epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = c.batch_size;
  cfg.lr0 = c.lr0;
  cfg.decay_rate = opts.decay_rate;
  cfg.seed = opts.seed;
  return cfg;
}

// Diverged runs score as +infinity so they are pruned, not fatal.
double score(Trainer& t, const TrainData& train, const TrainData& val, int epochs) {
  try {
    t.run(train, epochs - t.epochs_done());
    const double loss = mean_squared_error(t.model(), val);
    return std::isfinite(loss) ? loss : INFINITY;
  } catch (const TrainingDiverged&) {
    return INFINITY;
  }
}

} // namespace

TuneResult tune(const std::vector<Candidate>& candidates, const TrainData& data,
                const TuneOptions& opts) {
  if (candidates.empty()) throw ValidationError("no candidates to tune");
  const auto rungs = rung_schedule(opts);
  const long first_cost = static_cast<long>(candidates.size()) * rungs.front();
  if (opts.budget > 0 && opts.budget < first_cost) {
    std::ostringstream os;
    os << "tuning budget of " << opts.budget << " epochs is below one rung (" << candidates.size()
       << " candidates x " << rungs.front() << " epochs = " << first_cost << ")";
    throw ValidationError(os.str());
  }
  const auto split = carve_validation(data, opts.validation_fraction, opts.seed);
  const std::size_t input_dim = data.x.cols();

  std::vector<std::unique_ptr<Trainer>> trainers(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    trainers[c] = make_trainer(candidates[c], input_dim, opts, c, rungs.back());
  }

  TuneResult result;
  std::vector<std::size_t> alive(candidates.size());
  std::iota(alive.begin(), alive.end(), std::size_t{0});
  std::vector<double> losses(candidates.size(), INFINITY);
  int prev_epochs = 0;
  for (std::size_t r = 0; r < rungs.size(); ++r) {
    const int epochs = rungs[r];
    const long cost = static_cast<long>(alive.size()) * (epochs - prev_epochs);
    if (r > 0 && opts.budget > 0 && result.epochs_used + cost > opts.budget) break;

    const auto n_alive = static_cast<std::ptrdiff_t>(alive.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n_alive; ++k) {
      const std::size_t c = alive[static_cast<std::size_t>(k)];
      losses[c] = score(*trainers[c], split.train, split.validation, epochs);
    }
    result.epochs_used += cost;
    prev_epochs = epochs;
    for (std::size_t c : alive) {
      result.history.push_back({static_cast<int>(r), c, epochs, losses[c]});
    }
    // Stable ordering: ties go to the lower candidate index.
    std::stable_sort(alive.begin(), alive.end(),
                     [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
    result.best_index = alive.front();
    result.best_validation_loss = losses[alive.front()];
    if (alive.size() == 1) break;
    const std::size_t keep =
        std::max<std::size_t>(1, alive.size() / static_cast<std::size_t>(opts.reduction));
    alive.resize(keep);
  }
  result.best = candidates[result.best_index];
  result.best_config = config_for(result.best, opts, rungs.back());
  return result;
}

std::vector<double> exhaustive_validation_losses(const std::vector<Candidate>& candidates,
                                                 const TrainData& data, const TuneOptions& opts,
                                                 int epochs) {
  const auto split = carve_validation(data, opts.validation_fraction, opts.seed);
  std::vector<double> losses(candidates.size());
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    auto t = make_trainer(candidates[static_cast<std::size_t>(c)], data.x.cols(), opts,
                          static_cast<std::size_t>(c), epochs);
    losses[static_cast<std::size_t>(c)] = score(*t, split.train, split.validation, epochs);
  }
  return losses;
}

} // namespace chfkit
