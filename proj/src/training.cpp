#include "chfkit/training.hpp"

#include "chfkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace chfkit {

void TrainConfig::validate() const {
  std::ostringstream os;
  if (epochs < 1 || epochs > 100000) os << "epochs must be in [1, 100000]; ";
  if (batch_size < 1) os << "batch_size must be >= 1; ";
  if (!(lr0 >= 0.0) || !std::isfinite(lr0)) os << "lr0 must be finite and >= 0; ";
  if (!(decay_rate > 0.0 && decay_rate <= 1.0)) os << "decay_rate must be in (0, 1]; ";
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) os << "Adam betas must be in [0, 1); ";
  if (!(epsilon > 0.0)) os << "epsilon must be > 0; ";
  if (!os.str().empty()) throw ValidationError("invalid training config: " + os.str());
}

Gradients Gradients::zeros_like(const Mlp& m) {
  Gradients g;
  for (const auto& l : m.layers) {
    g.weights.emplace_back(l.weights.size(), 0.0);
    g.bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

namespace {

void fill_zero(Gradients& g) {
  for (auto& w : g.weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : g.bias) std::fill(b.begin(), b.end(), 0.0);
}

} // namespace

BackpropWorkspace::BackpropWorkspace(const Mlp& m) {
  acts.emplace_back(m.input_dim());
  for (const auto& l : m.layers) {
    pre.emplace_back(l.out_dim);
    acts.emplace_back(l.out_dim);
  }
  delta.resize(m.max_width());
  prev.resize(m.max_width());
}

double accumulate_gradients(const Mlp& m, std::span<const double> x, double y, double scale,
                            Gradients& grads, BackpropWorkspace& ws) {
  const std::size_t n_layers = m.layers.size();
  // acts[0] is the input; acts[k+1] and pre[k] belong to layer k.
  std::copy(x.begin(), x.end(), ws.acts[0].begin());
  for (std::size_t k = 0; k < n_layers; ++k) {
    const auto& l = m.layers[k];
    auto& z = ws.pre[k];
    std::copy(l.bias.begin(), l.bias.end(), z.begin());
    for (std::size_t i = 0; i < l.in_dim; ++i) {
      const double a = ws.acts[k][i];
      const double* wi = l.weights.data() + i * l.out_dim;
      for (std::size_t o = 0; o < l.out_dim; ++o) z[o] += wi[o] * a;
    }
    for (std::size_t o = 0; o < l.out_dim; ++o) ws.acts[k + 1][o] = activate(l.activation, z[o]);
  }
  const double err = ws.acts[n_layers][0] - y;
  ws.delta[0] = 2.0 * err * scale;
  for (std::size_t k = n_layers; k-- > 0;) {
    const auto& l = m.layers[k];
    for (std::size_t o = 0; o < l.out_dim; ++o) {
      ws.delta[o] *= activate_derivative(l.activation, ws.pre[k][o], ws.acts[k + 1][o]);
    }
    auto& gw = grads.weights[k];
    auto& gb = grads.bias[k];
    for (std::size_t o = 0; o < l.out_dim; ++o) gb[o] += ws.delta[o];
    for (std::size_t i = 0; i < l.in_dim; ++i) {
      const double a = ws.acts[k][i];
      const double* wi = l.weights.data() + i * l.out_dim;
      double* gi = gw.data() + i * l.out_dim;
      double s = 0.0;
      for (std::size_t o = 0; o < l.out_dim; ++o) {
        gi[o] += a * ws.delta[o];
        s += wi[o] * ws.delta[o];
      }
      ws.prev[i] = s;
    }
    std::swap(ws.delta, ws.prev);
  }
  return err * err;
}

double accumulate_gradients(const Mlp& m, std::span<const double> x, double y, double scale,
                            Gradients& grads) {
  BackpropWorkspace ws(m);
  return accumulate_gradients(m, x, y, scale, grads, ws);
}

double mean_squared_error(const Mlp& m, const TrainData& data) {
  if (data.size() == 0) return 0.0;
  std::vector<double> a(m.max_width()), b(m.max_width());
  double sum = 0.0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const double e = forward_standardized(m, data.x.row(r), a, b) - data.y[r];
    sum += e * e;
  }
  return sum / static_cast<double>(data.size());
}

Trainer::Trainer(Mlp initial, TrainConfig cfg)
    : model_(std::move(initial)), cfg_(cfg), rng_(cfg.seed), ws_(model_) {
  cfg_.validate();
  model_.validate();
  m1_ = Gradients::zeros_like(model_);
  m2_ = Gradients::zeros_like(model_);
  grad_ = Gradients::zeros_like(model_);
}

double Trainer::learning_rate() const { return cfg_.lr0 * std::pow(cfg_.decay_rate, epoch_); }

double Trainer::run_epoch(const TrainData& data) {
  if (data.size() == 0) throw ValidationError("training data is empty");
  if (data.x.cols() != model_.input_dim() || data.x.rows() != data.size()) {
    throw ValidationError("training data dimensions do not match the model");
  }
  if (order_.size() != data.size()) {
    order_.resize(data.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }
  rng_.shuffle(std::span<std::size_t>(order_));

  const double lr = learning_rate();
  const std::size_t bs = static_cast<std::size_t>(cfg_.batch_size);
  const std::size_t n = data.size();
  for (std::size_t start = 0, batch = 0; start < n; start += bs, ++batch) {
    const std::size_t end = std::min(n, start + bs);
    const double scale = 1.0 / static_cast<double>(end - start);
    fill_zero(grad_);
    double loss = 0.0;
    for (std::size_t j = start; j < end; ++j) {
      const std::size_t r = order_[j];
      loss += accumulate_gradients(model_, data.x.row(r), data.y[r], scale, grad_, ws_);
    }
    loss *= scale;
    if (!std::isfinite(loss)) {
      std::ostringstream os;
      os << "training diverged: non-finite loss at epoch " << epoch_ << ", batch " << batch
         << ", learning rate " << lr;
      throw TrainingDiverged(os.str(), epoch_, batch, lr);
    }
    ++step_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    auto update = [&](std::vector<double>& param, std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
      for (std::size_t p = 0; p < param.size(); ++p) {
        m[p] = cfg_.beta1 * m[p] + (1.0 - cfg_.beta1) * g[p];
        v[p] = cfg_.beta2 * v[p] + (1.0 - cfg_.beta2) * g[p] * g[p];
        const double mhat = m[p] / c1;
        const double vhat = v[p] / c2;
        param[p] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      }
    };
    for (std::size_t k = 0; k < model_.layers.size(); ++k) {
      auto& l = model_.layers[k];
      update(l.weights, grad_.weights[k], m1_.weights[k], m2_.weights[k]);
      update(l.bias, grad_.bias[k], m1_.bias[k], m2_.bias[k]);
    }
  }
  ++epoch_;
  const double mse = mean_squared_error(model_, data);
  if (!std::isfinite(mse)) {
    std::ostringstream os;
    os << "training diverged: non-finite epoch loss after epoch " << epoch_ - 1
       << ", learning rate " << lr;
    throw TrainingDiverged(os.str(), epoch_ - 1, (n + bs - 1) / bs, lr);
  }
  trace_.push_back(mse);
  return mse;
}

void Trainer::run(const TrainData& data, int epochs) {
  for (int e = 0; e < epochs; ++e) run_epoch(data);
}

TrainResult train(const Mlp& initial, const TrainData& data, const TrainConfig& cfg) {
  Trainer t(initial, cfg);
  t.run(data, cfg.epochs);
  TrainResult r;
  r.loss_trace = t.loss_trace();
  r.model = t.release();
  return r;
}

double gradient_check(const Mlp& m, std::span<const double> x, double y, double step) {
  auto g = Gradients::zeros_like(m);
  accumulate_gradients(m, x, y, 1.0, g);
  Mlp probe = m;
  auto loss = [&] {
    const double e = forward_standardized(probe, x) - y;
    return e * e;
  };
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + step;
    const double up = loss();
    param = saved - step;
    const double down = loss();
    param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  for (std::size_t k = 0; k < probe.layers.size(); ++k) {
    auto& l = probe.layers[k];
    for (std::size_t p = 0; p < l.weights.size(); ++p) check(l.weights[p], g.weights[k][p]);
    for (std::size_t p = 0; p < l.bias.size(); ++p) check(l.bias[p], g.bias[k][p]);
  }
  return worst;
}

double min_abs_preactivation(const Mlp& m, std::span<const double> x) {
  std::vector<double> a(x.begin(), x.end()), z;
  double smallest = INFINITY;
  for (std::size_t k = 0; k + 1 < m.layers.size(); ++k) {
    const auto& l = m.layers[k];
    z.assign(l.bias.begin(), l.bias.end());
    for (std::size_t i = 0; i < l.in_dim; ++i) {
      for (std::size_t o = 0; o < l.out_dim; ++o) z[o] += l.weight(o, i) * a[i];
    }
    a.resize(l.out_dim);
    for (std::size_t o = 0; o < l.out_dim; ++o) {
      smallest = std::min(smallest, std::abs(z[o]));
      a[o] = activate(l.activation, z[o]);
    }
  }
  return smallest;
}

} // namespace chfkit
