#include "chfkit/mlp.hpp"

#include "chfkit/errors.hpp"
#include "chfkit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace chfkit {

std::string_view to_string(Activation a) {
  switch (a) {
  case Activation::elu: return "elu";
  case Activation::relu: return "relu";
  case Activation::softplus: return "softplus";
  case Activation::sigmoid: return "sigmoid";
  case Activation::tanh: return "tanh";
  case Activation::identity: return "identity";
  }
  return "?";
}

Activation activation_from_string(std::string_view name) {
  for (auto a : {Activation::elu, Activation::relu, Activation::softplus, Activation::sigmoid,
                 Activation::tanh, Activation::identity}) {
    if (to_string(a) == name) return a;
  }
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

namespace {

// tanh from exp/expm1, within a few ulp of std::tanh and about twice as
// fast with glibc. expm1 covers small |z| where 1 - e would cancel.
double tanh_exp(double z) {
  const double a = std::abs(z);
  double r;
  if (a < 0.55) {
    const double t = std::expm1(2.0 * a);
    r = t / (t + 2.0);
  } else {
    const double e = std::exp(-2.0 * a);
    r = (1.0 - e) / (1.0 + e);
  }
  return std::copysign(r, z);
}

} // namespace

double activate(Activation a, double z) {
  switch (a) {
  case Activation::elu: return z > 0.0 ? z : std::expm1(z);
  case Activation::relu: return z > 0.0 ? z : 0.0;
  case Activation::softplus: return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
  case Activation::sigmoid:
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    else {
      const double e = std::exp(z);
      return e / (1.0 + e);
    }
  case Activation::tanh: return tanh_exp(z);
  case Activation::identity: return z;
  }
  return z;
}

double activate_derivative(Activation a, double z, double out) {
  switch (a) {
  case Activation::elu: return z > 0.0 ? 1.0 : out + 1.0;
  case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
  case Activation::softplus: return activate(Activation::sigmoid, z);
  case Activation::sigmoid: return out * (1.0 - out);
  case Activation::tanh: return 1.0 - out * out;
  case Activation::identity: return 1.0;
  }
  return 1.0;
}

void Scaler::transform(std::span<const double> in, std::span<double> out) const {
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = (in[k] - mean[k]) / std[k];
}

void Scaler::inverse(std::span<const double> in, std::span<double> out) const {
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] * std[k] + mean[k];
}

void Scaler::validate(std::string_view what) const {
  if (mean.size() != std.size()) {
    throw ValidationError(std::string(what) + ": mean and std lengths differ");
  }
  for (std::size_t k = 0; k < std.size(); ++k) {
    if (!std::isfinite(mean[k]) || !std::isfinite(std[k]) || !(std[k] > 0.0)) {
      std::ostringstream os;
      os << what << ": component " << k << " needs finite mean and positive std";
      throw ValidationError(os.str());
    }
  }
}

std::string_view to_string(ModelMode m) { return m == ModelMode::direct ? "direct" : "residual"; }

std::string_view to_string(BaseModel b) {
  switch (b) {
  case BaseModel::none: return "none";
  case BaseModel::biasi: return "biasi";
  case BaseModel::bowring: return "bowring";
  }
  return "?";
}

ModelMode mode_from_string(std::string_view s) {
  if (s == "direct") return ModelMode::direct;
  if (s == "residual") return ModelMode::residual;
  throw ValidationError("unknown model mode '" + std::string(s) + "'");
}

BaseModel base_model_from_string(std::string_view s) {
  if (s == "none") return BaseModel::none;
  if (s == "biasi") return BaseModel::biasi;
  if (s == "bowring") return BaseModel::bowring;
  throw ValidationError("unknown base model '" + std::string(s) + "'");
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

std::size_t Mlp::max_width() const {
  std::size_t w = input_dim();
  for (const auto& l : layers) w = std::max(w, l.out_dim);
  return w;
}

std::vector<std::size_t> Mlp::hidden_widths() const {
  std::vector<std::size_t> w;
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) w.push_back(layers[k].out_dim);
  return w;
}

void Mlp::validate() const {
  if (layers.empty()) throw ValidationError("model has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    std::ostringstream os;
    os << "layer " << k << ": ";
    if (l.in_dim == 0 || l.out_dim == 0) throw ValidationError(os.str() + "zero dimension");
    if (l.weights.size() != l.in_dim * l.out_dim) {
      os << "weight count " << l.weights.size() << " does not match " << l.out_dim << " x "
         << l.in_dim;
      throw ValidationError(os.str());
    }
    if (l.bias.size() != l.out_dim) {
      os << "bias length " << l.bias.size() << " does not match " << l.out_dim << " output rows";
      throw ValidationError(os.str());
    }
    if (k > 0 && layers[k - 1].out_dim != l.in_dim) {
      os << "input width " << l.in_dim << " does not chain from previous output width "
         << layers[k - 1].out_dim;
      throw ValidationError(os.str());
    }
    for (double w : l.weights) {
      if (!std::isfinite(w)) throw ValidationError(os.str() + "non-finite weight");
    }
    for (double b : l.bias) {
      if (!std::isfinite(b)) throw ValidationError(os.str() + "non-finite bias");
    }
  }
  const auto& last = layers.back();
  if (last.out_dim != 1 || last.activation != Activation::identity) {
    throw ValidationError("output layer must be a single identity neuron");
  }
  input_scaler.validate("input scaler");
  output_scaler.validate("output scaler");
  if (input_scaler.size() != input_dim()) {
    throw ValidationError("input scaler width does not match the first layer");
  }
  if (output_scaler.size() != 1) throw ValidationError("output scaler must be scalar");
  if (input_features.size() != input_dim()) {
    throw ValidationError("feature name count does not match the first layer");
  }
  if ((mode == ModelMode::residual) != (base_model != BaseModel::none)) {
    throw ValidationError("residual mode requires a base model and direct mode forbids one");
  }
}

std::vector<std::string> default_feature_names() {
  return {"D_m", "L_m", "P_Pa", "G_kg_m2s", "dh_sub_J_kg"};
}

Mlp make_mlp(std::size_t input_dim, std::span<const std::size_t> hidden, Activation hidden_activation,
             std::uint64_t seed) {
  Rng rng(seed);
  Mlp m;
  std::size_t in = input_dim;
  auto add = [&](std::size_t out, Activation act) {
    DenseLayer l(in, out, act);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (auto& w : l.weights) w = rng.uniform(-limit, limit);
    m.layers.push_back(std::move(l));
    in = out;
  };
  for (std::size_t w : hidden) add(w, hidden_activation);
  add(1, Activation::identity);
  m.input_scaler = Scaler::identity(input_dim);
  m.output_scaler = Scaler::identity(1);
  m.input_features = default_feature_names();
  if (m.input_features.size() != input_dim) {
    m.input_features.clear();
    for (std::size_t k = 0; k < input_dim; ++k) m.input_features.push_back("x" + std::to_string(k));
  }
  return m;
}

namespace {

// a_out = act(b + W^T a_in); the inner loop is a contiguous axpy so it
// vectorizes without reassociating any sum.
void layer_forward(const DenseLayer& l, const double* in, double* out) {
  std::copy(l.bias.begin(), l.bias.end(), out);
  const double* w = l.weights.data();
  for (std::size_t i = 0; i < l.in_dim; ++i) {
    const double a = in[i];
    const double* wi = w + i * l.out_dim;
    for (std::size_t o = 0; o < l.out_dim; ++o) out[o] += wi[o] * a;
  }
  if (l.activation != Activation::identity) {
    for (std::size_t o = 0; o < l.out_dim; ++o) out[o] = activate(l.activation, out[o]);
  }
}

double forward_into(const Mlp& m, std::span<const double> z, std::vector<double>& a,
                    std::vector<double>& b) {
  std::copy(z.begin(), z.end(), a.begin());
  for (const auto& l : m.layers) {
    layer_forward(l, a.data(), b.data());
    std::swap(a, b);
  }
  return a[0];
}

void check_input(const Mlp& m, std::span<const double> x) {
  if (x.size() != m.input_dim()) {
    std::ostringstream os;
    os << "input has " << x.size() << " features, model expects " << m.input_dim();
    throw ValidationError(os.str());
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k])) {
      throw ValidationError("non-finite input feature " + std::to_string(k));
    }
  }
}

double forward_raw(const Mlp& m, std::span<const double> x, std::vector<double>& z,
                   std::vector<double>& a, std::vector<double>& b) {
  check_input(m, x);
  m.input_scaler.transform(x, z);
  return m.output_scaler.inverse1(forward_into(m, z, a, b));
}

} // namespace

double forward_standardized(const Mlp& m, std::span<const double> z) {
  std::vector<double> a(m.max_width()), b(m.max_width());
  return forward_into(m, z, a, b);
}

double forward_standardized(const Mlp& m, std::span<const double> z, std::vector<double>& a,
                            std::vector<double>& b) {
  return forward_into(m, z, a, b);
}

double forward(const Mlp& m, std::span<const double> x) {
  std::vector<double> z(x.size()), a(m.max_width()), b(m.max_width());
  return forward_raw(m, x, z, a, b);
}

namespace {

constexpr std::size_t kBlock = 16;

// Forward pass for up to kBlock rows at once. Each weight row is reused
// across the block while it sits in L1; per output element the summation
// order (bias, then inputs in ascending order) is the same as
// layer_forward, so results are bit-identical to forward().
__attribute__((target_clones("avx2", "default"))) void forward_block(const Mlp& m, const Matrix& xs, std::size_t first, std::size_t count,
                   std::vector<double>& a, std::vector<double>& b, double* out) {
  const std::size_t width = m.max_width();
  for (std::size_t s = 0; s < count; ++s) {
    m.input_scaler.transform(xs.row(first + s), {a.data() + s * width, xs.cols()});
  }
  for (const auto& l : m.layers) {
    for (std::size_t s = 0; s < count; ++s) {
      std::copy(l.bias.begin(), l.bias.end(), b.data() + s * width);
    }
    for (std::size_t i = 0; i < l.in_dim; ++i) {
      const double* __restrict wi = l.weights.data() + i * l.out_dim;
      for (std::size_t s = 0; s < count; ++s) {
        const double v = a[s * width + i];
        double* __restrict dst = b.data() + s * width;
        for (std::size_t o = 0; o < l.out_dim; ++o) dst[o] += wi[o] * v;
      }
    }
    if (l.activation != Activation::identity) {
      for (std::size_t s = 0; s < count; ++s) {
        double* dst = b.data() + s * width;
        for (std::size_t o = 0; o < l.out_dim; ++o) dst[o] = activate(l.activation, dst[o]);
      }
    }
    std::swap(a, b);
  }
  for (std::size_t s = 0; s < count; ++s) out[s] = m.output_scaler.inverse1(a[s * width]);
}

} // namespace

std::vector<double> forward_batch(const Mlp& m, const Matrix& xs) {
  std::vector<double> out(xs.rows());
  for (std::size_t r = 0; r < xs.rows(); ++r) check_input(m, xs.row(r));
  const auto blocks = static_cast<std::ptrdiff_t>((xs.rows() + kBlock - 1) / kBlock);
#pragma omp parallel
  {
    std::vector<double> a(kBlock * m.max_width()), b(kBlock * m.max_width());
#pragma omp for schedule(static)
    for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
      const std::size_t first = static_cast<std::size_t>(blk) * kBlock;
      const std::size_t count = std::min(kBlock, xs.rows() - first);
      forward_block(m, xs, first, count, a, b, out.data() + first);
    }
  }
  return out;
}

std::vector<double> forward_batch_serial(const Mlp& m, const Matrix& xs) {
  std::vector<double> out(xs.rows());
  std::vector<double> z(xs.cols()), a(m.max_width()), b(m.max_width());
  for (std::size_t r = 0; r < xs.rows(); ++r) out[r] = forward_raw(m, xs.row(r), z, a, b);
  return out;
}

} // namespace chfkit
