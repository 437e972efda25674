#pragma once

// Feed-forward network with standardized inputs and output, as deployed in
// a host code: affine layers with elementwise activations, a single linear
// output neuron, and the scalers needed to map physical units in and out.

#include "chfkit/matrix.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chfkit {

enum class Activation { elu, relu, softplus, sigmoid, tanh, identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

double activate(Activation a, double z);
/// Derivative with respect to the pre-activation z; `out` is activate(a, z).
double activate_derivative(Activation a, double z, double out);

/// One affine layer. Weights are stored input-major (in_dim x out_dim) so the
/// inner loop of the forward pass runs over contiguous outputs; the model
/// file uses the conventional row-major (out_dim x in_dim) order.
struct DenseLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weights; // weights[i * out_dim + o]
  std::vector<double> bias;    // out_dim
  Activation activation = Activation::identity;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out, Activation act)
      : in_dim(in), out_dim(out), weights(in * out, 0.0), bias(out, 0.0), activation(act) {}

  double& weight(std::size_t o, std::size_t i) { return weights[i * out_dim + o]; }
  double weight(std::size_t o, std::size_t i) const { return weights[i * out_dim + o]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Per-feature z-score transform.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> std;

  static Scaler identity(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)}; }

  std::size_t size() const noexcept { return mean.size(); }
  void transform(std::span<const double> in, std::span<double> out) const;
  void inverse(std::span<const double> in, std::span<double> out) const;
  double transform1(double v, std::size_t k = 0) const { return (v - mean[k]) / std[k]; }
  double inverse1(double z, std::size_t k = 0) const { return z * std[k] + mean[k]; }
  void validate(std::string_view what) const;

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

enum class ModelMode { direct, residual };
enum class BaseModel { none, biasi, bowring };

std::string_view to_string(ModelMode m);
std::string_view to_string(BaseModel b);
ModelMode mode_from_string(std::string_view s);
BaseModel base_model_from_string(std::string_view s);

struct Mlp {
  std::vector<DenseLayer> layers;
  Scaler input_scaler;
  Scaler output_scaler;
  std::vector<std::string> input_features;
  ModelMode mode = ModelMode::direct;
  BaseModel base_model = BaseModel::none;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
  std::size_t parameter_count() const;
  std::size_t max_width() const;
  std::vector<std::size_t> hidden_widths() const;

  /// Throws ValidationError naming the offending layer or field.
  void validate() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// The five heat-balance inputs every model consumes, in this order.
std::vector<std::string> default_feature_names();

/// Hidden widths of the deployed CHF networks.
inline const std::vector<std::size_t> kReferenceHiddenWidths = {44, 64, 41, 26, 67, 10, 17};

/// Builds a network with Glorot-uniform weights, zero biases, identity
/// scalers, and a linear single-neuron output.
Mlp make_mlp(std::size_t input_dim, std::span<const std::size_t> hidden, Activation hidden_activation,
             std::uint64_t seed);

/// Network output on already-standardized inputs, in standardized units.
double forward_standardized(const Mlp& m, std::span<const double> z);
/// Same, with caller-owned scratch buffers of at least max_width() each.
double forward_standardized(const Mlp& m, std::span<const double> z, std::vector<double>& a,
                            std::vector<double>& b);

/// Physical-units prediction for one raw feature vector.
double forward(const Mlp& m, std::span<const double> x);

/// Row-wise forward pass, parallelized over rows with OpenMP. Bit-identical
/// to calling forward() on every row.
std::vector<double> forward_batch(const Mlp& m, const Matrix& xs);

/// Single-threaded reference for forward_batch.
std::vector<double> forward_batch_serial(const Mlp& m, const Matrix& xs);

} // namespace chfkit
