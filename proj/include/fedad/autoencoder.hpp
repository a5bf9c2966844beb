#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fedad/matrix.hpp"
#include "fedad/rng.hpp"

namespace fedad {

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

// Symmetric encoder/decoder layout. Widths are fractions of input_dim,
// rounded, never below 1. The output layer is always linear.
struct ArchitectureSpec {
  std::size_t input_dim = 0;
  std::vector<double> encoder_ratios{0.75, 0.50, 0.33, 0.25};
  Activation hidden_activation = Activation::relu;

  void validate() const;
  // input, encoder widths, mirrored decoder widths, input.
  std::vector<std::size_t> layer_widths() const;

  bool operator==(const ArchitectureSpec&) const = default;
};

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out

  bool operator==(const Layer&) const = default;
};

// Parameters of one autoencoder. Also used for gradients and momentum buffers.
// Flattening order: layer by layer, weights (row-major) then bias.
struct ModelParams {
  std::vector<Layer> layers;
  Activation hidden_activation = Activation::relu;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
  std::size_t parameter_count() const;
  bool same_shape(const ModelParams& other) const;

  bool operator==(const ModelParams&) const = default;
};

Vector flatten(const ModelParams& params);
// Inverse of flatten; `shape` supplies layer shapes and activation.
ModelParams unflatten(const ModelParams& shape, std::span<const double> values);
ModelParams zeros_like(const ModelParams& shape);

ModelParams init_params(const ArchitectureSpec& spec, const RngStream& stream);

Matrix forward(const ModelParams& params, const Matrix& batch);

struct MseResult {
  Vector per_sample;
  double mean = 0.0;
};
MseResult mse(const Matrix& recon, const Matrix& batch);

// Per-sample reconstruction MSE of `samples` under `params`.
Vector reconstruction_errors(const ModelParams& params, const Matrix& samples);

struct LossAndGradient {
  double loss = 0.0;
  ModelParams gradient;
};
// Mean-MSE loss over the batch and its exact gradient (no weight decay).
LossAndGradient loss_and_gradient(const ModelParams& params, const Matrix& batch);
ModelParams backward(const ModelParams& params, const Matrix& batch);

struct SgdHyperparams {
  double learning_rate = 0.012;
  double momentum = 0.9;
  double weight_decay = 1e-5;
};

struct OptimizerState {
  SgdHyperparams hyper;
  ModelParams buffers;
};

OptimizerState make_optimizer(const ModelParams& params, const SgdHyperparams& hyper);

// g = grad + wd*p; buf = momentum*buf + g; p -= lr*buf
void sgd_step(ModelParams& params, const ModelParams& grad, OptimizerState& state);

// Per-epoch mean of the batch losses seen during that epoch.
using LossTrace = std::vector<double>;

// Shuffles rows each epoch from stream.child(epoch); trains on full batches,
// then one trailing partial batch if any.
LossTrace train_epochs(ModelParams& params, const Matrix& data, std::size_t epochs,
                       std::size_t batch_size, OptimizerState& state, const RngStream& stream);

}  // namespace fedad
