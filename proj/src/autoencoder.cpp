#include "fedad/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedad/error.hpp"

namespace fedad {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::tanh:
      return std::tanh(z);
  }
  return z;
}

// Derivative expressed through pre-activation z and activation value y.
double activate_grad(Activation a, double z, double y) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh:
      return 1.0 - y * y;
  }
  return 1.0;
}

void add_bias(Matrix& z, const Vector& bias) {
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

void check_input(const ModelParams& params, const Matrix& batch) {
  if (params.layers.empty()) throw ConfigError("forward: model has no layers");
  if (batch.cols() != params.input_dim()) {
    throw ConfigError("forward: batch has " + std::to_string(batch.cols()) +
                      " columns, model expects " + std::to_string(params.input_dim()));
  }
}

template <typename F>
void for_each_tensor_pair(ModelParams& a, const ModelParams& b, F&& f) {
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    f(a.layers[l].weight.data(), b.layers[l].weight.data());
    f(std::span<double>(a.layers[l].bias), std::span<const double>(b.layers[l].bias));
  }
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + name + "' (expected relu or tanh)");
}

void ArchitectureSpec::validate() const {
  if (input_dim == 0) throw ConfigError("architecture: input_dim must be >= 1");
  if (encoder_ratios.empty()) throw ConfigError("architecture: encoder_ratios is empty");
  for (std::size_t i = 0; i < encoder_ratios.size(); ++i) {
    const double r = encoder_ratios[i];
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("architecture: ratios must lie in (0, 1]");
    if (i > 0 && !(r < encoder_ratios[i - 1])) {
      throw ConfigError("architecture: ratios must be strictly decreasing");
    }
  }
}

std::vector<std::size_t> ArchitectureSpec::layer_widths() const {
  validate();
  std::vector<std::size_t> enc;
  for (double r : encoder_ratios) {
    const double w = std::round(r * static_cast<double>(input_dim));
    enc.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(w)));
  }
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), enc.begin(), enc.end());
  widths.insert(widths.end(), enc.rbegin() + 1, enc.rend());
  widths.push_back(input_dim);
  return widths;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

bool ModelParams::same_shape(const ModelParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& a = layers[l];
    const auto& b = other.layers[l];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.bias.size() != b.bias.size()) {
      return false;
    }
  }
  return true;
}

Vector flatten(const ModelParams& params) {
  Vector out;
  out.reserve(params.parameter_count());
  for (const auto& l : params.layers) {
    auto w = l.weight.data();
    out.insert(out.end(), w.begin(), w.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

ModelParams unflatten(const ModelParams& shape, std::span<const double> values) {
  if (values.size() != shape.parameter_count()) {
    throw ConfigError("unflatten: expected " + std::to_string(shape.parameter_count()) +
                      " values, got " + std::to_string(values.size()));
  }
  ModelParams out = shape;
  std::size_t pos = 0;
  for (auto& l : out.layers) {
    auto w = l.weight.data();
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), w.size(), w.begin());
    pos += w.size();
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), l.bias.size(), l.bias.begin());
    pos += l.bias.size();
  }
  return out;
}

ModelParams zeros_like(const ModelParams& shape) {
  ModelParams out;
  out.hidden_activation = shape.hidden_activation;
  for (const auto& l : shape.layers) {
    out.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()), Vector(l.bias.size(), 0.0)});
  }
  return out;
}

ModelParams init_params(const ArchitectureSpec& spec, const RngStream& stream) {
  const auto widths = spec.layer_widths();
  Rng rng = stream.generator();
  ModelParams p;
  p.hidden_activation = spec.hidden_activation;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Layer layer{Matrix(out, in), Vector(out, 0.0)};
    for (double& w : layer.weight.data()) w = rng.uniform(-bound, bound);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

Matrix forward(const ModelParams& params, const Matrix& batch) {
  check_input(params, batch);
  Matrix a = batch;
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    Matrix z = matmul_nt(a, params.layers[l].weight);
    add_bias(z, params.layers[l].bias);
    if (l != last) {
      for (double& v : z.data()) v = activate(params.hidden_activation, v);
    }
    a = std::move(z);
  }
  return a;
}

MseResult mse(const Matrix& recon, const Matrix& batch) {
  if (recon.rows() != batch.rows() || recon.cols() != batch.cols()) {
    throw ConfigError("mse: shape mismatch");
  }
  MseResult r{Vector(batch.rows(), 0.0), 0.0};
  const double d = static_cast<double>(batch.cols());
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    auto x = batch.row(i);
    auto y = recon.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double e = y[j] - x[j];
      s += e * e;
    }
    r.per_sample[i] = batch.cols() == 0 ? 0.0 : s / d;
  }
  if (!r.per_sample.empty()) {
    r.mean = std::accumulate(r.per_sample.begin(), r.per_sample.end(), 0.0) /
             static_cast<double>(r.per_sample.size());
  }
  return r;
}

Vector reconstruction_errors(const ModelParams& params, const Matrix& samples) {
  return mse(forward(params, samples), samples).per_sample;
}

LossAndGradient loss_and_gradient(const ModelParams& params, const Matrix& batch) {
  check_input(params, batch);
  if (batch.rows() == 0) throw ConfigError("backward: empty batch");
  const std::size_t nl = params.layers.size();

  // acts[0] is the input; pre[l] is layer l's pre-activation.
  std::vector<Matrix> acts{batch};
  std::vector<Matrix> pre;
  acts.reserve(nl + 1);
  pre.reserve(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    Matrix z = matmul_nt(acts.back(), params.layers[l].weight);
    add_bias(z, params.layers[l].bias);
    Matrix a = z;
    if (l + 1 != nl) {
      for (double& v : a.data()) v = activate(params.hidden_activation, v);
    }
    pre.push_back(std::move(z));
    acts.push_back(std::move(a));
  }

  const Matrix& out = acts.back();
  const double scale = 2.0 / static_cast<double>(batch.rows() * batch.cols());
  Matrix delta(out.rows(), out.cols());
  double loss = 0.0;
  {
    auto o = out.data();
    auto x = batch.data();
    auto d = delta.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
      const double e = o[i] - x[i];
      loss += e * e;
      d[i] = scale * e;
    }
    loss /= static_cast<double>(o.size());
  }

  LossAndGradient res{loss, zeros_like(params)};
  for (std::size_t l = nl; l-- > 0;) {
    if (l + 1 != nl) {
      auto d = delta.data();
      auto z = pre[l].data();
      auto y = acts[l + 1].data();
      for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] *= activate_grad(params.hidden_activation, z[i], y[i]);
      }
    }
    Layer& g = res.gradient.layers[l];
    g.weight = matmul_tn(delta, acts[l]);
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      auto row = delta.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) g.bias[c] += row[c];
    }
    if (l > 0) delta = matmul(delta, params.layers[l].weight);
  }
  return res;
}

ModelParams backward(const ModelParams& params, const Matrix& batch) {
  return loss_and_gradient(params, batch).gradient;
}

OptimizerState make_optimizer(const ModelParams& params, const SgdHyperparams& hyper) {
  return {hyper, zeros_like(params)};
}

void sgd_step(ModelParams& params, const ModelParams& grad, OptimizerState& state) {
  if (!params.same_shape(grad) || !params.same_shape(state.buffers)) {
    throw ConfigError("sgd_step: parameter, gradient and buffer shapes differ");
  }
  const auto [lr, mom, wd] = state.hyper;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto step = [&](std::span<double> p, std::span<const double> g, std::span<double> buf) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = g[i] + wd * p[i];
        buf[i] = mom * buf[i] + gi;
        p[i] -= lr * buf[i];
      }
    };
    step(params.layers[l].weight.data(), grad.layers[l].weight.data(),
         state.buffers.layers[l].weight.data());
    step(params.layers[l].bias, grad.layers[l].bias, state.buffers.layers[l].bias);
  }
}

LossTrace train_epochs(ModelParams& params, const Matrix& data, std::size_t epochs,
                       std::size_t batch_size, OptimizerState& state, const RngStream& stream) {
  if (data.rows() == 0) throw ConfigError("train_epochs: empty training data");
  if (batch_size == 0) throw ConfigError("train_epochs: batch_size must be >= 1");
  LossTrace trace;
  trace.reserve(epochs);
  const std::size_t n = data.rows();
  for (std::size_t e = 0; e < epochs; ++e) {
    const auto order = rng_shuffle(stream.child(e), n);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t len = std::min(batch_size, n - start);
      const Matrix batch =
          data.select_rows(std::span<const std::size_t>(order.data() + start, len));
      auto lg = loss_and_gradient(params, batch);
      sgd_step(params, lg.gradient, state);
      loss_sum += lg.loss;
      ++batches;
    }
    trace.push_back(loss_sum / static_cast<double>(batches));
  }
  return trace;
}

}  // namespace fedad
