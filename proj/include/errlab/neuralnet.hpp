// A from-scratch feed-forward network trained by mini-batch SGD with early
// stopping on a validation split. Dense layers only, squared-error loss,
// exact backpropagation gradients.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "errlab/errors.hpp"
#include "errlab/prepare.hpp"
#include "errlab/rng.hpp"

namespace errlab {

enum class Activation { identity, relu, sigmoid, tanh_fn };

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh_fn: return "tanh";
  }
  throw DomainError("activation_name: bad enum");
}

inline Activation activation_from(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh_fn;
  throw DomainError("unknown activation: " + s);
}

inline double activate(Activation a, double v) {
  switch (a) {
    case Activation::identity: return v;
    case Activation::relu: return v > 0.0 ? v : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-v));
    case Activation::tanh_fn: return std::tanh(v);
  }
  return v;
}

// Derivative expressed through the activation value, which every supported
// function allows.
inline double activate_grad(Activation a, double value) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return value > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return value * (1.0 - value);
    case Activation::tanh_fn: return 1.0 - value * value;
  }
  return 1.0;
}

// Layer widths from input to the single output, with one activation per
// non-input layer. Continuous outcomes require an identity output layer.
struct Architecture {
  std::vector<std::size_t> layers;
  std::vector<Activation> activations;

  std::size_t depth() const { return layers.size(); }

  void validate() const {
    if (layers.size() < 2) throw DomainError("Architecture: need input and output layers");
    for (std::size_t w : layers)
      if (w == 0) throw DomainError("Architecture: zero-width layer");
    if (activations.size() != layers.size() - 1)
      throw LengthMismatch("Architecture: one activation per non-input layer");
    if (layers.back() != 1)
      throw DomainError("Architecture: a single output unit is required");
    if (activations.back() != Activation::identity)
      throw DomainError("Architecture: continuous outcomes need an identity output");
  }

  static Architecture mlp(std::size_t inputs, const std::vector<std::size_t>& hidden,
                          Activation hidden_act) {
    Architecture a;
    a.layers.push_back(inputs);
    for (std::size_t h : hidden) a.layers.push_back(h);
    a.layers.push_back(1);
    a.activations.assign(hidden.size(), hidden_act);
    a.activations.push_back(Activation::identity);
    a.validate();
    return a;
  }
};

// weights[l] has layers[l+1] rows by layers[l] columns; biases[l] matches the
// destination layer.
struct MLP {
  Architecture arch;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

// Glorot/uniform initialization on +-sqrt(6 / (fan_in + fan_out)); biases
// start at zero.
inline MLP init_network(const Architecture& arch, RngState& rng) {
  arch.validate();
  MLP net;
  net.arch = arch;
  for (std::size_t l = 0; l + 1 < arch.layers.size(); ++l) {
    const std::size_t fan_in = arch.layers[l], fan_out = arch.layers[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (std::size_t i = 0; i < fan_out; ++i)
      for (std::size_t j = 0; j < fan_in; ++j)
        w(i, j) = bound * (2.0 * rng.uniform01() - 1.0);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(fan_out, 0.0);
  }
  return net;
}

// Activation values for every layer (index 0 is the input copy).
struct ForwardPass {
  std::vector<std::vector<double>> values;
  double output() const { return values.back()[0]; }
};

inline ForwardPass forward(const MLP& net, const double* x) {
  ForwardPass fp;
  fp.values.resize(net.arch.layers.size());
  fp.values[0].assign(x, x + net.arch.layers[0]);
  for (std::size_t l = 0; l + 1 < net.arch.layers.size(); ++l) {
    const Matrix& w = net.weights[l];
    const std::vector<double>& in = fp.values[l];
    std::vector<double>& out = fp.values[l + 1];
    out.assign(w.rows, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i) {
      const double* wr = w.row(i);
      double s = net.biases[l][i];
      for (std::size_t j = 0; j < w.cols; ++j) s += wr[j] * in[j];
      const double v = activate(net.arch.activations[l], s);
      if (!std::isfinite(v)) throw NonFiniteActivation("forward: non-finite activation");
      out[i] = v;
    }
  }
  return fp;
}

inline ForwardPass forward(const MLP& net, const std::vector<double>& x) {
  if (x.size() != net.arch.layers[0]) throw WidthMismatch("forward: input width mismatch");
  return forward(net, x.data());
}

inline std::vector<double> predict_nn(const MLP& net, const DesignMatrix& dm) {
  if (dm.cols() != net.arch.layers[0])
    throw WidthMismatch("predict_nn: design width does not match network input");
  std::vector<double> out(dm.rows());
  for (std::size_t i = 0; i < dm.rows(); ++i) out[i] = forward(net, dm.x.row(i)).output();
  return out;
}

struct Gradient {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  static Gradient zeros_like(const MLP& net) {
    Gradient g;
    for (const auto& w : net.weights) g.weights.emplace_back(w.rows, w.cols);
    for (const auto& b : net.biases) g.biases.emplace_back(b.size(), 0.0);
    return g;
  }
};

namespace detail {

// Scratch buffers reused across batches so the inner loop never allocates.
struct NetWorkspace {
  std::vector<std::vector<double>> act;    // activations per layer
  std::vector<std::vector<double>> delta;  // loss gradients per layer

  explicit NetWorkspace(const Architecture& arch) {
    for (std::size_t w : arch.layers) {
      act.emplace_back(w, 0.0);
      delta.emplace_back(w, 0.0);
    }
  }
};

// Adds the gradient of mean squared error over the given rows into grad and
// returns the batch's squared-error sum. Exact gradients: the delta
// recursion applies the activation derivative layer by layer.
inline double accumulate_batch_gradient(const MLP& net, const Matrix& x,
                                        const std::vector<double>& y,
                                        const std::size_t* rows, std::size_t m,
                                        Gradient& grad, NetWorkspace& ws) {
  const std::size_t depth = net.arch.layers.size();
  const double inv_m = 1.0 / static_cast<double>(m);
  double sse = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t row = rows[r];
    const double* in = x.row(row);
    std::copy(in, in + net.arch.layers[0], ws.act[0].begin());
    for (std::size_t l = 0; l + 1 < depth; ++l) {
      const Matrix& w = net.weights[l];
      for (std::size_t i = 0; i < w.rows; ++i) {
        const double* wr = w.row(i);
        double s = net.biases[l][i];
        for (std::size_t j = 0; j < w.cols; ++j) s += wr[j] * ws.act[l][j];
        ws.act[l + 1][i] = activate(net.arch.activations[l], s);
      }
    }
    const double pred = ws.act[depth - 1][0];
    const double err = pred - y[row];
    sse += err * err;

    // d(batch MSE)/d(pred) = 2 err / m; output activation is identity.
    ws.delta[depth - 1][0] = 2.0 * err * inv_m;
    for (std::size_t l = depth - 1; l-- > 0;) {
      const Matrix& w = net.weights[l];
      std::vector<double>& dout = ws.delta[l + 1];
      // Gradients for this layer's parameters.
      Matrix& gw = grad.weights[l];
      std::vector<double>& gb = grad.biases[l];
      for (std::size_t i = 0; i < w.rows; ++i) {
        const double d = dout[i];
        if (d != 0.0) {
          double* gwr = gw.row(i);
          const std::vector<double>& a = ws.act[l];
          for (std::size_t j = 0; j < w.cols; ++j) gwr[j] += d * a[j];
          gb[i] += d;
        }
      }
      if (l == 0) break;
      // Propagate to the previous layer through w^T, then through the
      // activation derivative.
      std::vector<double>& din = ws.delta[l];
      std::fill(din.begin(), din.end(), 0.0);
      for (std::size_t i = 0; i < w.rows; ++i) {
        const double d = dout[i];
        if (d == 0.0) continue;
        const double* wr = w.row(i);
        for (std::size_t j = 0; j < w.cols; ++j) din[j] += d * wr[j];
      }
      for (std::size_t j = 0; j < w.cols; ++j)
        din[j] *= activate_grad(net.arch.activations[l - 1], ws.act[l][j]);
    }
  }
  return sse;
}

}  // namespace detail

// Exact gradient of the mean squared error of the network over the given
// design/outcome pair.
inline Gradient backprop_gradient(const MLP& net, const DesignMatrix& dm,
                                  const std::vector<double>& y) {
  if (dm.cols() != net.arch.layers[0])
    throw WidthMismatch("backprop_gradient: design width mismatch");
  if (y.size() != dm.rows()) throw LengthMismatch("backprop_gradient: outcome length mismatch");
  Gradient g = Gradient::zeros_like(net);
  detail::NetWorkspace ws(net.arch);
  std::vector<std::size_t> rows(dm.rows());
  std::iota(rows.begin(), rows.end(), 0);
  detail::accumulate_batch_gradient(net, dm.x, y, rows.data(), rows.size(), g, ws);
  return g;
}

// One gradient-descent update: parameters move against the gradient.
inline void sgd_step(MLP& net, const Gradient& grad, double learning_rate) {
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    double* w = net.weights[l].a.data();
    const double* g = grad.weights[l].a.data();
    for (std::size_t i = 0; i < net.weights[l].a.size(); ++i) w[i] -= learning_rate * g[i];
    for (std::size_t i = 0; i < net.biases[l].size(); ++i)
      net.biases[l][i] -= learning_rate * grad.biases[l][i];
  }
}

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 500;
  std::size_t patience = 20;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  std::uint64_t seed_stream = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw DomainError("TrainConfig: learning_rate must be positive");
    if (batch_size == 0) throw DomainError("TrainConfig: batch_size must be positive");
    if (max_epochs == 0) throw DomainError("TrainConfig: max_epochs must be positive");
    if (validation_fraction < 0.0 || validation_fraction >= 1.0)
      throw DomainError("TrainConfig: validation_fraction must lie in [0, 1)");
  }
};

struct FitReport {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;            // 1-based; 0 means initial weights
  std::vector<double> train_loss;        // running batch-mean loss per epoch
  std::vector<double> val_loss;          // held-out MSE per epoch
  double final_train_mse = 0.0;          // returned weights on the full input
};

namespace detail {

inline double mse_over_rows(const MLP& net, const Matrix& x, const std::vector<double>& y,
                            const std::vector<std::size_t>& rows, NetWorkspace& ws) {
  if (rows.empty()) return 0.0;
  const std::size_t depth = net.arch.layers.size();
  double sse = 0.0;
  for (std::size_t row : rows) {
    const double* in = x.row(row);
    std::copy(in, in + net.arch.layers[0], ws.act[0].begin());
    for (std::size_t l = 0; l + 1 < depth; ++l) {
      const Matrix& w = net.weights[l];
      for (std::size_t i = 0; i < w.rows; ++i) {
        const double* wr = w.row(i);
        double s = net.biases[l][i];
        for (std::size_t j = 0; j < w.cols; ++j) s += wr[j] * ws.act[l][j];
        ws.act[l + 1][i] = activate(net.arch.activations[l], s);
      }
    }
    const double err = ws.act[depth - 1][0] - y[row];
    sse += err * err;
  }
  return sse / static_cast<double>(rows.size());
}

}  // namespace detail

// Mini-batch SGD with early stopping. A validation_fraction of rows is held
// out (seeded shuffle); every epoch shuffles the remaining rows, walks them
// in batches, then scores the held-out rows. Training stops once validation
// MSE has failed to improve for more than `patience` consecutive epochs, and
// the weights from the best epoch are returned. With no validation split the
// training loss is monitored instead. A non-finite training loss throws
// Diverged.
inline std::pair<MLP, FitReport> train(MLP net, const DesignMatrix& dm,
                                       const std::vector<double>& y,
                                       const TrainConfig& cfg) {
  cfg.validate();
  net.arch.validate();
  if (dm.cols() != net.arch.layers[0]) throw WidthMismatch("train: design width mismatch");
  if (y.size() != dm.rows()) throw LengthMismatch("train: outcome length mismatch");
  const std::size_t n = dm.rows();
  if (n == 0) throw LengthMismatch("train: empty training data");

  RngState rng(cfg.seed, cfg.seed_stream);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  const std::size_t n_val =
      static_cast<std::size_t>(std::ceil(cfg.validation_fraction * static_cast<double>(n)));
  std::vector<std::size_t> val_rows(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> train_rows(order.begin() + n_val, order.end());
  if (train_rows.empty()) throw DomainError("train: validation split leaves no training rows");
  if (cfg.batch_size > train_rows.size())
    throw DomainError("train: batch_size exceeds training rows");

  detail::NetWorkspace ws(net.arch);
  Gradient grad = Gradient::zeros_like(net);
  FitReport report;
  MLP best = net;
  double best_monitor = std::numeric_limits<double>::infinity();
  std::size_t since_improve = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(train_rows, rng);
    double sse = 0.0;
    for (std::size_t start = 0; start < train_rows.size(); start += cfg.batch_size) {
      const std::size_t m = std::min(cfg.batch_size, train_rows.size() - start);
      for (auto& gw : grad.weights) std::fill(gw.a.begin(), gw.a.end(), 0.0);
      for (auto& gb : grad.biases) std::fill(gb.begin(), gb.end(), 0.0);
      sse += detail::accumulate_batch_gradient(net, dm.x, y, train_rows.data() + start, m,
                                               grad, ws);
      sgd_step(net, grad, cfg.learning_rate);
    }
    const double train_loss = sse / static_cast<double>(train_rows.size());
    if (!std::isfinite(train_loss)) throw Diverged("train: training loss is not finite");
    report.train_loss.push_back(train_loss);

    double monitor = train_loss;
    if (!val_rows.empty()) {
      const double vl = detail::mse_over_rows(net, dm.x, y, val_rows, ws);
      report.val_loss.push_back(vl);
      monitor = vl;
    }
    report.epochs_run = epoch;

    if (monitor < best_monitor) {
      best_monitor = monitor;
      best = net;
      report.best_epoch = epoch;
      since_improve = 0;
    } else {
      ++since_improve;
      if (since_improve > cfg.patience) break;
    }
  }

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  report.final_train_mse = detail::mse_over_rows(best, dm.x, y, all, ws);
  return {std::move(best), std::move(report)};
}

}  // namespace errlab
