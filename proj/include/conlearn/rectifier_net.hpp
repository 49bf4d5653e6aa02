#pragma once

// Two-layer rectifier network with a fixed output layer:
//
//   z = sgn(1 - sum_k max(0, w_k . psi + b_k))
//
// Only the hidden layer (w_k, b_k) is trained. During training the output
// sign is relaxed to a sigmoid and fit with binary cross-entropy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "conlearn/common.hpp"

namespace conlearn {

struct ConstraintNet {
  Matrix weights;  // hidden_count x input_dim, row k is w_k
  Vector biases;   // b_k

  ConstraintNet() = default;
  ConstraintNet(Matrix w, Vector b) : weights(std::move(w)), biases(std::move(b)) { validate(); }

  static ConstraintNet zeros(std::size_t hidden_count, std::size_t input_dim) {
    return ConstraintNet(Matrix(hidden_count, input_dim), Vector(hidden_count, 0.0));
  }

  std::size_t hidden_count() const { return weights.rows(); }
  std::size_t input_dim() const { return weights.cols(); }

  void validate() const {
    if (weights.rows() == 0 || weights.cols() == 0)
      throw Error("ConstraintNet: hidden_count and input_dim must be positive");
    check_dim(weights.rows(), biases.size(), "ConstraintNet biases");
    if (!all_finite(weights.data()) || !all_finite(biases))
      throw Error("ConstraintNet: non-finite parameter");
  }

  bool operator==(const ConstraintNet&) const = default;
};

struct LabeledFeatureExample {
  Vector psi;
  int label = 1;  // +1 valid, -1 invalid

  bool operator==(const LabeledFeatureExample&) const = default;
};

struct TrainConfig {
  double learning_rate = 0.01;
  double lr_decay = 0.0;
  std::size_t epochs = 1000;
  double moment1 = 0.9;
  double moment2 = 0.999;
  double epsilon_stab = 1e-7;
  std::uint64_t seed = 1;
  std::size_t batch_size = 0;  // 0 = full batch

  void validate() const {
    if (!(learning_rate > 0.0)) throw Error("TrainConfig: learning_rate must be positive");
    if (!(lr_decay >= 0.0)) throw Error("TrainConfig: lr_decay must be nonnegative");
    if (epochs == 0) throw Error("TrainConfig: epochs must be positive");
    if (!(moment1 > 0.0 && moment1 < 1.0)) throw Error("TrainConfig: moment1 must lie in (0,1)");
    if (!(moment2 > 0.0 && moment2 < 1.0)) throw Error("TrainConfig: moment2 must lie in (0,1)");
    if (!(epsilon_stab > 0.0)) throw Error("TrainConfig: epsilon_stab must be positive");
  }
};

/// Pre-activation a_k = w_k . psi + b_k of one hidden unit.
inline double hidden_preactivation(const ConstraintNet& net, std::size_t k, std::span<const double> psi) {
  return dot(net.weights.row(k), psi) + net.biases[k];
}

/// 1 - sum_k ReLU(a_k): the score whose sign is the network's decision.
inline double forward_raw(const ConstraintNet& net, std::span<const double> psi) {
  check_dim(net.input_dim(), psi.size(), "forward_raw");
  double s = 1.0;
  for (std::size_t k = 0; k < net.hidden_count(); ++k) s -= relu(hidden_preactivation(net, k, psi));
  return s;
}

inline int predict(const ConstraintNet& net, std::span<const double> psi) {
  return sign_of(forward_raw(net, psi));
}

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad_weights;
  Vector grad_biases;
};

namespace detail {

inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline void check_label(int label) {
  if (label != 1 && label != -1) throw Error("label must be +1 or -1, got " + std::to_string(label));
}

// Mean cross-entropy of sigmoid(forward_raw) over the examples picked by idx.
template <typename Picker>
LossAndGrad loss_and_grad_impl(const ConstraintNet& net, std::size_t count, Picker pick) {
  if (count == 0) throw Error("loss_and_grad: empty batch");
  const std::size_t K = net.hidden_count(), d = net.input_dim();
  LossAndGrad out{0.0, Matrix(K, d), Vector(K, 0.0)};
  Vector act(K);
  for (std::size_t i = 0; i < count; ++i) {
    const LabeledFeatureExample& ex = pick(i);
    check_dim(d, ex.psi.size(), "loss_and_grad");
    check_label(ex.label);
    double f = 1.0;
    for (std::size_t k = 0; k < K; ++k) {
      act[k] = hidden_preactivation(net, k, ex.psi);
      f -= relu(act[k]);
    }
    const double target = ex.label > 0 ? 1.0 : 0.0;
    out.loss += target * softplus(-f) + (1.0 - target) * softplus(f);
    const double dloss_df = sigmoid(f) - target;
    for (std::size_t k = 0; k < K; ++k) {
      if (!(act[k] > 0.0)) continue;  // ReLU subgradient at 0 is 0
      const double g = -dloss_df;
      auto gw = out.grad_weights.row(k);
      for (std::size_t j = 0; j < d; ++j) gw[j] += g * ex.psi[j];
      out.grad_biases[k] += g;
    }
  }
  const double inv = 1.0 / static_cast<double>(count);
  out.loss *= inv;
  for (double& g : out.grad_weights.data()) g *= inv;
  for (double& g : out.grad_biases) g *= inv;
  return out;
}

}  // namespace detail

/// Mean binary cross-entropy of sigmoid(forward_raw) against (label+1)/2 and
/// its exact gradient with respect to the hidden-layer parameters.
inline LossAndGrad loss_and_grad(const ConstraintNet& net, std::span<const LabeledFeatureExample> batch) {
  return detail::loss_and_grad_impl(net, batch.size(),
                                    [&](std::size_t i) -> const LabeledFeatureExample& { return batch[i]; });
}

inline double classification_accuracy(const ConstraintNet& net, std::span<const LabeledFeatureExample> data) {
  if (data.empty()) throw Error("classification_accuracy: empty data");
  std::size_t right = 0;
  for (const auto& ex : data)
    if (predict(net, ex.psi) == ex.label) ++right;
  return static_cast<double>(right) / static_cast<double>(data.size());
}

struct TrainResult {
  ConstraintNet net;
  std::vector<double> history;  // one mean loss per epoch
};

/// Adam on the hidden layer. Weights start uniform in [-1/sqrt(d), 1/sqrt(d)],
/// biases at 0. The step size at update t (0-based) is lr / (1 + decay * t).
inline TrainResult train(std::size_t input_dim, std::size_t hidden_count,
                         std::span<const LabeledFeatureExample> data, const TrainConfig& config) {
  config.validate();
  if (hidden_count == 0) throw Error("train: hidden_count must be >= 1");
  if (input_dim == 0) throw Error("train: input_dim must be >= 1");
  bool has_pos = false, has_neg = false;
  for (const auto& ex : data) {
    check_dim(input_dim, ex.psi.size(), "train");
    detail::check_label(ex.label);
    (ex.label > 0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw Error("degenerate training set: need both positive and negative examples");

  Rng rng(config.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
  Matrix w(hidden_count, input_dim);
  for (double& x : w.data()) x = rng.uniform(-scale, scale);
  TrainResult result{ConstraintNet(std::move(w), Vector(hidden_count, 0.0)), {}};
  ConstraintNet& net = result.net;

  std::vector<double> m_w(net.weights.data().size(), 0.0), v_w(m_w.size(), 0.0);
  std::vector<double> m_b(hidden_count, 0.0), v_b(hidden_count, 0.0);
  const double b1 = config.moment1, b2 = config.moment2, eps = config.epsilon_stab;
  double b1_pow = 1.0, b2_pow = 1.0;
  std::uint64_t step = 0;

  auto adam = [&](std::vector<double>& param, const std::vector<double>& grad, std::vector<double>& m,
                  std::vector<double>& v, double lr) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      const double m_hat = m[i] / (1.0 - b1_pow);
      const double v_hat = v[i] / (1.0 - b2_pow);
      param[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  };

  const std::size_t n = data.size();
  const std::size_t batch = (config.batch_size == 0 || config.batch_size > n) ? n : config.batch_size;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  result.history.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch < n) rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      LossAndGrad lg = detail::loss_and_grad_impl(
          net, count, [&](std::size_t i) -> const LabeledFeatureExample& { return data[order[start + i]]; });
      if (!std::isfinite(lg.loss)) throw Error("train: non-finite loss at epoch " + std::to_string(epoch));
      epoch_loss += lg.loss * static_cast<double>(count);
      const double lr = config.learning_rate / (1.0 + config.lr_decay * static_cast<double>(step));
      ++step;
      b1_pow *= b1;
      b2_pow *= b2;
      adam(net.weights.data(), lg.grad_weights.data(), m_w, v_w, lr);
      adam(net.biases, lg.grad_biases, m_b, v_b, lr);
    }
    if (!all_finite(net.weights.data()) || !all_finite(net.biases))
      throw Error("train: non-finite parameter at epoch " + std::to_string(epoch));
    result.history.push_back(epoch_loss / static_cast<double>(n));
  }
  return result;
}

struct GridPoint {
  double learning_rate;
  double lr_decay;
  double heldout_accuracy;
};

struct SelectionResult {
  TrainResult trained;       // retrained on all data with the chosen config
  TrainConfig chosen;
  std::vector<GridPoint> grid;
};

inline const std::vector<double>& default_learning_rates() {
  static const std::vector<double> v{0.001, 0.01, 0.1};
  return v;
}
inline const std::vector<double>& default_lr_decays() {
  static const std::vector<double> v{0.0, 1e-7, 1e-6};
  return v;
}

/// Grid search over (learning rate, decay) scored by accuracy on a seeded
/// held-out split; the winner (first best in grid order) is retrained on all
/// of `data`.
inline SelectionResult select_and_train(std::size_t input_dim, std::size_t hidden_count,
                                        std::span<const LabeledFeatureExample> data, const TrainConfig& base,
                                        std::span<const double> learning_rates = default_learning_rates(),
                                        std::span<const double> decays = default_lr_decays(),
                                        double heldout_fraction = 0.2) {
  if (learning_rates.empty() || decays.empty()) throw Error("select_and_train: empty grid");
  if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0))
    throw Error("select_and_train: heldout_fraction must lie in (0,1)");

  // Split each class separately so both sides keep both labels.
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < data.size(); ++i) (data[i].label > 0 ? pos : neg).push_back(i);
  Rng rng(base.seed ^ 0x9e3779b97f4a7c15ull);
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<LabeledFeatureExample> fit, held;
  for (auto* cls : {&pos, &neg}) {
    const auto n_held = static_cast<std::size_t>(std::floor(heldout_fraction * static_cast<double>(cls->size())));
    for (std::size_t i = 0; i < cls->size(); ++i) (i < n_held ? held : fit).push_back(data[(*cls)[i]]);
  }
  if (held.empty()) held = fit;

  SelectionResult out;
  double best = -1.0;
  for (double lr : learning_rates) {
    for (double decay : decays) {
      TrainConfig cfg = base;
      cfg.learning_rate = lr;
      cfg.lr_decay = decay;
      const TrainResult r = train(input_dim, hidden_count, fit, cfg);
      const double acc = classification_accuracy(r.net, held);
      out.grid.push_back({lr, decay, acc});
      if (acc > best) {
        best = acc;
        out.chosen = cfg;
      }
    }
  }
  out.trained = train(input_dim, hidden_count, data, out.chosen);
  return out;
}

}  // namespace conlearn
