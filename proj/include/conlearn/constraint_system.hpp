#pragma once

// Linear-inequality view of a trained rectifier network. A net with K hidden
// units accepts psi iff, for every nonempty subset S of the units,
//
//   1 - sum_{k in S} (w_k . psi + b_k) >= 0.
//
// The threshold-network and conjunction evaluators below are the reference
// semantics that the extracted systems are cross-checked against.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conlearn/common.hpp"
#include "conlearn/rectifier_net.hpp"

namespace conlearn {

/// weights . psi + bias >= -kFeasibilityTolerance counts as satisfied.
inline constexpr double kFeasibilityTolerance = 1e-9;

/// Largest hidden layer extract_system will enumerate (2^K - 1 rows).
inline constexpr std::size_t kMaxExtractHidden = 20;

struct LinearInequality {
  Vector weights;
  double bias = 0.0;
  std::uint32_t subset_mask = 0;  // 0 for hand-written rows

  double value(std::span<const double> psi) const { return dot(weights, psi) + bias; }
  bool satisfied(std::span<const double> psi) const { return value(psi) >= -kFeasibilityTolerance; }

  bool operator==(const LinearInequality&) const = default;
};

struct ConstraintSystem {
  std::size_t input_dim = 0;
  std::vector<LinearInequality> inequalities;
  std::string origin = "manual";
  std::optional<std::size_t> hidden_count;  // set when extracted from a net

  void validate() const {
    for (const auto& ineq : inequalities) check_dim(input_dim, ineq.weights.size(), "ConstraintSystem row");
    if (hidden_count) {
      if (*hidden_count == 0 || *hidden_count > kMaxExtractHidden)
        throw Error("ConstraintSystem: hidden_count out of range");
      const std::size_t expected = (std::size_t{1} << *hidden_count) - 1;
      if (inequalities.size() != expected)
        throw Error("ConstraintSystem: expected " + std::to_string(expected) + " inequalities for K=" +
                    std::to_string(*hidden_count) + ", found " + std::to_string(inequalities.size()));
    }
  }

  bool operator==(const ConstraintSystem&) const = default;
};

inline std::string net_fingerprint(const ConstraintNet& net) {
  std::uint64_t h = fnv1a(net.weights.data().data(), net.weights.data().size() * sizeof(double));
  h = fnv1a(net.biases.data(), net.biases.size() * sizeof(double), h);
  char buf[32];
  std::snprintf(buf, sizeof buf, "net:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// One inequality per nonempty subset of hidden units, in ascending mask
/// order: weights = -sum_{k in S} w_k, bias = 1 - sum_{k in S} b_k.
inline ConstraintSystem extract_system(const ConstraintNet& net) {
  net.validate();
  const std::size_t K = net.hidden_count(), d = net.input_dim();
  if (K > kMaxExtractHidden)
    throw Error("subset enumeration too large: hidden_count " + std::to_string(K) + " exceeds " +
                std::to_string(kMaxExtractHidden));
  const std::uint32_t count = (std::uint32_t{1} << K);
  ConstraintSystem sys;
  sys.input_dim = d;
  sys.origin = net_fingerprint(net);
  sys.hidden_count = K;
  sys.inequalities.reserve(count - 1);
  // Row for mask extends the row for mask-without-lowest-bit; the empty set is
  // the implicit base (weights 0, bias 1).
  for (std::uint32_t mask = 1; mask < count; ++mask) {
    const std::uint32_t low = mask & (~mask + 1);
    const std::uint32_t rest = mask ^ low;
    const auto k = static_cast<std::size_t>(std::countr_zero(low));
    LinearInequality row;
    if (rest == 0) {
      row.weights.assign(d, 0.0);
      row.bias = 1.0;
    } else {
      const LinearInequality& base = sys.inequalities[rest - 1];
      row.weights = base.weights;
      row.bias = base.bias;
    }
    const auto wk = net.weights.row(k);
    for (std::size_t j = 0; j < d; ++j) row.weights[j] -= wk[j];
    row.bias -= net.biases[k];
    row.subset_mask = mask;
    sys.inequalities.push_back(std::move(row));
  }
  return sys;
}

inline bool is_feasible(const ConstraintSystem& system, std::span<const double> psi) {
  check_dim(system.input_dim, psi.size(), "is_feasible");
  return std::all_of(system.inequalities.begin(), system.inequalities.end(),
                     [&](const LinearInequality& ineq) { return ineq.satisfied(psi); });
}

struct Violation {
  std::size_t index;
  double amount;  // how far below zero the row evaluates

  bool operator==(const Violation&) const = default;
};

/// Violated rows, most violated first (ties by row index).
inline std::vector<Violation> violated_indices(const ConstraintSystem& system, std::span<const double> psi) {
  check_dim(system.input_dim, psi.size(), "violated_indices");
  std::vector<Violation> out;
  for (std::size_t i = 0; i < system.inequalities.size(); ++i) {
    const double v = system.inequalities[i].value(psi);
    if (v < -kFeasibilityTolerance) out.push_back({i, -v});
  }
  std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) { return a.amount > b.amount; });
  return out;
}

/// sgn(1 - K + sum_k c_k) for c_k in {+1, -1}: the AND of the inputs.
inline int conjunction_eval(std::span<const int> values) {
  if (values.empty()) throw Error("conjunction_eval: empty input");
  long long s = 1 - static_cast<long long>(values.size());
  for (int c : values) {
    if (c != 1 && c != -1) throw Error("conjunction_eval: value must be +1 or -1, got " + std::to_string(c));
    s += c;
  }
  return s >= 0 ? 1 : -1;
}

/// Two-layer threshold network sgn(1 - K + sum_k sgn(w_k . psi + b_k)).
inline int threshold_net_eval(const Matrix& weights, std::span<const double> biases, std::span<const double> psi) {
  check_dim(weights.rows(), biases.size(), "threshold_net_eval biases");
  check_dim(weights.cols(), psi.size(), "threshold_net_eval");
  if (weights.rows() == 0) throw Error("threshold_net_eval: no hidden units");
  std::vector<int> signs(weights.rows());
  for (std::size_t k = 0; k < weights.rows(); ++k) signs[k] = sign_of(dot(weights.row(k), psi) + biases[k]);
  return conjunction_eval(signs);
}

}  // namespace conlearn
