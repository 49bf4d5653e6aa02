#pragma once

// Binary ILPs that share hidden constraints:
//
//   min_z sum_i c_i z_i   s.t.  A z >= b,  z in {0,1}^n
//
// Optimal solutions of a family are the positive examples for learning the
// hidden constraints; cost-lowering single-bit flips are the negatives.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "conlearn/common.hpp"
#include "conlearn/constraint_system.hpp"
#include "conlearn/features.hpp"
#include "conlearn/rectifier_net.hpp"

namespace conlearn {

using Assignment = std::vector<int>;  // entries 0/1

inline Vector to_features(const Assignment& z) { return Vector(z.begin(), z.end()); }

struct IlpInstance {
  Vector costs;
  std::string family_id;

  std::size_t size() const { return costs.size(); }
};

/// A z >= b.
struct SharedConstraints {
  Matrix matrix;
  Vector bounds;

  std::size_t size() const { return matrix.rows(); }
  std::size_t dim() const { return matrix.cols(); }

  /// Row k becomes A_k . z + (-b_k) >= 0.
  ConstraintSystem as_system() const {
    ConstraintSystem sys;
    sys.input_dim = dim();
    sys.origin = "shared";
    for (std::size_t k = 0; k < size(); ++k) {
      const auto r = matrix.row(k);
      sys.inequalities.push_back({Vector(r.begin(), r.end()), -bounds[k], 0});
    }
    return sys;
  }

  bool operator==(const SharedConstraints&) const = default;
};

struct IlpFamily {
  std::string family_id;
  SharedConstraints constraints;
  std::vector<IlpInstance> instances;
  Assignment witness;  // strictly feasible point the constraints were built around
};

/// A ~ U[-1,1]^{m x n}; witness z* ~ U{0,1}^n; b_k = A_k . z* - u_k with
/// u_k ~ U[0, 0.5 sqrt(n)]; costs ~ U[-1,1]^n per instance.
inline IlpFamily generate_family(std::size_t n, std::size_t m, std::size_t count, std::uint64_t seed,
                                 double slack_scale = 0.5) {
  if (n < 2) throw Error("generate_family: n must be >= 2");
  if (m < 1) throw Error("generate_family: m must be >= 1");
  if (count < 1) throw Error("generate_family: count must be >= 1");
  Rng rng(seed);
  IlpFamily fam;
  fam.family_id = "family-" + std::to_string(seed);
  fam.constraints.matrix = Matrix(m, n);
  for (double& a : fam.constraints.matrix.data()) a = rng.uniform(-1.0, 1.0);
  fam.witness.resize(n);
  for (int& z : fam.witness) z = static_cast<int>(rng.below(2));
  const double slack_max = slack_scale * std::sqrt(static_cast<double>(n));
  fam.constraints.bounds.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    double lhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) lhs += fam.constraints.matrix(k, i) * fam.witness[i];
    fam.constraints.bounds[k] = lhs - rng.uniform(0.0, slack_max);
  }
  fam.instances.resize(count);
  for (auto& inst : fam.instances) {
    inst.family_id = fam.family_id;
    inst.costs.resize(n);
    for (double& c : inst.costs) c = rng.uniform(-1.0, 1.0);
  }
  return fam;
}

enum class SolveStatus { optimal, infeasible };

inline std::string to_string(SolveStatus s) { return s == SolveStatus::optimal ? "optimal" : "infeasible"; }

struct IlpSolution {
  Assignment assignment;
  double objective = 0.0;
  SolveStatus status = SolveStatus::infeasible;
  std::uint64_t nodes = 0;
};

inline double objective_of(std::span<const double> costs, const Assignment& z) {
  double s = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) s += costs[i] * z[i];
  return s;
}

inline bool satisfies(const ConstraintSystem& sys, const Assignment& z) { return is_feasible(sys, to_features(z)); }

/// Objectives within this distance are ties, resolved toward the
/// lexicographically smallest assignment.
inline constexpr double kObjectiveTieTolerance = 1e-9;

namespace detail {

// Depth-first branch and bound. Per row r it keeps three running sums so that
// fixing or releasing a variable costs O(rows):
//   fixed_r   = sum over fixed i of w_ri z_i
//   optim_r   = sum over free i of max(0, w_ri)   (most favorable completion)
//   greedy_r  = sum over free i of w_ri g_i       (g = unconstrained optimum)
// A node is pruned when some row cannot be satisfied even by its most
// favorable completion, or when its lower bound (fixed cost + unconstrained
// optimum of the free part, raised by the cheapest fractional repair of the
// worst rows) exceeds the incumbent. Rows whose remaining slack is smaller
// than a free coefficient force that variable to its favorable value.
class BranchAndBound {
 public:
  BranchAndBound(std::span<const double> costs, const ConstraintSystem& sys) : c_(costs), sys_(sys) {
    n_ = c_.size();
    rows_ = sys.inequalities.size();
    greedy_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) greedy_[i] = c_[i] < 0.0 ? 1 : 0;
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(c_[a]) > std::abs(c_[b]); });
    fixed_.assign(rows_, 0.0);
    optim_.assign(rows_, 0.0);
    greedy_sum_.assign(rows_, 0.0);
    row_max_abs_.assign(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      const auto& w = sys.inequalities[r].weights;
      for (std::size_t i = 0; i < n_; ++i) {
        optim_[r] += relu(w[i]);
        greedy_sum_[r] += w[i] * greedy_[i];
        row_max_abs_[r] = std::max(row_max_abs_[r], std::abs(w[i]));
      }
    }
    free_min_ = 0.0;
    for (double c : c_) free_min_ += std::min(0.0, c);
    z_.assign(n_, 0);
    is_fixed_.assign(n_, 0);
  }

  IlpSolution run() {
    search();
    IlpSolution s;
    s.nodes = nodes_;
    if (have_best_) {
      s.status = SolveStatus::optimal;
      s.assignment = best_;
      s.objective = best_obj_;
    }
    return s;
  }

 private:
  static constexpr double kPruneMargin = 1e-9;
  static constexpr std::size_t kMaxRepairRows = 8;

  // Best-case row value minus the feasibility threshold; negative = dead row.
  double row_slack(std::size_t r) const {
    return fixed_[r] + optim_[r] + sys_.inequalities[r].bias + kFeasibilityTolerance;
  }

  void assign(std::size_t i, int v) {
    z_[i] = v;
    is_fixed_[i] = 1;
    trail_.push_back(i);
    prefix_obj_ += c_[i] * v;
    free_min_ -= std::min(0.0, c_[i]);
    for (std::size_t r = 0; r < rows_; ++r) {
      const double w = sys_.inequalities[r].weights[i];
      fixed_[r] += w * v;
      optim_[r] -= relu(w);
      greedy_sum_[r] -= w * greedy_[i];
    }
  }

  void undo_to(std::size_t mark) {
    while (trail_.size() > mark) {
      const std::size_t i = trail_.back();
      trail_.pop_back();
      const int v = z_[i];
      is_fixed_[i] = 0;
      prefix_obj_ -= c_[i] * v;
      free_min_ += std::min(0.0, c_[i]);
      for (std::size_t r = 0; r < rows_; ++r) {
        const double w = sys_.inequalities[r].weights[i];
        fixed_[r] -= w * v;
        optim_[r] += relu(w);
        greedy_sum_[r] += w * greedy_[i];
      }
    }
  }

  // Fixpoint of single-row forcing. False when some row is dead.
  bool propagate() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t r = 0; r < rows_; ++r) {
        double slack = row_slack(r);
        if (slack < -kPruneMargin) return false;
        if (slack + kPruneMargin >= row_max_abs_[r]) continue;
        const auto& w = sys_.inequalities[r].weights;
        for (std::size_t i = 0; i < n_; ++i) {
          if (is_fixed_[i] || std::abs(w[i]) <= slack + kPruneMargin) continue;
          assign(i, w[i] > 0.0 ? 1 : 0);
          changed = true;
          slack = row_slack(r);
        }
      }
    }
    return true;
  }

  // Cheapest fractional repair of row r starting from the greedy completion:
  // each free variable flipped away from g_i buys gain |w_ri| at cost |c_i|.
  double repair_cost(std::size_t r, double deficit) {
    const auto& w = sys_.inequalities[r].weights;
    items_.clear();
    for (std::size_t i = 0; i < n_; ++i) {
      if (is_fixed_[i]) continue;
      const double gain = greedy_[i] ? -w[i] : w[i];
      if (gain > 0.0) items_.push_back({std::abs(c_[i]) / gain, gain});
    }
    std::sort(items_.begin(), items_.end(), [](const Item& a, const Item& b) { return a.ratio < b.ratio; });
    double cost = 0.0;
    for (const Item& it : items_) {
      const double take = std::min(deficit, it.gain);
      cost += take * it.ratio;
      deficit -= take;
      if (deficit <= 0.0) break;
    }
    return cost;
  }

  bool offer(const Assignment& z) {
    if (!satisfies(sys_, z)) return false;
    const double obj = objective_of(c_, z);
    if (!have_best_ || obj < best_obj_ - kObjectiveTieTolerance ||
        (obj <= best_obj_ + kObjectiveTieTolerance && z < best_)) {
      have_best_ = true;
      best_obj_ = obj;
      best_ = z;
    }
    return true;
  }

  void search() {
    ++nodes_;
    const std::size_t mark = trail_.size();
    explore();
    undo_to(mark);
  }

  void explore() {
    if (have_best_ && prefix_obj_ + free_min_ > best_obj_ + kObjectiveTieTolerance) return;
    if (!propagate()) return;
    const double lower = prefix_obj_ + free_min_;
    if (have_best_ && lower > best_obj_ + kObjectiveTieTolerance) return;

    deficits_.clear();
    for (std::size_t r = 0; r < rows_; ++r) {
      const double deficit = -(fixed_[r] + greedy_sum_[r] + sys_.inequalities[r].bias) - kFeasibilityTolerance;
      if (deficit > 0.0) deficits_.push_back({deficit, r});
    }

    const bool complete = trail_.size() == n_;
    if (deficits_.empty() || complete) {
      // The greedy completion attains the node's lower bound; with zero-cost
      // variables at 0 it is also the lexicographically smallest such point.
      Assignment z = z_;
      for (std::size_t i = 0; i < n_; ++i)
        if (!is_fixed_[i]) z[i] = greedy_[i];
      if (offer(z) || complete) return;
    }

    // Any subset of rows gives a valid bound; use the worst few.
    const std::size_t k = std::min(deficits_.size(), kMaxRepairRows);
    std::partial_sort(deficits_.begin(), deficits_.begin() + static_cast<std::ptrdiff_t>(k), deficits_.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    double repair = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double need = deficits_[j].first - kPruneMargin;
      if (need > 0.0) repair = std::max(repair, repair_cost(deficits_[j].second, need));
    }
    if (have_best_ && lower + repair > best_obj_ + kObjectiveTieTolerance) return;

    std::size_t i = n_;
    for (std::size_t d = 0; d < n_; ++d)
      if (!is_fixed_[order_[d]]) {
        i = order_[d];
        break;
      }
    const int first = greedy_[i];
    for (int v : {first, 1 - first}) {
      const std::size_t mark = trail_.size();
      assign(i, v);
      search();
      undo_to(mark);
    }
  }

  struct Item {
    double ratio;
    double gain;
  };

  std::span<const double> c_;
  const ConstraintSystem& sys_;
  std::size_t n_ = 0, rows_ = 0;
  Assignment greedy_;
  std::vector<std::size_t> order_;
  Vector fixed_, optim_, greedy_sum_, row_max_abs_;
  double free_min_ = 0.0;
  double prefix_obj_ = 0.0;
  Assignment z_;
  std::vector<std::uint8_t> is_fixed_;
  std::vector<std::size_t> trail_;
  std::vector<Item> items_;
  std::vector<std::pair<double, std::size_t>> deficits_;

  bool have_best_ = false;
  double best_obj_ = 0.0;
  Assignment best_;
  std::uint64_t nodes_ = 0;
};

}  // namespace detail

/// Exact minimizer over {0,1}^n subject to every row of `constraints`; ties
/// go to the lexicographically smallest assignment.
inline IlpSolution solve_exact(const IlpInstance& instance, const ConstraintSystem& constraints) {
  if (instance.costs.empty()) throw Error("solve_exact: empty instance");
  if (!all_finite(instance.costs)) throw Error("solve_exact: non-finite cost");
  constraints.validate();
  check_dim(instance.size(), constraints.input_dim, "solve_exact");
  return detail::BranchAndBound(instance.costs, constraints).run();
}

inline IlpSolution solve_exact(const IlpInstance& instance, const SharedConstraints& constraints) {
  return solve_exact(instance, constraints.as_system());
}

/// Positives: each optimal z. Negatives: z with bit i flipped wherever the flip
/// lowers the objective (c_i > 0, z_i = 1 or c_i < 0, z_i = 0).
inline GeneratedDataset make_training_pairs(std::span<const IlpInstance> instances,
                                            std::span<const IlpSolution> solutions) {
  check_dim(instances.size(), solutions.size(), "make_training_pairs");
  GeneratedDataset ds;
  if (instances.empty()) return ds;
  ds.dim = instances.front().size();
  std::set<Vector> pos, neg;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    if (solutions[k].status != SolveStatus::optimal) throw Error("make_training_pairs: instance " + std::to_string(k) + " has no optimal solution");
    Vector v = to_features(solutions[k].assignment);
    check_dim(ds.dim, v.size(), "make_training_pairs");
    if (pos.insert(v).second) ds.positives.push_back({std::move(v), 1});
  }
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const auto& c = instances[k].costs;
    const auto& z = solutions[k].assignment;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const bool lowers = (c[i] > 0.0 && z[i] == 1) || (c[i] < 0.0 && z[i] == 0);
      if (!lowers) continue;
      Vector v = to_features(z);
      v[i] = 1.0 - v[i];
      if (pos.count(v) || !neg.insert(v).second) continue;
      ds.negatives.push_back({std::move(v), -1});
    }
  }
  return ds;
}

struct RecoveryMetrics {
  // Percentages in [0, 100].
  double classification_accuracy = 0.0;  // net on pairs generated from the test instances
  double bitwise_accuracy = 0.0;         // learned-constraint solutions vs gold
  double original_satisfied = 0.0;       // original rows satisfied by learned-constraint solutions
  double learned_satisfied = 0.0;        // learned rows satisfied by gold solutions
  double baseline_bitwise_accuracy = 0.0;
  double baseline_original_satisfied = 0.0;
  std::size_t instances = 0;
  std::vector<std::size_t> fallback_instances;  // learned system infeasible; unconstrained solution used
};

namespace detail {

inline double fraction_satisfied(const ConstraintSystem& sys, const Assignment& z) {
  if (sys.inequalities.empty()) return 1.0;
  const Vector psi = to_features(z);
  std::size_t ok = 0;
  for (const auto& ineq : sys.inequalities)
    if (ineq.satisfied(psi)) ++ok;
  return static_cast<double>(ok) / static_cast<double>(sys.inequalities.size());
}

inline double bit_agreement(const Assignment& a, const Assignment& b) {
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] == b[i]) ++same;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

}  // namespace detail

/// The four recovery measures plus the unconstrained baseline, over
/// `test_instances` whose gold solutions come from `shared`.
inline RecoveryMetrics evaluate_recovery(std::span<const IlpInstance> test_instances, const SharedConstraints& shared,
                                         const ConstraintSystem& learned, const ConstraintNet& net) {
  if (test_instances.empty()) throw Error("evaluate_recovery: no test instances");
  const ConstraintSystem original = shared.as_system();
  check_dim(original.input_dim, learned.input_dim, "evaluate_recovery");
  const ConstraintSystem unconstrained{original.input_dim, {}, "unconstrained", std::nullopt};

  RecoveryMetrics m;
  m.instances = test_instances.size();
  std::vector<IlpSolution> gold;
  double bit = 0, orig = 0, learn = 0, base_bit = 0, base_orig = 0;
  for (std::size_t k = 0; k < test_instances.size(); ++k) {
    const auto& inst = test_instances[k];
    IlpSolution g = solve_exact(inst, original);
    if (g.status != SolveStatus::optimal) throw Error("evaluate_recovery: gold instance infeasible");
    IlpSolution base = solve_exact(inst, unconstrained);
    IlpSolution pred = solve_exact(inst, learned);
    if (pred.status != SolveStatus::optimal) {
      m.fallback_instances.push_back(k);
      pred = base;
    }
    bit += detail::bit_agreement(pred.assignment, g.assignment);
    orig += detail::fraction_satisfied(original, pred.assignment);
    learn += detail::fraction_satisfied(learned, g.assignment);
    base_bit += detail::bit_agreement(base.assignment, g.assignment);
    base_orig += detail::fraction_satisfied(original, base.assignment);
    gold.push_back(std::move(g));
  }
  const double scale = 100.0 / static_cast<double>(test_instances.size());
  m.bitwise_accuracy = bit * scale;
  m.original_satisfied = orig * scale;
  m.learned_satisfied = learn * scale;
  m.baseline_bitwise_accuracy = base_bit * scale;
  m.baseline_original_satisfied = base_orig * scale;

  const GeneratedDataset pairs = make_training_pairs(test_instances, gold);
  m.classification_accuracy = 100.0 * classification_accuracy(net, pairs.all());
  return m;
}

struct IlpExperimentConfig {
  std::size_t hidden_count = 10;
  double train_fraction = 0.7;
  TrainConfig train;
  std::vector<double> learning_rates = default_learning_rates();
  std::vector<double> lr_decays = default_lr_decays();
  double heldout_fraction = 0.2;
};

struct IlpExperimentResult {
  std::vector<IlpSolution> gold;
  std::size_t train_instances = 0;
  std::size_t train_positives = 0, train_negatives = 0;
  SelectionResult selection;
  ConstraintSystem learned;
  RecoveryMetrics metrics;
};

/// Solve (unless `gold` is given), learn on the leading train_fraction of the
/// instances, extract, and evaluate on the rest.
inline IlpExperimentResult run_ilp_experiment(const IlpFamily& family, const IlpExperimentConfig& config,
                                              std::vector<IlpSolution> gold = {}) {
  const std::size_t count = family.instances.size();
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
    throw Error("train_fraction must lie in (0,1)");
  const auto n_train = static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(count)));
  if (n_train == 0 || n_train >= count) throw Error("train/test split leaves an empty side");

  IlpExperimentResult res;
  if (gold.empty()) {
    const ConstraintSystem shared = family.constraints.as_system();
    for (const auto& inst : family.instances) gold.push_back(solve_exact(inst, shared));
  }
  check_dim(count, gold.size(), "run_ilp_experiment gold");
  res.gold = std::move(gold);
  res.train_instances = n_train;

  const std::span<const IlpInstance> all(family.instances);
  const GeneratedDataset ds = make_training_pairs(all.first(n_train), std::span<const IlpSolution>(res.gold).first(n_train));
  res.train_positives = ds.positives.size();
  res.train_negatives = ds.negatives.size();
  const auto data = ds.all();
  res.selection = select_and_train(ds.dim, config.hidden_count, data, config.train, config.learning_rates,
                                   config.lr_decays, config.heldout_fraction);
  res.learned = extract_system(res.selection.trained.net);
  res.metrics = evaluate_recovery(all.subspan(n_train), family.constraints, res.learned, res.selection.trained.net);
  return res;
}

}  // namespace conlearn
