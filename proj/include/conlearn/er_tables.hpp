#pragma once

// Published entity-relation constraint coefficients and the hand-designed
// rules they are supposed to encode. Each table row is one inequality over the
// concatenated one-hot pair (first block, second block), then the bias.

#include <string>
#include <vector>

#include "conlearn/common.hpp"
#include "conlearn/constraint_system.hpp"
#include "conlearn/features.hpp"

namespace conlearn::er {

namespace detail {

inline ConstraintSystem table_system(PairRole role, const std::vector<Vector>& rows) {
  auto [a, b] = pair_blocks(role);
  ConstraintSystem sys;
  sys.input_dim = a + b;
  sys.origin = "published:" + to_string(role);
  for (const auto& r : rows) {
    check_dim(sys.input_dim + 1, r.size(), "published table row");
    sys.inequalities.push_back({Vector(r.begin(), r.end() - 1), r.back(), 0});
  }
  return sys;
}

}  // namespace detail

inline ConstraintSystem published_system(PairRole role) {
  switch (role) {
    case PairRole::source_relation:
      // NoEnt Person Location Organization | NoRel Kill LiveIn WorkFor LocatedAt OrgBasedIn | bias
      return detail::table_system(role, {
                                            {-1.98, 3.53, -1.90, 0.11, 2.66, -2.84, -2.84, -2.84, 2.58, 0.43, 0.32},
                                            {-1.61, -1.48, 3.50, 0.92, 1.15, 1.02, 1.02, 1.02, -3.96, -1.38, 1.46},
                                            {-3.59, 2.04, 1.60, 1.03, 3.81, -1.82, -1.82, -1.82, -1.38, -0.95, 0.78},
                                        });
    case PairRole::relation_target:
      // NoRel Kill LiveIn WorkFor LocatedAt OrgBasedIn | NoEnt Person Location Organization | bias
      return detail::table_system(role, {
                                            {2.68, -3.17, -0.55, 2.68, -0.55, -0.55, -1.58, 3.15, 0.53, -2.70, 1.02},
                                            {2.72, 2.42, -1.39, -2.55, -1.39, -1.39, -2.51, -2.27, 1.54, 2.31, 0.85},
                                            {5.40, -0.74, -1.94, 0.13, -1.94, -1.94, -4.10, 0.88, 2.08, -0.39, 0.86},
                                        });
    case PairRole::relation_relation:
      // forward relation | backward relation | bias
      return detail::table_system(role, {
                                            {4.95, -1.65, -1.65, -1.65, -1.65, -1.65, 5.06, -1.53, -1.53, -1.53, -1.53,
                                             -1.53, -2.41},
                                        });
  }
  throw Error("published_system: bad role");
}

/// Entity each relation requires at its source and at its target.
inline std::string required_source(std::string_view relation) {
  if (relation == "Kill" || relation == "LiveIn" || relation == "WorkFor") return "Person";
  if (relation == "LocatedAt") return "Location";
  if (relation == "OrgBasedIn") return "Organization";
  return "";
}

inline std::string required_target(std::string_view relation) {
  if (relation == "Kill") return "Person";
  if (relation == "LiveIn" || relation == "LocatedAt" || relation == "OrgBasedIn") return "Location";
  if (relation == "WorkFor") return "Organization";
  return "";
}

/// The designed rules restricted to one indicator pair: a relation fixes the
/// type of its source and target, and its reverse must be NoRel.
inline bool designed_allows(PairRole role, std::string_view first, std::string_view second) {
  switch (role) {
    case PairRole::source_relation: return second == "NoRel" || required_source(second) == first;
    case PairRole::relation_target: return first == "NoRel" || required_target(first) == second;
    case PairRole::relation_relation: return first == "NoRel" || second == "NoRel";
  }
  return false;
}

struct PairCheck {
  PairRole role;
  std::string first, second;
  bool designed;
  bool learned;
  double worst_value;  // smallest row value
};

struct TableAgreement {
  std::vector<PairCheck> checks;

  std::size_t disagreements() const {
    std::size_t n = 0;
    for (const auto& c : checks)
      if (c.designed != c.learned) ++n;
    return n;
  }
};

inline const std::vector<std::string>& block_labels(PairRole role, bool second) {
  const bool entity = second ? role == PairRole::relation_target : role == PairRole::source_relation;
  return entity ? entity_labels() : relation_labels();
}

/// Every label pair of every role, checked against `systems` (indexed by
/// role: source-relation, relation-target, relation-relation).
inline TableAgreement check_tables(const std::vector<ConstraintSystem>& systems) {
  check_dim(3, systems.size(), "check_tables systems");
  TableAgreement out;
  for (PairRole role : {PairRole::source_relation, PairRole::relation_target, PairRole::relation_relation}) {
    const auto& sys = systems[static_cast<std::size_t>(role)];
    for (const auto& a : block_labels(role, false))
      for (const auto& b : block_labels(role, true)) {
        const Vector psi = encode_pair(role, a, b);
        check_dim(sys.input_dim, psi.size(), "check_tables");
        double worst = 0.0;
        for (std::size_t r = 0; r < sys.inequalities.size(); ++r) {
          const double v = sys.inequalities[r].value(psi);
          if (r == 0 || v < worst) worst = v;
        }
        out.checks.push_back({role, a, b, designed_allows(role, a, b), is_feasible(sys, psi), worst});
      }
  }
  return out;
}

inline TableAgreement check_published_tables() {
  return check_tables({published_system(PairRole::source_relation), published_system(PairRole::relation_target),
                       published_system(PairRole::relation_relation)});
}

}  // namespace conlearn::er
