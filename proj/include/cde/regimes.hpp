#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cde/bayes_net.hpp"
#include "cde/ci.hpp"
#include "cde/graph.hpp"

namespace cde {

// One setting per regime node of a graph: either idle (std::nullopt) or a
// value index of the targeted domain variable.
class RegimeAssignment {
 public:
  using Map = std::map<std::string, std::optional<int>>;

  static RegimeAssignment all_idle(const Dag& g);
  // `values` must cover the graph's regime nodes exactly, with in-range
  // states.
  static RegimeAssignment build(const Dag& g, Map values);

  const Map& values() const { return values_; }
  bool is_idle(const std::string& regime_id) const;
  std::string to_text() const;

 private:
  Map values_;
};

// A CI query whose first argument is fully stochastic (no regime nodes);
// regime nodes may appear in y and z.
struct EciQuery {
  CiQuery query;

  static EciQuery validated(const Dag& g, CiQuery q);
};

// Extended conditional independence: the same moralisation computation, after
// enforcing the stochastic-x restriction.
CiVerdict query_eci(const Dag& g, const CiQuery& q);

// Adds a regime node F_<target> with edge F_<target> -> target for each
// target. Targets must be Domain nodes without an existing regime parent.
Dag augment(const Dag& g, const std::set<std::string>& targets);

// Augments every Domain node of a regime-free graph.
Dag pearl_augment(const Dag& g);

// A Dag with regime nodes plus surgical CPTs: each domain node with a regime
// parent carries that parent as its last formal parent; idle rows equal the
// observational CPT and set-to-v rows are point masses at v.
class AugmentedBayesNet {
 public:
  AugmentedBayesNet() = default;

  // Validates the surgical structure of the supplied CPTs.
  static AugmentedBayesNet build(Dag dag, std::vector<Cpt> cpts);

  // Mechanical construction: augment the net's graph at `targets` and extend
  // the CPTs surgically.
  static AugmentedBayesNet from_observational(const BayesNet& bn,
                                              const std::set<std::string>& targets);

  // Same, for a graph that already carries regime nodes and observational
  // (regime-free) CPTs.
  static AugmentedBayesNet from_observational(Dag dag, std::vector<Cpt> observational_cpts);

  // Strips regime nodes and keeps the idle slices: the observational net.
  BayesNet observational() const;

  const Dag& dag() const { return dag_; }
  const Cpt& cpt(const std::string& node) const;
  const std::vector<Cpt>& cpts() const { return cpts_; }

 private:
  Dag dag_;
  std::vector<Cpt> cpts_;  // one per non-regime node, in dag node order
  std::map<std::string, int> slot_;
};

// Joint over Domain and Error nodes by truncated factorisation: intervened
// nodes contribute point masses, idle nodes their observational CPT.
JointTable interventional_joint(const AugmentedBayesNet& abn, const RegimeAssignment& r,
                                std::uint64_t max_cells = default_max_cells());

// The regime node targeting `domain_id`; SemanticError if there is none.
std::string regime_node_for(const Dag& g, const std::string& domain_id);

// effect independent of F_cause given cause (the modular-transfer property).
bool check_ignorability(const Dag& g, const std::string& cause,
                        const std::set<std::string>& effect);

// effect independent of F_cause marginally.
bool no_causal_effect(const Dag& g, const std::string& cause,
                      const std::set<std::string>& effect);

}  // namespace cde
