#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cde/graph.hpp"

namespace cde {

// Conditional probability table for one node. Rows are indexed row-major over
// parent_order with the last parent varying fastest; each row is a
// distribution over the node's states.
struct Cpt {
  std::string node;
  std::vector<std::string> parent_order;
  std::vector<std::vector<double>> table;

  friend bool operator==(const Cpt&, const Cpt&) = default;
};

// Dense distribution over a tuple of variables, row-major with the last
// variable varying fastest.
struct JointTable {
  std::vector<std::string> variable_order;
  std::vector<int> cards;
  std::vector<double> probabilities;

  std::size_t cell_count() const { return probabilities.size(); }
  std::size_t index_of(const std::vector<int>& states) const;
  std::vector<int> states_at(std::size_t index) const;
  double at(const std::vector<int>& states) const { return probabilities[index_of(states)]; }
  double sum() const;
};

// Maximum joint-table size honoured by the enumeration kernels. Reads
// CDE_MAX_CELLS once; defaults to 2^24.
std::uint64_t default_max_cells();

// A Dag over Domain and Error nodes plus one CPT per node.
class BayesNet {
 public:
  BayesNet() = default;
  static BayesNet build(Dag dag, std::vector<Cpt> cpts);

  const Dag& dag() const { return dag_; }
  const Cpt& cpt(const std::string& node) const;
  const std::vector<Cpt>& cpts() const { return cpts_; }

  friend bool operator==(const BayesNet& a, const BayesNet& b) {
    return a.dag_ == b.dag_ && a.cpts_ == b.cpts_;
  }

 private:
  Dag dag_;
  std::vector<Cpt> cpts_;            // in dag node order
  std::map<std::string, int> slot_;  // node id -> position in cpts_
};

// Validates a CPT against a dag: parents must match the node's non-regime dag
// parents in dag node order (with an optional regime parent appended last,
// used by augmented nets), rows must be distributions.
void validate_cpt(const Dag& dag, const Cpt& cpt, bool allow_regime_parent_last = false);

// Full joint by brute-force factorisation.
JointTable joint(const BayesNet& bn, std::uint64_t max_cells = default_max_cells());

// Marginal over vars (in dag node order) by variable elimination with a
// min-degree heuristic; deterministic tie-break by node index.
JointTable marginal(const BayesNet& bn, const std::set<std::string>& vars,
                    std::uint64_t max_cells = default_max_cells());

using Assignment = std::map<std::string, int>;

// Renormalised slice of the joint at `given`.
JointTable conditional(const BayesNet& bn, const std::set<std::string>& target,
                       const Assignment& given, std::uint64_t max_cells = default_max_cells());

// Numeric conditional-independence check: true iff for every z slice with
// p(z) > 1e-12, |p(x,y|z) - p(x|z)p(y|z)| <= tol cell-wise.
bool holds_in_distribution(const BayesNet& bn, const CiQuery& q, double tol,
                           std::uint64_t max_cells = default_max_cells());

std::string to_json(const JointTable& t);

}  // namespace cde
