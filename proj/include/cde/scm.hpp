#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cde/bayes_net.hpp"
#include "cde/graph.hpp"
#include "cde/regimes.hpp"

namespace cde {

// Atomic distribution of an Error node: (probability, state) pairs with
// distinct states, probabilities summing to 1. States absent from the list
// have probability zero.
struct ErrorAtom {
  double p = 0.0;
  int value = 0;

  friend bool operator==(const ErrorAtom&, const ErrorAtom&) = default;
};

struct ErrorSpec {
  std::string node;
  std::vector<ErrorAtom> atoms;

  friend bool operator==(const ErrorSpec&, const ErrorSpec&) = default;
};

// Deterministic mechanism of a Domain node: one output state per joint parent
// state. parent_order lists the domain parents in graph order followed by the
// error parent; the table is row-major with the last parent fastest.
struct StructuralFunction {
  std::string node;
  std::vector<std::string> parent_order;
  std::vector<int> table;

  friend bool operator==(const StructuralFunction&, const StructuralFunction&) = default;
};

// Structural model: a Dag over Domain + Error (+ optionally Regime) nodes,
// one atomic distribution per error node, one function per domain node.
// Every domain node has exactly one error parent and every error node feeds
// exactly one domain node; all stochasticity lives in the errors.
class Scm {
 public:
  Scm() = default;
  static Scm build(Dag dag, std::vector<ErrorSpec> errors,
                   std::vector<StructuralFunction> functions);

  const Dag& dag() const { return dag_; }
  const ErrorSpec& error(const std::string& node) const;
  const StructuralFunction& function(const std::string& node) const;
  const std::vector<ErrorSpec>& errors() const { return errors_; }
  const std::vector<StructuralFunction>& functions() const { return functions_; }

  friend bool operator==(const Scm& a, const Scm& b) {
    return a.dag_ == b.dag_ && a.errors_ == b.errors_ && a.functions_ == b.functions_;
  }

 private:
  Dag dag_;
  std::vector<ErrorSpec> errors_;
  std::vector<StructuralFunction> functions_;
  std::map<std::string, int> error_slot_;
  std::map<std::string, int> function_slot_;
};

// Joint law of the per-parent-configuration responses of one node: a dense
// table over response tuples (one component per parent configuration of that
// node, configuration 0 slowest, last fastest). Marginal i must match CPT
// row i of the node it is built for.
struct ResponseCoupling {
  int configs = 1;
  int outcome_card = 2;
  std::vector<double> table;  // size outcome_card^configs

  double& at(const std::vector<int>& tuple);
  double at(const std::vector<int>& tuple) const;
  std::vector<double> marginal(int config) const;
};

// Joint law of the potential responses (Y_x) of `outcome` under every value x
// of `cause`, all other regimes idle. Row-major over (Y_0, ..., Y_{K-1}),
// last component fastest. `degenerate` flags a cause that is not an ancestor
// of the outcome (all components then coincide).
struct PotentialResponseJoint {
  std::string cause;
  std::string outcome;
  int cause_card = 2;
  int outcome_card = 2;
  std::vector<double> table;
  bool degenerate = false;

  double prob(const std::vector<int>& responses) const;
  // Marginal law of Y_x.
  std::vector<double> response_marginal(int x) const;
};

// Inverse-transform construction: one fresh error node E_<V> per domain node,
// atoms at the distinct conditional-CDF breakpoints across all parent rows,
// and f(pa, e) the generalized-inverse lookup. The result reproduces
// joint(bn) exactly (up to rounding).
Scm build_spm(const BayesNet& bn, std::uint64_t max_cells = default_max_cells());

// Same, but the designated node's error encodes a full response tuple with
// the given dependence across parent configurations. Coupling marginals must
// match the node's CPT rows within 1e-9.
Scm build_spm_copula(const BayesNet& bn, const std::string& node,
                     const ResponseCoupling& coupling,
                     std::uint64_t max_cells = default_max_cells());

// Distribution over Domain nodes induced by pushing the error atoms through
// the functions, with regime-intervened nodes overridden to their set values.
JointTable spm_joint(const Scm& s, const RegimeAssignment& r,
                     std::uint64_t max_cells = default_max_cells());

// Observational shorthand: every regime (if any) idle.
JointTable spm_joint(const Scm& s, std::uint64_t max_cells = default_max_cells());

PotentialResponseJoint potential_response_joint(const Scm& s, const std::string& cause,
                                                const std::string& outcome,
                                                std::uint64_t max_cells = default_max_cells());

// PC = P(Y_0 = 0 | X = 1, Y_1 = 1) for binary cause X and outcome Y, by
// enumeration over error configurations; the factual X is evaluated under the
// all-idle regime.
double probability_of_causation(const Scm& s, const std::string& cause,
                                const std::string& outcome,
                                std::uint64_t max_cells = default_max_cells());

struct PcBounds {
  double lower = 0.0;
  double upper = 1.0;
};

// Sharp interval for PC given only p0 = p(Y=1|X=0) and p1 = p(Y=1|X=1),
// assuming ignorability (the law of Y_x equals p(Y|X=x)). Both endpoints are
// attained: lower by the comonotone coupling, upper by the antitone one.
PcBounds pc_bounds(double p_y1_given_x0, double p_y1_given_x1);

// Coupling constructors over the rows of a CPT (each row a distribution over
// the same outcome). `rows` are indexed by parent configuration.
ResponseCoupling independent_coupling(const std::vector<std::vector<double>>& rows);
ResponseCoupling comonotone_coupling(const std::vector<std::vector<double>>& rows);
// Exactly two configurations; couples the first row with the reversed uniform.
ResponseCoupling antitone_coupling(const std::vector<double>& row0,
                                   const std::vector<double>& row1);

}  // namespace cde
