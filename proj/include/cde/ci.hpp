#pragma once

#include <set>
#include <string>
#include <vector>

#include "cde/graph.hpp"

namespace cde {

enum class CiMethod { Moralisation, DSeparation };

// Answer to a representation query. When represented is false the witness is
// a concrete unblocked connection: a moral-graph path for Moralisation, an
// active walk in the directed graph for DSeparation. Witnesses are
// diagnostic only and excluded from comparisons.
struct CiVerdict {
  bool represented = false;
  CiMethod method = CiMethod::Moralisation;
  std::vector<std::string> witness;
};

// The three-step criterion: ancestral subgraph, moralisation, separation.
CiVerdict query_ci_moral(const Dag& g, const CiQuery& q);

// Path-blocking criterion; agrees with query_ci_moral on all inputs.
CiVerdict query_ci_dsep(const Dag& g, const CiQuery& q);

// All represented queries with |x|,|y| <= max_query_size (z unrestricted),
// in canonical form. Guarded to graphs of <= 8 nodes.
std::set<CiQuery> represented_ci_set(const Dag& g, int max_query_size);

// Same skeleton and same immoralities. Requires identical node-id sets.
bool markov_equivalent(const Dag& g1, const Dag& g2);

// All orientations of skeleton(g) that are acyclic, keep edges at Regime and
// Error nodes outgoing (so every member is a graph of the same kind-signature
// as g), and have the same immorality set. Deterministically ordered; g is a
// member. Guarded by the number of orientable (Domain-Domain) edges.
std::vector<Dag> enumerate_equivalence_class(const Dag& g);

}  // namespace cde
