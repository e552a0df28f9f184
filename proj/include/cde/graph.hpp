#pragma once

#include <compare>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cde/errors.hpp"

namespace cde {

enum class NodeKind { Domain, Regime, Error };

// A typed vertex. Regime nodes carry the id of the domain variable they
// control; their cardinality is the target's cardinality plus one, the extra
// (last) state being "idle". Cardinality is the number of states, >= 2.
struct Node {
  std::string id;
  NodeKind kind = NodeKind::Domain;
  int cardinality = 2;
  std::string regime_target;  // meaningful for Regime nodes only

  friend bool operator==(const Node&, const Node&) = default;
};

inline Node domain_node(std::string id, int cardinality = 2) {
  return Node{std::move(id), NodeKind::Domain, cardinality, {}};
}
inline Node error_node(std::string id, int cardinality = 2) {
  return Node{std::move(id), NodeKind::Error, cardinality, {}};
}
// Cardinality is derived from the target at build time.
inline Node regime_node(std::string id, std::string target) {
  return Node{std::move(id), NodeKind::Regime, 0, std::move(target)};
}

// Index of the idle state of a regime node (the last one).
inline int idle_state(const Node& regime) { return regime.cardinality - 1; }

// Immutable directed acyclic graph over typed nodes.
//
// `build` enforces the full typed invariants: unique ids, no self loops or
// duplicate edges, acyclicity, Regime/Error nodes exogenous, every Regime
// node pointing at its (existing, Domain, uniquely claimed) target.
// Graphs derived by `ancestral_subgraph` keep node labels but may have a
// regime node's target pruned away; all purely structural invariants still
// hold, and every operation here treats node kinds as inert labels.
class Dag {
 public:
  Dag() = default;

  static Dag build(std::vector<Node> nodes,
                   std::vector<std::pair<std::string, std::string>> edges);

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int i) const { return nodes_[static_cast<size_t>(i)]; }
  const Node& node(const std::string& id) const { return nodes_[static_cast<size_t>(index_of(id))]; }

  bool has_node(const std::string& id) const { return index_.count(id) != 0; }
  // Throws QueryError for unknown ids.
  int index_of(const std::string& id) const;

  const std::vector<int>& parents(int i) const { return parents_[static_cast<size_t>(i)]; }
  const std::vector<int>& children(int i) const { return children_[static_cast<size_t>(i)]; }
  bool has_edge(int from, int to) const;
  bool adjacent(int a, int b) const { return has_edge(a, b) || has_edge(b, a); }
  // Sorted by (parent index, child index).
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  std::vector<std::pair<std::string, std::string>> edge_ids() const;

  // A fixed topological order (computed at construction).
  const std::vector<int>& topological_order() const { return topo_; }

  // Node sequence and edge set both equal.
  friend bool operator==(const Dag& a, const Dag& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  friend Dag ancestral_subgraph_impl(const Dag&, const std::vector<int>&);
  friend std::vector<Dag> enumerate_equivalence_class(const Dag&);

  // Construction path for graphs derived from an already-validated Dag;
  // checks structure (ids, loops, duplicates, exogeneity, acyclicity) but
  // tolerates a pruned regime target.
  static Dag build_relaxed(std::vector<Node> nodes,
                           std::vector<std::pair<std::string, std::string>> edges);
  static Dag build_impl(std::vector<Node> nodes,
                        std::vector<std::pair<std::string, std::string>> edges,
                        bool typed_checks);
  void finish(std::vector<std::pair<int, int>> idx_edges, bool typed_checks);

  std::vector<Node> nodes_;
  std::map<std::string, int> index_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<int> topo_;
};

// The unit of every semantic question: is x independent of y given z?
// Sides are kept sorted and deduplicated; x and y must be nonempty and the
// three sides pairwise disjoint (checked by validate/of).
struct CiQuery {
  std::vector<std::string> x;
  std::vector<std::string> y;
  std::vector<std::string> z;

  static CiQuery of(std::vector<std::string> x, std::vector<std::string> y,
                    std::vector<std::string> z = {});

  // Disjointness, nonempty x/y, and membership in g. Throws QueryError.
  void validate(const Dag& g) const;

  // CI is symmetric in (x, y); the canonical form orders the two sides
  // lexicographically so symmetric duplicates compare equal.
  CiQuery canonical() const;

  auto operator<=>(const CiQuery&) const = default;
};

class UndirectedGraph {
 public:
  UndirectedGraph() = default;

  static UndirectedGraph build(std::vector<std::string> nodes,
                               std::vector<std::pair<std::string, std::string>> edges);

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<std::string>& node_ids() const { return nodes_; }
  bool has_node(const std::string& id) const { return index_.count(id) != 0; }
  int index_of(const std::string& id) const;
  bool adjacent(int a, int b) const;
  const std::vector<int>& neighbors(int i) const { return adj_[static_cast<size_t>(i)]; }
  // Canonical (min,max) index pairs, sorted.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  // Deterministic sorted serialization, for golden tests.
  std::string to_text() const;

  // Set semantics: same node set and same edge set (node order irrelevant).
  friend bool operator==(const UndirectedGraph& a, const UndirectedGraph& b);

 private:
  std::vector<std::string> nodes_;
  std::map<std::string, int> index_;
  std::vector<std::vector<int>> adj_;
  std::vector<std::pair<int, int>> edges_;
};

// An a -> c <- b configuration with a, b not adjacent. The parent pair is
// stored unordered (parent_a < parent_b).
struct Immorality {
  std::string parent_a;
  std::string parent_b;
  std::string child;

  auto operator<=>(const Immorality&) const = default;
};

std::string to_text(const std::set<Immorality>& imms);

// s together with every node from which a directed path reaches s.
std::set<std::string> ancestors(const Dag& g, const std::set<std::string>& s);

// Nodes mentioned by q plus their ancestors; edges restricted accordingly.
Dag ancestral_subgraph(const Dag& g, const CiQuery& q);

// One undirected edge per directed edge plus one per immorality.
UndirectedGraph moralise(const Dag& g);

// Adjacency of g with directions dropped.
UndirectedGraph skeleton(const Dag& g);

std::set<Immorality> immoralities(const Dag& g);

// True iff every path from x to y intersects z, i.e. x and y fall in
// different components once z is deleted.
bool u_separated(const UndirectedGraph& g, const std::set<std::string>& x,
                 const std::set<std::string>& y, const std::set<std::string>& z);

// A shortest x-to-y path avoiding z, if any. Same preconditions as
// u_separated; empty result means separated.
std::vector<std::string> u_connecting_path(const UndirectedGraph& g,
                                           const std::set<std::string>& x,
                                           const std::set<std::string>& y,
                                           const std::set<std::string>& z);

}  // namespace cde
