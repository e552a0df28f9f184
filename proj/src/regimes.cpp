#include "cde/regimes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cde {

RegimeAssignment RegimeAssignment::all_idle(const Dag& g) {
  Map m;
  for (const auto& nd : g.nodes())
    if (nd.kind == NodeKind::Regime) m[nd.id] = std::nullopt;
  RegimeAssignment r;
  r.values_ = std::move(m);
  return r;
}

RegimeAssignment RegimeAssignment::build(const Dag& g, Map values) {
  for (const auto& nd : g.nodes()) {
    if (nd.kind != NodeKind::Regime) continue;
    auto it = values.find(nd.id);
    if (it == values.end())
      throw SemanticError("regime assignment missing regime node: " + nd.id);
    if (it->second) {
      int target_card = g.node(nd.regime_target).cardinality;
      if (*it->second < 0 || *it->second >= target_card)
        throw SemanticError("regime value out of range for " + nd.id);
    }
  }
  for (const auto& [id, v] : values) {
    if (!g.has_node(id) || g.node(id).kind != NodeKind::Regime)
      throw SemanticError("regime assignment names a non-regime node: " + id);
  }
  RegimeAssignment r;
  r.values_ = std::move(values);
  return r;
}

bool RegimeAssignment::is_idle(const std::string& regime_id) const {
  auto it = values_.find(regime_id);
  if (it == values_.end()) throw SemanticError("not a regime node of this assignment: " + regime_id);
  return !it->second.has_value();
}

std::string RegimeAssignment::to_text() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [id, v] : values_) {
    if (!first) os << ' ';
    first = false;
    os << id << '=';
    if (v)
      os << *v;
    else
      os << "idle";
  }
  return os.str();
}

EciQuery EciQuery::validated(const Dag& g, CiQuery q) {
  q.validate(g);
  for (const auto& id : q.x)
    if (g.node(id).kind == NodeKind::Regime)
      throw SemanticError("first argument must be fully stochastic; regime node in x: " + id);
  return EciQuery{std::move(q)};
}

CiVerdict query_eci(const Dag& g, const CiQuery& q) {
  EciQuery eq = EciQuery::validated(g, q);
  return query_ci_moral(g, eq.query);
}

Dag augment(const Dag& g, const std::set<std::string>& targets) {
  std::set<std::string> existing_targets;
  for (const auto& nd : g.nodes())
    if (nd.kind == NodeKind::Regime) existing_targets.insert(nd.regime_target);

  std::vector<Node> nodes = g.nodes();
  std::vector<std::pair<std::string, std::string>> edges = g.edge_ids();
  for (const auto& nd : g.nodes()) {
    if (!targets.count(nd.id)) continue;
    if (nd.kind != NodeKind::Domain)
      throw SemanticError("augment target must be a domain node: " + nd.id);
    if (existing_targets.count(nd.id))
      throw SemanticError("domain node already has a regime node: " + nd.id);
    std::string fid = "F_" + nd.id;
    if (g.has_node(fid))
      throw SemanticError("regime node id already taken: " + fid);
    nodes.push_back(regime_node(fid, nd.id));
    edges.emplace_back(fid, nd.id);
  }
  for (const auto& t : targets)
    if (!g.has_node(t)) throw QueryError("unknown node id: " + t);
  return Dag::build(std::move(nodes), std::move(edges));
}

Dag pearl_augment(const Dag& g) {
  std::set<std::string> targets;
  for (const auto& nd : g.nodes()) {
    if (nd.kind == NodeKind::Regime)
      throw SemanticError("pearl_augment requires a graph without regime nodes");
    if (nd.kind == NodeKind::Domain) targets.insert(nd.id);
  }
  return augment(g, targets);
}

namespace {

// Indices of the regime parent (or -1) for every node.
std::vector<int> regime_parent_index(const Dag& g) {
  std::vector<int> out(static_cast<size_t>(g.size()), -1);
  for (int i = 0; i < g.size(); ++i)
    for (int p : g.parents(i))
      if (g.node(p).kind == NodeKind::Regime) out[static_cast<size_t>(i)] = p;
  return out;
}

}  // namespace

AugmentedBayesNet AugmentedBayesNet::build(Dag dag, std::vector<Cpt> cpts) {
  AugmentedBayesNet abn;
  abn.dag_ = std::move(dag);
  const Dag& g = abn.dag_;
  std::vector<char> seen(static_cast<size_t>(g.size()), 0);
  std::vector<int> regime_of = regime_parent_index(g);
  std::map<int, Cpt> by_idx;
  for (auto& c : cpts) {
    int i = g.index_of(c.node);
    if (seen[static_cast<size_t>(i)]) throw GraphError("duplicate cpt for node: " + c.node);
    validate_cpt(g, c, /*allow_regime_parent_last=*/true);
    int rp = regime_of[static_cast<size_t>(i)];
    if (rp >= 0) {
      // Surgical structure: last parent is the regime node; check its rows.
      if (c.parent_order.empty() || c.parent_order.back() != g.node(rp).id)
        throw GraphError("cpt for " + c.node + " must carry its regime parent last");
      const int card = g.node(i).cardinality;
      const int fcard = g.node(rp).cardinality;  // card + 1
      const std::size_t obs_rows = c.table.size() / static_cast<std::size_t>(fcard);
      for (std::size_t row = 0; row < obs_rows; ++row) {
        for (int f = 0; f < card; ++f) {
          const auto& r = c.table[row * static_cast<std::size_t>(fcard) + static_cast<std::size_t>(f)];
          for (int v = 0; v < card; ++v)
            if (r[static_cast<size_t>(v)] != (v == f ? 1.0 : 0.0))
              throw GraphError("cpt for " + c.node +
                               " is not surgical under its regime parent");
        }
      }
    }
    seen[static_cast<size_t>(i)] = 1;
    by_idx[i] = std::move(c);
  }
  for (int i = 0; i < g.size(); ++i) {
    if (g.node(i).kind == NodeKind::Regime) continue;
    if (!seen[static_cast<size_t>(i)])
      throw GraphError("missing cpt for node: " + g.node(i).id);
  }
  for (auto& [i, c] : by_idx) {
    abn.slot_[c.node] = static_cast<int>(abn.cpts_.size());
    abn.cpts_.push_back(std::move(c));
  }
  return abn;
}

AugmentedBayesNet AugmentedBayesNet::from_observational(const BayesNet& bn,
                                                        const std::set<std::string>& targets) {
  return from_observational(augment(bn.dag(), targets), bn.cpts());
}

AugmentedBayesNet AugmentedBayesNet::from_observational(Dag dag,
                                                        std::vector<Cpt> observational_cpts) {
  const std::vector<int> regime_of = regime_parent_index(dag);
  std::vector<Cpt> cpts;
  cpts.reserve(observational_cpts.size());
  for (auto& c : observational_cpts) {
    int i = dag.index_of(c.node);
    validate_cpt(dag, c, /*allow_regime_parent_last=*/false);
    int rp = regime_of[static_cast<size_t>(i)];
    if (rp < 0) {
      cpts.push_back(std::move(c));
      continue;
    }
    const int card = dag.node(i).cardinality;
    const int fcard = dag.node(rp).cardinality;
    Cpt aug;
    aug.node = c.node;
    aug.parent_order = c.parent_order;
    aug.parent_order.push_back(dag.node(rp).id);
    aug.table.reserve(c.table.size() * static_cast<std::size_t>(fcard));
    for (const auto& row : c.table) {
      for (int f = 0; f < fcard; ++f) {
        if (f == card) {
          aug.table.push_back(row);  // idle
        } else {
          std::vector<double> point(static_cast<size_t>(card), 0.0);
          point[static_cast<size_t>(f)] = 1.0;
          aug.table.push_back(std::move(point));
        }
      }
    }
    cpts.push_back(std::move(aug));
  }
  return build(std::move(dag), std::move(cpts));
}

BayesNet AugmentedBayesNet::observational() const {
  std::vector<Node> nodes;
  for (const auto& nd : dag_.nodes())
    if (nd.kind != NodeKind::Regime) nodes.push_back(nd);
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& [f, t] : dag_.edge_ids())
    if (dag_.node(f).kind != NodeKind::Regime) edges.emplace_back(f, t);
  Dag plain = Dag::build(std::move(nodes), std::move(edges));

  const std::vector<int> regime_of = regime_parent_index(dag_);
  std::vector<Cpt> cpts;
  for (int i = 0; i < dag_.size(); ++i) {
    if (dag_.node(i).kind == NodeKind::Regime) continue;
    const Cpt& c = cpt(dag_.node(i).id);
    int rp = regime_of[static_cast<size_t>(i)];
    if (rp < 0) {
      cpts.push_back(c);
      continue;
    }
    const int card = dag_.node(i).cardinality;
    const int fcard = dag_.node(rp).cardinality;
    Cpt obs;
    obs.node = c.node;
    obs.parent_order = c.parent_order;
    obs.parent_order.pop_back();
    const std::size_t obs_rows = c.table.size() / static_cast<std::size_t>(fcard);
    obs.table.reserve(obs_rows);
    for (std::size_t row = 0; row < obs_rows; ++row)
      obs.table.push_back(c.table[row * static_cast<std::size_t>(fcard) +
                                  static_cast<std::size_t>(card)]);
    cpts.push_back(std::move(obs));
  }
  return BayesNet::build(std::move(plain), std::move(cpts));
}

const Cpt& AugmentedBayesNet::cpt(const std::string& node) const {
  auto it = slot_.find(node);
  if (it == slot_.end()) throw QueryError("no cpt for node: " + node);
  return cpts_[static_cast<size_t>(it->second)];
}

JointTable interventional_joint(const AugmentedBayesNet& abn, const RegimeAssignment& r,
                                std::uint64_t max_cells) {
  const Dag& g = abn.dag();
  RegimeAssignment::Map check = r.values();  // validated below via build
  RegimeAssignment valid = RegimeAssignment::build(g, std::move(check));

  // Overridden value per node (-1 = none).
  std::vector<int> forced(static_cast<size_t>(g.size()), -1);
  for (const auto& [fid, v] : valid.values()) {
    if (!v) continue;
    forced[static_cast<size_t>(g.index_of(g.node(fid).regime_target))] = *v;
  }

  JointTable t;
  std::vector<int> vars;
  for (int i = 0; i < g.size(); ++i) {
    if (g.node(i).kind == NodeKind::Regime) continue;
    vars.push_back(i);
    t.variable_order.push_back(g.node(i).id);
    t.cards.push_back(g.node(i).cardinality);
  }
  std::uint64_t cells = 1;
  for (int c : t.cards) {
    cells *= static_cast<std::uint64_t>(c);
    if (cells > max_cells) throw CapacityError("state space exceeds the cell limit");
  }
  t.probabilities.assign(static_cast<std::size_t>(cells), 0.0);

  std::vector<int> state_of(static_cast<size_t>(g.size()), 0);
  std::vector<int> states(vars.size(), 0);
  for (std::size_t cell = 0; cell < t.probabilities.size(); ++cell) {
    for (std::size_t i = 0; i < vars.size(); ++i)
      state_of[static_cast<size_t>(vars[i])] = states[i];
    double p = 1.0;
    for (std::size_t i = 0; i < vars.size() && p > 0.0; ++i) {
      const int v = vars[i];
      const int fv = forced[static_cast<size_t>(v)];
      if (fv >= 0) {
        // Truncated factorisation: the intervened node contributes a point
        // mass regardless of its parents.
        if (states[i] != fv) p = 0.0;
        continue;
      }
      const Cpt& c = abn.cpt(g.node(v).id);
      std::size_t row = 0;
      for (const auto& pid : c.parent_order) {
        int pi = g.index_of(pid);
        const Node& pn = g.node(pi);
        int pstate;
        if (pn.kind == NodeKind::Regime) {
          // Idle slice: the regime dimension of an un-intervened node.
          pstate = idle_state(pn);
        } else {
          pstate = state_of[static_cast<size_t>(pi)];
        }
        row = row * static_cast<std::size_t>(pn.cardinality) + static_cast<std::size_t>(pstate);
      }
      p *= c.table[row][static_cast<size_t>(states[i])];
    }
    t.probabilities[cell] = p;
    for (std::size_t i = vars.size(); i-- > 0;) {
      if (++states[i] < t.cards[i]) break;
      states[i] = 0;
      if (i == 0) break;
    }
  }
  return t;
}

std::string regime_node_for(const Dag& g, const std::string& domain_id) {
  int i = g.index_of(domain_id);
  for (int p : g.parents(i))
    if (g.node(p).kind == NodeKind::Regime) return g.node(p).id;
  throw SemanticError("node has no regime parent: " + domain_id);
}

bool check_ignorability(const Dag& g, const std::string& cause,
                        const std::set<std::string>& effect) {
  std::string f = regime_node_for(g, cause);
  CiQuery q = CiQuery::of(std::vector<std::string>(effect.begin(), effect.end()), {f}, {cause});
  return query_eci(g, q).represented;
}

bool no_causal_effect(const Dag& g, const std::string& cause,
                      const std::set<std::string>& effect) {
  std::string f = regime_node_for(g, cause);
  CiQuery q = CiQuery::of(std::vector<std::string>(effect.begin(), effect.end()), {f});
  return query_eci(g, q).represented;
}

}  // namespace cde
