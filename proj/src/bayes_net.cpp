#include "cde/bayes_net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "json.hpp"

namespace cde {

namespace {

constexpr double kRowSumTol = 1e-9;
constexpr double kPositivity = 1e-12;

std::uint64_t checked_cells(const std::vector<int>& cards, std::uint64_t max_cells) {
  std::uint64_t cells = 1;
  for (int c : cards) {
    cells *= static_cast<std::uint64_t>(c);
    if (cells > max_cells) throw CapacityError("state space exceeds the cell limit");
  }
  return cells;
}

}  // namespace

std::size_t JointTable::index_of(const std::vector<int>& states) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < cards.size(); ++i)
    idx = idx * static_cast<std::size_t>(cards[i]) + static_cast<std::size_t>(states[i]);
  return idx;
}

std::vector<int> JointTable::states_at(std::size_t index) const {
  std::vector<int> s(cards.size());
  for (std::size_t i = cards.size(); i-- > 0;) {
    s[i] = static_cast<int>(index % static_cast<std::size_t>(cards[i]));
    index /= static_cast<std::size_t>(cards[i]);
  }
  return s;
}

double JointTable::sum() const {
  double t = 0.0;
  for (double p : probabilities) t += p;
  return t;
}

std::uint64_t default_max_cells() {
  static const std::uint64_t value = [] {
    if (const char* env = std::getenv("CDE_MAX_CELLS")) {
      char* end = nullptr;
      unsigned long long v = std::strtoull(env, &end, 10);
      if (end && *end == '\0' && v > 0) return static_cast<std::uint64_t>(v);
    }
    return std::uint64_t{1} << 24;
  }();
  return value;
}

void validate_cpt(const Dag& dag, const Cpt& cpt, bool allow_regime_parent_last) {
  int node_idx = dag.index_of(cpt.node);
  const Node& node = dag.node(node_idx);
  if (node.kind == NodeKind::Regime)
    throw GraphError("regime node cannot carry a CPT: " + cpt.node);

  std::vector<std::string> expected;
  std::string regime_parent;
  for (int p : dag.parents(node_idx)) {
    if (dag.node(p).kind == NodeKind::Regime)
      regime_parent = dag.node(p).id;
    else
      expected.push_back(dag.node(p).id);
  }
  if (allow_regime_parent_last && !regime_parent.empty()) expected.push_back(regime_parent);
  if (cpt.parent_order != expected) {
    std::string want;
    for (const auto& id : expected) want += (want.empty() ? "" : ",") + id;
    throw GraphError("cpt for " + cpt.node + " must list parents in graph order: " +
                     (want.empty() ? "(none)" : want));
  }

  std::size_t rows = 1;
  for (const auto& pid : cpt.parent_order)
    rows *= static_cast<std::size_t>(dag.node(pid).cardinality);
  if (cpt.table.size() != rows)
    throw GraphError("cpt for " + cpt.node + " has " + std::to_string(cpt.table.size()) +
                     " rows, expected " + std::to_string(rows));
  for (const auto& row : cpt.table) {
    if (row.size() != static_cast<std::size_t>(node.cardinality))
      throw GraphError("cpt row for " + cpt.node + " has wrong length");
    double s = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw GraphError("negative probability in cpt for " + cpt.node);
      s += p;
    }
    if (std::abs(s - 1.0) > kRowSumTol)
      throw GraphError("cpt row for " + cpt.node + " does not sum to 1");
  }
}

BayesNet BayesNet::build(Dag dag, std::vector<Cpt> cpts) {
  for (const auto& nd : dag.nodes())
    if (nd.kind == NodeKind::Regime)
      throw GraphError("BayesNet cannot contain regime nodes (node " + nd.id + ")");
  BayesNet bn;
  bn.dag_ = std::move(dag);
  bn.cpts_.resize(static_cast<size_t>(bn.dag_.size()));
  std::vector<char> seen(static_cast<size_t>(bn.dag_.size()), 0);
  for (auto& c : cpts) {
    int i = bn.dag_.index_of(c.node);
    if (seen[static_cast<size_t>(i)]) throw GraphError("duplicate cpt for node: " + c.node);
    validate_cpt(bn.dag_, c);
    seen[static_cast<size_t>(i)] = 1;
    bn.cpts_[static_cast<size_t>(i)] = std::move(c);
  }
  for (int i = 0; i < bn.dag_.size(); ++i)
    if (!seen[static_cast<size_t>(i)])
      throw GraphError("missing cpt for node: " + bn.dag_.node(i).id);
  for (int i = 0; i < bn.dag_.size(); ++i) bn.slot_[bn.dag_.node(i).id] = i;
  return bn;
}

const Cpt& BayesNet::cpt(const std::string& node) const {
  auto it = slot_.find(node);
  if (it == slot_.end()) throw QueryError("unknown node id: " + node);
  return cpts_[static_cast<size_t>(it->second)];
}

JointTable joint(const BayesNet& bn, std::uint64_t max_cells) {
  const Dag& g = bn.dag();
  JointTable t;
  for (const auto& nd : g.nodes()) {
    t.variable_order.push_back(nd.id);
    t.cards.push_back(nd.cardinality);
  }
  std::uint64_t cells = checked_cells(t.cards, max_cells);
  t.probabilities.assign(static_cast<std::size_t>(cells), 0.0);

  // Per-node parent row strides against the full state vector.
  const int n = g.size();
  std::vector<int> states(static_cast<size_t>(n), 0);
  for (std::size_t cell = 0; cell < t.probabilities.size(); ++cell) {
    double p = 1.0;
    for (int v = 0; v < n && p > 0.0; ++v) {
      const Cpt& c = bn.cpts()[static_cast<size_t>(v)];
      std::size_t row = 0;
      for (const auto& pid : c.parent_order) {
        int pi = g.index_of(pid);
        row = row * static_cast<std::size_t>(g.node(pi).cardinality) +
              static_cast<std::size_t>(states[static_cast<size_t>(pi)]);
      }
      p *= c.table[row][static_cast<size_t>(states[static_cast<size_t>(v)])];
    }
    t.probabilities[cell] = p;
    // Odometer increment, last variable fastest.
    for (int i = n - 1; i >= 0; --i) {
      if (++states[static_cast<size_t>(i)] < t.cards[static_cast<size_t>(i)]) break;
      states[static_cast<size_t>(i)] = 0;
    }
  }
  return t;
}

namespace {

// Dense factor over a sorted list of node indices.
struct Factor {
  std::vector<int> vars;   // dag node indices, ascending
  std::vector<int> cards;  // matching cardinalities
  std::vector<double> values;
};

Factor factor_from_cpt(const Dag& g, const Cpt& c, std::uint64_t max_cells) {
  Factor f;
  std::vector<int> raw;  // parent indices then the node itself, in cpt order
  for (const auto& pid : c.parent_order) raw.push_back(g.index_of(pid));
  int self = g.index_of(c.node);
  raw.push_back(self);
  f.vars = raw;
  std::sort(f.vars.begin(), f.vars.end());
  for (int v : f.vars) f.cards.push_back(g.node(v).cardinality);
  std::uint64_t cells = checked_cells(f.cards, max_cells);
  f.values.assign(static_cast<std::size_t>(cells), 0.0);

  // Walk the cpt layout and scatter into the sorted layout.
  std::vector<int> pos(raw.size());  // position of raw[i] within f.vars
  for (std::size_t i = 0; i < raw.size(); ++i)
    pos[i] = static_cast<int>(std::lower_bound(f.vars.begin(), f.vars.end(), raw[i]) -
                              f.vars.begin());
  std::vector<int> states(raw.size(), 0);  // in raw order
  const std::size_t rows = c.table.size();
  const std::size_t card_self = static_cast<std::size_t>(g.node(self).cardinality);
  for (std::size_t row = 0; row < rows; ++row) {
    std::size_t rem = row;
    for (std::size_t i = raw.size() - 1; i-- > 0;) {
      std::size_t card = static_cast<std::size_t>(g.node(raw[i]).cardinality);
      states[i] = static_cast<int>(rem % card);
      rem /= card;
    }
    for (std::size_t s = 0; s < card_self; ++s) {
      states[raw.size() - 1] = static_cast<int>(s);
      std::size_t idx = 0;
      for (std::size_t k = 0; k < f.vars.size(); ++k) {
        // Find which raw slot holds f.vars[k].
        std::size_t slot = 0;
        for (std::size_t i = 0; i < raw.size(); ++i)
          if (pos[i] == static_cast<int>(k)) slot = i;
        idx = idx * static_cast<std::size_t>(f.cards[k]) +
              static_cast<std::size_t>(states[slot]);
      }
      f.values[idx] = c.table[row][s];
    }
  }
  return f;
}

Factor multiply(const Factor& a, const Factor& b, std::uint64_t max_cells) {
  Factor out;
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
                 std::back_inserter(out.vars));
  std::map<int, int> card_of;
  for (std::size_t i = 0; i < a.vars.size(); ++i) card_of[a.vars[i]] = a.cards[i];
  for (std::size_t i = 0; i < b.vars.size(); ++i) card_of[b.vars[i]] = b.cards[i];
  for (int v : out.vars) out.cards.push_back(card_of[v]);
  std::uint64_t cells = checked_cells(out.cards, max_cells);
  out.values.assign(static_cast<std::size_t>(cells), 0.0);

  auto positions = [&](const Factor& f) {
    std::vector<std::size_t> p;
    for (int v : f.vars)
      p.push_back(static_cast<std::size_t>(
          std::lower_bound(out.vars.begin(), out.vars.end(), v) - out.vars.begin()));
    return p;
  };
  const auto pa = positions(a);
  const auto pb = positions(b);

  std::vector<int> states(out.vars.size(), 0);
  for (std::size_t cell = 0; cell < out.values.size(); ++cell) {
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < a.vars.size(); ++i)
      ia = ia * static_cast<std::size_t>(a.cards[i]) + static_cast<std::size_t>(states[pa[i]]);
    for (std::size_t i = 0; i < b.vars.size(); ++i)
      ib = ib * static_cast<std::size_t>(b.cards[i]) + static_cast<std::size_t>(states[pb[i]]);
    out.values[cell] = a.values[ia] * b.values[ib];
    for (std::size_t i = out.vars.size(); i-- > 0;) {
      if (++states[i] < out.cards[i]) break;
      states[i] = 0;
      if (i == 0) break;
    }
  }
  return out;
}

Factor sum_out(const Factor& f, int var) {
  Factor out;
  std::size_t vpos = static_cast<std::size_t>(
      std::lower_bound(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
  for (std::size_t i = 0; i < f.vars.size(); ++i) {
    if (i == vpos) continue;
    out.vars.push_back(f.vars[i]);
    out.cards.push_back(f.cards[i]);
  }
  std::size_t cells = 1;
  for (int c : out.cards) cells *= static_cast<std::size_t>(c);
  out.values.assign(cells, 0.0);

  std::vector<int> states(f.vars.size(), 0);
  for (std::size_t cell = 0; cell < f.values.size(); ++cell) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < f.vars.size(); ++i) {
      if (i == vpos) continue;
      idx = idx * static_cast<std::size_t>(f.cards[i]) + static_cast<std::size_t>(states[i]);
    }
    out.values[idx] += f.values[cell];
    for (std::size_t i = f.vars.size(); i-- > 0;) {
      if (++states[i] < f.cards[i]) break;
      states[i] = 0;
      if (i == 0) break;
    }
  }
  return out;
}

// Reorder a factor's axes into the given variable order (a permutation of
// f.vars) and return the dense table.
JointTable factor_to_table(const Dag& g, const Factor& f, const std::vector<int>& order) {
  JointTable t;
  for (int v : order) {
    t.variable_order.push_back(g.node(v).id);
    t.cards.push_back(g.node(v).cardinality);
  }
  std::size_t cells = 1;
  for (int c : t.cards) cells *= static_cast<std::size_t>(c);
  t.probabilities.assign(cells, 0.0);

  std::vector<std::size_t> pos;  // for each f var, its axis in `order`
  for (int v : f.vars)
    pos.push_back(static_cast<std::size_t>(
        std::find(order.begin(), order.end(), v) - order.begin()));
  std::vector<int> states(order.size(), 0);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::size_t fi = 0;
    for (std::size_t i = 0; i < f.vars.size(); ++i)
      fi = fi * static_cast<std::size_t>(f.cards[i]) + static_cast<std::size_t>(states[pos[i]]);
    t.probabilities[cell] = f.values.empty() ? 0.0 : f.values[fi];
    for (std::size_t i = order.size(); i-- > 0;) {
      if (++states[i] < t.cards[i]) break;
      states[i] = 0;
      if (i == 0) break;
    }
  }
  return t;
}

}  // namespace

JointTable marginal(const BayesNet& bn, const std::set<std::string>& vars,
                    std::uint64_t max_cells) {
  const Dag& g = bn.dag();
  std::set<int> keep;
  for (const auto& id : vars) keep.insert(g.index_of(id));

  std::vector<Factor> factors;
  factors.reserve(static_cast<size_t>(g.size()));
  for (const auto& c : bn.cpts()) factors.push_back(factor_from_cpt(g, c, max_cells));

  // Min-degree elimination over the interaction graph, smallest node index on
  // ties.
  std::set<int> to_eliminate;
  for (int i = 0; i < g.size(); ++i)
    if (!keep.count(i)) to_eliminate.insert(i);

  while (!to_eliminate.empty()) {
    int best = -1;
    std::size_t best_deg = 0;
    for (int v : to_eliminate) {
      std::set<int> nbrs;
      for (const auto& f : factors)
        if (std::binary_search(f.vars.begin(), f.vars.end(), v))
          nbrs.insert(f.vars.begin(), f.vars.end());
      nbrs.erase(v);
      std::size_t deg = nbrs.size();
      if (best == -1 || deg < best_deg) {
        best = v;
        best_deg = deg;
      }
    }
    // Multiply every factor mentioning `best`, then sum it out.
    Factor acc;
    acc.values = {1.0};
    bool any = false;
    std::vector<Factor> rest;
    for (auto& f : factors) {
      if (std::binary_search(f.vars.begin(), f.vars.end(), best)) {
        acc = any ? multiply(acc, f, max_cells) : std::move(f);
        any = true;
      } else {
        rest.push_back(std::move(f));
      }
    }
    if (any) rest.push_back(sum_out(acc, best));
    factors = std::move(rest);
    to_eliminate.erase(best);
  }

  Factor result;
  result.values = {1.0};
  for (auto& f : factors) result = multiply(result, f, max_cells);

  std::vector<int> order(keep.begin(), keep.end());  // dag node order
  return factor_to_table(g, result, order);
}

JointTable conditional(const BayesNet& bn, const std::set<std::string>& target,
                       const Assignment& given, std::uint64_t max_cells) {
  const Dag& g = bn.dag();
  std::set<std::string> all = target;
  for (const auto& [id, state] : given) {
    if (target.count(id)) throw QueryError("conditional: node in both target and given: " + id);
    int i = g.index_of(id);
    if (state < 0 || state >= g.node(i).cardinality)
      throw QueryError("conditional: state out of range for node " + id);
    all.insert(id);
  }
  JointTable big = marginal(bn, all, max_cells);

  JointTable t;
  std::vector<std::size_t> target_axes;
  std::vector<int> fixed(big.variable_order.size(), -1);
  for (std::size_t i = 0; i < big.variable_order.size(); ++i) {
    auto it = given.find(big.variable_order[i]);
    if (it != given.end()) {
      fixed[i] = it->second;
    } else {
      target_axes.push_back(i);
      t.variable_order.push_back(big.variable_order[i]);
      t.cards.push_back(big.cards[i]);
    }
  }
  std::size_t cells = 1;
  for (int c : t.cards) cells *= static_cast<std::size_t>(c);
  t.probabilities.assign(cells, 0.0);

  double mass = 0.0;
  for (std::size_t cell = 0; cell < big.probabilities.size(); ++cell) {
    std::vector<int> s = big.states_at(cell);
    bool match = true;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (fixed[i] >= 0 && s[i] != fixed[i]) {
        match = false;
        break;
      }
    if (!match) continue;
    std::vector<int> ts;
    ts.reserve(target_axes.size());
    for (std::size_t a : target_axes) ts.push_back(s[a]);
    t.probabilities[t.index_of(ts)] += big.probabilities[cell];
    mass += big.probabilities[cell];
  }
  if (mass <= kPositivity)
    throw ConditioningError("conditioning event has (numerically) zero probability");
  for (double& p : t.probabilities) p /= mass;
  return t;
}

bool holds_in_distribution(const BayesNet& bn, const CiQuery& q, double tol,
                           std::uint64_t max_cells) {
  q.validate(bn.dag());
  std::set<std::string> xyz(q.x.begin(), q.x.end());
  xyz.insert(q.y.begin(), q.y.end());
  xyz.insert(q.z.begin(), q.z.end());
  JointTable t = marginal(bn, xyz, max_cells);

  // Axis classification within t.
  std::set<std::string> xs(q.x.begin(), q.x.end());
  std::set<std::string> ys(q.y.begin(), q.y.end());
  std::vector<int> axis_role(t.variable_order.size());  // 0 = x, 1 = y, 2 = z
  for (std::size_t i = 0; i < t.variable_order.size(); ++i)
    axis_role[i] = xs.count(t.variable_order[i]) ? 0 : ys.count(t.variable_order[i]) ? 1 : 2;

  // Enumerate z slices; within each, check the product rule.
  std::vector<std::size_t> x_axes, y_axes, z_axes;
  for (std::size_t i = 0; i < axis_role.size(); ++i)
    (axis_role[i] == 0 ? x_axes : axis_role[i] == 1 ? y_axes : z_axes).push_back(i);

  auto axis_cells = [&](const std::vector<std::size_t>& axes) {
    std::size_t c = 1;
    for (std::size_t a : axes) c *= static_cast<std::size_t>(t.cards[a]);
    return c;
  };
  const std::size_t nx = axis_cells(x_axes), ny = axis_cells(y_axes), nz = axis_cells(z_axes);

  std::vector<int> states(t.variable_order.size(), 0);
  auto set_states = [&](const std::vector<std::size_t>& axes, std::size_t code) {
    for (std::size_t i = axes.size(); i-- > 0;) {
      std::size_t card = static_cast<std::size_t>(t.cards[axes[i]]);
      states[axes[i]] = static_cast<int>(code % card);
      code /= card;
    }
  };

  for (std::size_t zc = 0; zc < nz; ++zc) {
    set_states(z_axes, zc);
    double pz = 0.0;
    std::vector<double> pxy(nx * ny, 0.0), px(nx, 0.0), py(ny, 0.0);
    for (std::size_t xc = 0; xc < nx; ++xc) {
      set_states(x_axes, xc);
      for (std::size_t yc = 0; yc < ny; ++yc) {
        set_states(y_axes, yc);
        double p = t.probabilities[t.index_of(states)];
        pxy[xc * ny + yc] = p;
        px[xc] += p;
        py[yc] += p;
        pz += p;
      }
    }
    if (pz <= kPositivity) continue;
    for (std::size_t xc = 0; xc < nx; ++xc)
      for (std::size_t yc = 0; yc < ny; ++yc) {
        double lhs = pxy[xc * ny + yc] / pz;
        double rhs = (px[xc] / pz) * (py[yc] / pz);
        if (std::abs(lhs - rhs) > tol) return false;
      }
  }
  return true;
}

std::string to_json(const JointTable& t) {
  nlohmann::json j;
  j["variables"] = t.variable_order;
  j["cards"] = t.cards;
  nlohmann::json probs = nlohmann::json::array();
  for (double p : t.probabilities) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", p);
    probs.push_back(std::stod(buf));
  }
  j["probabilities"] = std::move(probs);
  return j.dump();
}

}  // namespace cde
