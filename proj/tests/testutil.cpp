#include "testutil.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cde::test {

std::vector<std::string> letters(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(std::string(1, static_cast<char>('A' + i)));
  return out;
}

Dag random_dag(int n, double edge_prob, Rng& rng, int max_card) {
  std::vector<std::string> ids = letters(n);
  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> card(2, max_card);
  std::vector<Node> nodes;
  for (int i = 0; i < n; ++i) nodes.push_back(domain_node(ids[static_cast<size_t>(i)],
                                                          max_card > 2 ? card(rng) : 2));
  std::vector<std::pair<std::string, std::string>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng) < edge_prob)
        edges.emplace_back(ids[static_cast<size_t>(order[static_cast<size_t>(i)])],
                           ids[static_cast<size_t>(order[static_cast<size_t>(j)])]);
  return Dag::build(std::move(nodes), std::move(edges));
}

std::vector<Dag> all_dags(int n) {
  std::vector<std::string> ids = letters(n);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) pairs.emplace_back(i, j);
  std::vector<Dag> out;
  const unsigned long long total = 1ULL << pairs.size();
  for (unsigned long long mask = 0; mask < total; ++mask) {
    // Reject double edges quickly: both (i,j) and (j,i) set.
    bool dup = false;
    for (std::size_t a = 0; a < pairs.size() && !dup; ++a)
      if (mask & (1ULL << a))
        for (std::size_t b = a + 1; b < pairs.size(); ++b)
          if ((mask & (1ULL << b)) && pairs[b].first == pairs[a].second &&
              pairs[b].second == pairs[a].first) {
            dup = true;
            break;
          }
    if (dup) continue;
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t a = 0; a < pairs.size(); ++a)
      if (mask & (1ULL << a))
        edges.emplace_back(ids[static_cast<size_t>(pairs[a].first)],
                           ids[static_cast<size_t>(pairs[a].second)]);
    std::vector<Node> nodes;
    for (const auto& id : ids) nodes.push_back(domain_node(id));
    try {
      out.push_back(Dag::build(std::move(nodes), std::move(edges)));
    } catch (const GraphError&) {
      // cyclic orientation
    }
  }
  return out;
}

BayesNet random_bn(const Dag& g, Rng& rng, double min_prob) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<Cpt> cpts;
  for (int i = 0; i < g.size(); ++i) {
    Cpt c;
    c.node = g.node(i).id;
    for (int p : g.parents(i)) c.parent_order.push_back(g.node(p).id);
    std::size_t rows = 1;
    for (int p : g.parents(i)) rows *= static_cast<std::size_t>(g.node(p).cardinality);
    const int card = g.node(i).cardinality;
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<double> row(static_cast<size_t>(card));
      double sum = 0.0;
      for (double& v : row) {
        v = expo(rng) + 1e-6;
        sum += v;
      }
      for (double& v : row) v /= sum;
      if (min_prob > 0.0) {
        double scale = 1.0 - min_prob * card;
        for (double& v : row) v = min_prob + scale * v;
      }
      c.table.push_back(std::move(row));
    }
    cpts.push_back(std::move(c));
  }
  return BayesNet::build(g, std::move(cpts));
}

std::vector<CiQuery> all_queries(const std::vector<std::string>& ids, int max_x, int max_y) {
  const int n = static_cast<int>(ids.size());
  std::set<CiQuery> seen;
  std::vector<CiQuery> out;
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 4;
  for (long code = 0; code < total; ++code) {
    long c = code;
    std::vector<std::string> x, y, z;
    for (int i = 0; i < n; ++i) {
      int role = static_cast<int>(c % 4);
      c /= 4;
      if (role == 1) x.push_back(ids[static_cast<size_t>(i)]);
      if (role == 2) y.push_back(ids[static_cast<size_t>(i)]);
      if (role == 3) z.push_back(ids[static_cast<size_t>(i)]);
    }
    if (x.empty() || y.empty()) continue;
    if (max_x > 0 && static_cast<int>(x.size()) > max_x) continue;
    if (max_y > 0 && static_cast<int>(y.size()) > max_y) continue;
    CiQuery q = CiQuery::of(std::move(x), std::move(y), std::move(z)).canonical();
    if (seen.insert(q).second) out.push_back(q);
  }
  return out;
}

namespace {

// All simple skeleton paths between two endpoints.
void enumerate_paths(const Dag& g, int from, int to, std::vector<int>& path,
                     std::vector<char>& used, std::vector<std::vector<int>>& out) {
  if (from == to) {
    out.push_back(path);
    return;
  }
  std::set<int> nbrs;
  for (int c : g.children(from)) nbrs.insert(c);
  for (int p : g.parents(from)) nbrs.insert(p);
  for (int nb : nbrs) {
    if (used[static_cast<size_t>(nb)]) continue;
    used[static_cast<size_t>(nb)] = 1;
    path.push_back(nb);
    enumerate_paths(g, nb, to, path, used, out);
    path.pop_back();
    used[static_cast<size_t>(nb)] = 0;
  }
}

bool trail_active(const Dag& g, const std::vector<int>& trail, const std::vector<char>& in_z,
                  const std::vector<char>& anc_of_z) {
  for (std::size_t i = 1; i + 1 < trail.size(); ++i) {
    const int prev = trail[i - 1], v = trail[i], next = trail[i + 1];
    const bool collider = g.has_edge(prev, v) && g.has_edge(next, v);
    if (collider) {
      if (!anc_of_z[static_cast<size_t>(v)]) return false;
    } else {
      if (in_z[static_cast<size_t>(v)]) return false;
    }
  }
  return true;
}

}  // namespace

bool dsep_oracle(const Dag& g, const CiQuery& q) {
  q.validate(g);
  std::vector<char> in_z(static_cast<size_t>(g.size()), 0);
  for (const auto& id : q.z) in_z[static_cast<size_t>(g.index_of(id))] = 1;
  std::vector<char> anc_of_z(static_cast<size_t>(g.size()), 0);
  std::set<std::string> zset(q.z.begin(), q.z.end());
  if (!zset.empty())
    for (const auto& id : ancestors(g, zset)) anc_of_z[static_cast<size_t>(g.index_of(id))] = 1;

  for (const auto& xid : q.x)
    for (const auto& yid : q.y) {
      int xi = g.index_of(xid), yi = g.index_of(yid);
      std::vector<int> path{xi};
      std::vector<char> used(static_cast<size_t>(g.size()), 0);
      used[static_cast<size_t>(xi)] = 1;
      std::vector<std::vector<int>> trails;
      enumerate_paths(g, xi, yi, path, used, trails);
      for (const auto& t : trails)
        if (trail_active(g, t, in_z, anc_of_z)) return false;  // connected
    }
  return true;
}

bool is_active_walk(const Dag& g, const CiQuery& q, const std::vector<std::string>& walk) {
  if (walk.size() < 2) return false;
  std::set<std::string> xs(q.x.begin(), q.x.end());
  std::set<std::string> ys(q.y.begin(), q.y.end());
  if (!xs.count(walk.front()) || !ys.count(walk.back())) return false;
  std::vector<char> in_z(static_cast<size_t>(g.size()), 0);
  for (const auto& id : q.z) in_z[static_cast<size_t>(g.index_of(id))] = 1;
  std::vector<char> anc_of_z(static_cast<size_t>(g.size()), 0);
  std::set<std::string> zset(q.z.begin(), q.z.end());
  if (!zset.empty())
    for (const auto& id : ancestors(g, zset)) anc_of_z[static_cast<size_t>(g.index_of(id))] = 1;
  std::vector<int> idx;
  for (const auto& id : walk) idx.push_back(g.index_of(id));
  for (std::size_t i = 0; i + 1 < idx.size(); ++i)
    if (!g.adjacent(idx[i], idx[i + 1])) return false;
  return trail_active(g, idx, in_z, anc_of_z);
}

namespace {

void enumerate_upaths(const UndirectedGraph& g, int from, int to, std::vector<int>& path,
                      std::vector<char>& used, std::vector<std::vector<int>>& out) {
  if (from == to) {
    out.push_back(path);
    return;
  }
  for (int nb : g.neighbors(from)) {
    if (used[static_cast<size_t>(nb)]) continue;
    used[static_cast<size_t>(nb)] = 1;
    path.push_back(nb);
    enumerate_upaths(g, nb, to, path, used, out);
    path.pop_back();
    used[static_cast<size_t>(nb)] = 0;
  }
}

}  // namespace

bool u_sep_oracle(const UndirectedGraph& g, const std::set<std::string>& x,
                  const std::set<std::string>& y, const std::set<std::string>& z) {
  std::vector<char> in_z(static_cast<size_t>(g.size()), 0);
  for (const auto& id : z) in_z[static_cast<size_t>(g.index_of(id))] = 1;
  for (const auto& xid : x)
    for (const auto& yid : y) {
      int xi = g.index_of(xid), yi = g.index_of(yid);
      std::vector<int> path{xi};
      std::vector<char> used(static_cast<size_t>(g.size()), 0);
      used[static_cast<size_t>(xi)] = 1;
      std::vector<std::vector<int>> paths;
      enumerate_upaths(g, xi, yi, path, used, paths);
      for (const auto& p : paths) {
        bool hits_z = false;
        for (int v : p)
          if (in_z[static_cast<size_t>(v)]) hits_z = true;
        if (!hits_z) return false;
      }
    }
  return true;
}

JointTable brute_marginal(const JointTable& full, const std::set<std::string>& vars) {
  JointTable out;
  std::vector<std::size_t> axes;
  for (std::size_t i = 0; i < full.variable_order.size(); ++i)
    if (vars.count(full.variable_order[i])) {
      axes.push_back(i);
      out.variable_order.push_back(full.variable_order[i]);
      out.cards.push_back(full.cards[i]);
    }
  std::size_t cells = 1;
  for (int c : out.cards) cells *= static_cast<std::size_t>(c);
  out.probabilities.assign(cells, 0.0);
  for (std::size_t cell = 0; cell < full.probabilities.size(); ++cell) {
    std::vector<int> s = full.states_at(cell);
    std::vector<int> sub;
    for (std::size_t a : axes) sub.push_back(s[a]);
    out.probabilities[out.index_of(sub)] += full.probabilities[cell];
  }
  return out;
}

JointTable sliced_augmented_joint(const AugmentedBayesNet& abn, const RegimeAssignment& r) {
  const Dag& g = abn.dag();
  std::vector<int> regime_state(static_cast<size_t>(g.size()), -1);
  for (const auto& [fid, v] : r.values()) {
    int fi = g.index_of(fid);
    regime_state[static_cast<size_t>(fi)] = v ? *v : idle_state(g.node(fi));
  }

  JointTable t;
  std::vector<int> vars;
  for (int i = 0; i < g.size(); ++i) {
    if (g.node(i).kind == NodeKind::Regime) continue;
    vars.push_back(i);
    t.variable_order.push_back(g.node(i).id);
    t.cards.push_back(g.node(i).cardinality);
  }
  std::size_t cells = 1;
  for (int c : t.cards) cells *= static_cast<std::size_t>(c);
  t.probabilities.assign(cells, 0.0);

  std::vector<int> state_of(static_cast<size_t>(g.size()), 0);
  for (int i = 0; i < g.size(); ++i)
    if (regime_state[static_cast<size_t>(i)] >= 0)
      state_of[static_cast<size_t>(i)] = regime_state[static_cast<size_t>(i)];

  std::vector<int> states(vars.size(), 0);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    for (std::size_t i = 0; i < vars.size(); ++i)
      state_of[static_cast<size_t>(vars[i])] = states[i];
    double p = 1.0;
    for (std::size_t i = 0; i < vars.size() && p > 0.0; ++i) {
      const Cpt& c = abn.cpt(g.node(vars[i]).id);
      std::size_t row = 0;
      for (const auto& pid : c.parent_order) {
        int pi = g.index_of(pid);
        row = row * static_cast<std::size_t>(g.node(pi).cardinality) +
              static_cast<std::size_t>(state_of[static_cast<size_t>(pi)]);
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

JointTable scm_joint_direct(const Scm& s, const std::map<std::string, int>& overrides) {
  const Dag& g = s.dag();
  JointTable t;
  std::vector<int> domain;
  for (int i = 0; i < g.size(); ++i)
    if (g.node(i).kind == NodeKind::Domain) {
      domain.push_back(i);
      t.variable_order.push_back(g.node(i).id);
      t.cards.push_back(g.node(i).cardinality);
    }
  std::size_t cells = 1;
  for (int c : t.cards) cells *= static_cast<std::size_t>(c);
  t.probabilities.assign(cells, 0.0);

  std::vector<int> errors;
  for (int i = 0; i < g.size(); ++i)
    if (g.node(i).kind == NodeKind::Error) errors.push_back(i);

  std::uint64_t n_cfg = 1;
  for (int e : errors) n_cfg *= s.error(g.node(e).id).atoms.size();

  std::vector<int> value(static_cast<size_t>(g.size()), 0);
  for (std::uint64_t cfg = 0; cfg < n_cfg; ++cfg) {
    double p = 1.0;
    std::uint64_t rem = cfg;
    for (std::size_t i = errors.size(); i-- > 0;) {
      const auto& atoms = s.error(g.node(errors[i]).id).atoms;
      const auto& atom = atoms[static_cast<std::size_t>(rem % atoms.size())];
      rem /= atoms.size();
      p *= atom.p;
      value[static_cast<size_t>(errors[i])] = atom.value;
    }
    for (int v : g.topological_order()) {
      if (g.node(v).kind != NodeKind::Domain) continue;
      auto it = overrides.find(g.node(v).id);
      if (it != overrides.end()) {
        value[static_cast<size_t>(v)] = it->second;
        continue;
      }
      const StructuralFunction& f = s.function(g.node(v).id);
      std::size_t row = 0;
      for (const auto& pid : f.parent_order) {
        int pi = g.index_of(pid);
        row = row * static_cast<std::size_t>(g.node(pi).cardinality) +
              static_cast<std::size_t>(value[static_cast<size_t>(pi)]);
      }
      value[static_cast<size_t>(v)] = f.table[row];
    }
    std::vector<int> dstates;
    dstates.reserve(domain.size());
    for (int d : domain) dstates.push_back(value[static_cast<size_t>(d)]);
    t.probabilities[t.index_of(dstates)] += p;
  }
  return t;
}

double table_max_diff(const JointTable& a, const JointTable& b) {
  std::set<std::string> va(a.variable_order.begin(), a.variable_order.end());
  std::set<std::string> vb(b.variable_order.begin(), b.variable_order.end());
  if (va != vb) throw std::runtime_error("table_max_diff: variable sets differ");
  // Position of each a-variable within b.
  std::vector<std::size_t> pos;
  for (const auto& id : a.variable_order)
    pos.push_back(static_cast<std::size_t>(
        std::find(b.variable_order.begin(), b.variable_order.end(), id) -
        b.variable_order.begin()));
  double worst = 0.0;
  for (std::size_t cell = 0; cell < a.probabilities.size(); ++cell) {
    std::vector<int> sa = a.states_at(cell);
    std::vector<int> sb(sa.size());
    for (std::size_t i = 0; i < sa.size(); ++i) sb[pos[i]] = sa[i];
    worst = std::max(worst, std::abs(a.probabilities[cell] - b.at(sb)));
  }
  return worst;
}

std::string fixture_path(const std::string& name) {
  return std::string(CDE_CORPUS_DIR) + "/" + name;
}

ParsedModel load_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture: " + fixture_path(name));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_graph_file(buf.str(), name);
}

}  // namespace cde::test
