#include "cde/scm.hpp"

#include <algorithm>
#include <cmath>

namespace cde {

namespace {

constexpr double kSumTol = 1e-9;
constexpr double kMergeEps = 1e-12;
constexpr double kPositivity = 1e-12;

// Cumulative sums of a distribution row, last entry forced to exactly 1.
std::vector<double> cumulative(const std::vector<double>& row) {
  std::vector<double> cum(row.size());
  double s = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    s += row[i];
    cum[i] = s;
  }
  cum.back() = 1.0;
  return cum;
}

// Right-continuous generalized inverse: min{y : F(y) >= u}.
int inverse_cdf(const std::vector<double>& cum, double u) {
  for (std::size_t y = 0; y < cum.size(); ++y)
    if (cum[y] >= u) return static_cast<int>(y);
  return static_cast<int>(cum.size()) - 1;
}

// Sorted distinct CDF breakpoints in (0, 1], always ending at 1.
std::vector<double> merge_breakpoints(const std::vector<std::vector<double>>& cums) {
  std::vector<double> bp;
  for (const auto& cum : cums)
    for (double c : cum)
      if (c > kMergeEps && c < 1.0 - kMergeEps) bp.push_back(c);
  bp.push_back(1.0);
  std::sort(bp.begin(), bp.end());
  std::vector<double> out;
  for (double b : bp)
    if (out.empty() || b - out.back() > kMergeEps) out.push_back(b);
  return out;
}

}  // namespace

double& ResponseCoupling::at(const std::vector<int>& tuple) {
  std::size_t idx = 0;
  for (int c : tuple) idx = idx * static_cast<std::size_t>(outcome_card) + static_cast<std::size_t>(c);
  return table[idx];
}

double ResponseCoupling::at(const std::vector<int>& tuple) const {
  std::size_t idx = 0;
  for (int c : tuple) idx = idx * static_cast<std::size_t>(outcome_card) + static_cast<std::size_t>(c);
  return table[idx];
}

std::vector<double> ResponseCoupling::marginal(int config) const {
  std::vector<double> out(static_cast<std::size_t>(outcome_card), 0.0);
  std::size_t below = 1;  // stride of the config axis
  for (int i = config + 1; i < configs; ++i) below *= static_cast<std::size_t>(outcome_card);
  for (std::size_t t = 0; t < table.size(); ++t)
    out[(t / below) % static_cast<std::size_t>(outcome_card)] += table[t];
  return out;
}

double PotentialResponseJoint::prob(const std::vector<int>& responses) const {
  std::size_t idx = 0;
  for (int c : responses)
    idx = idx * static_cast<std::size_t>(outcome_card) + static_cast<std::size_t>(c);
  return table[idx];
}

std::vector<double> PotentialResponseJoint::response_marginal(int x) const {
  std::vector<double> out(static_cast<std::size_t>(outcome_card), 0.0);
  std::size_t below = 1;
  for (int i = x + 1; i < cause_card; ++i) below *= static_cast<std::size_t>(outcome_card);
  for (std::size_t t = 0; t < table.size(); ++t)
    out[(t / below) % static_cast<std::size_t>(outcome_card)] += table[t];
  return out;
}

Scm Scm::build(Dag dag, std::vector<ErrorSpec> errors,
               std::vector<StructuralFunction> functions) {
  Scm s;
  s.dag_ = std::move(dag);
  const Dag& g = s.dag_;

  // Graph shape: private error per domain node.
  std::vector<int> error_parent(static_cast<size_t>(g.size()), -1);
  for (int i = 0; i < g.size(); ++i) {
    const Node& nd = g.node(i);
    if (nd.kind == NodeKind::Error) {
      const auto& ch = g.children(i);
      if (ch.size() != 1 || g.node(ch[0]).kind != NodeKind::Domain)
        throw GraphError("error node must feed exactly one domain node: " + nd.id);
    } else if (nd.kind == NodeKind::Domain) {
      int count = 0;
      for (int p : g.parents(i))
        if (g.node(p).kind == NodeKind::Error) {
          error_parent[static_cast<size_t>(i)] = p;
          count++;
        }
      if (count != 1)
        throw GraphError("domain node must have exactly one error parent: " + nd.id);
    }
  }

  std::vector<char> seen(static_cast<size_t>(g.size()), 0);
  std::map<int, ErrorSpec> error_by_idx;
  std::map<int, StructuralFunction> fn_by_idx;

  for (auto& e : errors) {
    int i = g.index_of(e.node);
    if (g.node(i).kind != NodeKind::Error)
      throw GraphError("errdist declared for non-error node: " + e.node);
    if (seen[static_cast<size_t>(i)]) throw GraphError("duplicate errdist for node: " + e.node);
    double sum = 0.0;
    std::set<int> values;
    for (const auto& a : e.atoms) {
      if (!(a.p >= 0.0)) throw GraphError("negative probability in errdist for " + e.node);
      if (a.value < 0 || a.value >= g.node(i).cardinality)
        throw GraphError("errdist value out of range for " + e.node);
      if (!values.insert(a.value).second)
        throw GraphError("duplicate value in errdist for " + e.node);
      sum += a.p;
    }
    if (std::abs(sum - 1.0) > kSumTol)
      throw GraphError("errdist for " + e.node + " does not sum to 1");
    seen[static_cast<size_t>(i)] = 1;
    error_by_idx[i] = std::move(e);
  }

  for (auto& f : functions) {
    int i = g.index_of(f.node);
    if (g.node(i).kind != NodeKind::Domain)
      throw GraphError("fn declared for non-domain node: " + f.node);
    if (seen[static_cast<size_t>(i)]) throw GraphError("duplicate fn for node: " + f.node);
    std::vector<std::string> expected;
    for (int p : g.parents(i))
      if (g.node(p).kind == NodeKind::Domain) expected.push_back(g.node(p).id);
    expected.push_back(g.node(error_parent[static_cast<size_t>(i)]).id);
    if (f.parent_order != expected) {
      std::string want;
      for (const auto& id : expected) want += (want.empty() ? "" : ",") + id;
      throw GraphError("fn for " + f.node + " must list parents in graph order with the error last: " + want);
    }
    std::size_t rows = 1;
    for (const auto& pid : f.parent_order)
      rows *= static_cast<std::size_t>(g.node(pid).cardinality);
    if (f.table.size() != rows)
      throw GraphError("fn for " + f.node + " has " + std::to_string(f.table.size()) +
                       " entries, expected " + std::to_string(rows));
    for (int v : f.table)
      if (v < 0 || v >= g.node(i).cardinality)
        throw GraphError("fn output out of range for " + f.node);
    seen[static_cast<size_t>(i)] = 1;
    fn_by_idx[i] = std::move(f);
  }

  for (int i = 0; i < g.size(); ++i) {
    const Node& nd = g.node(i);
    if (nd.kind == NodeKind::Regime) continue;
    if (!seen[static_cast<size_t>(i)])
      throw GraphError((nd.kind == NodeKind::Error ? "missing errdist for node: "
                                                   : "missing fn for node: ") +
                       nd.id);
  }
  for (auto& [i, e] : error_by_idx) {
    s.error_slot_[e.node] = static_cast<int>(s.errors_.size());
    s.errors_.push_back(std::move(e));
  }
  for (auto& [i, f] : fn_by_idx) {
    s.function_slot_[f.node] = static_cast<int>(s.functions_.size());
    s.functions_.push_back(std::move(f));
  }
  return s;
}

const ErrorSpec& Scm::error(const std::string& node) const {
  auto it = error_slot_.find(node);
  if (it == error_slot_.end()) throw QueryError("no errdist for node: " + node);
  return errors_[static_cast<size_t>(it->second)];
}

const StructuralFunction& Scm::function(const std::string& node) const {
  auto it = function_slot_.find(node);
  if (it == function_slot_.end()) throw QueryError("no fn for node: " + node);
  return functions_[static_cast<size_t>(it->second)];
}

namespace {

struct SpmPieces {
  Node error;                  // fresh error node
  ErrorSpec spec;              //   and its atoms
  StructuralFunction fn;       // mechanism of the domain node
};

// Inverse-transform pieces for one node of a plain BN.
SpmPieces invert_node(const BayesNet& bn, int node_idx) {
  const Dag& g = bn.dag();
  const Cpt& c = bn.cpts()[static_cast<size_t>(node_idx)];
  const std::string eid = "E_" + c.node;
  if (g.has_node(eid)) throw SemanticError("error node id already taken: " + eid);

  std::vector<std::vector<double>> cums;
  cums.reserve(c.table.size());
  for (const auto& row : c.table) cums.push_back(cumulative(row));
  std::vector<double> bp = merge_breakpoints(cums);

  SpmPieces out;
  out.fn.node = c.node;
  out.fn.parent_order = c.parent_order;
  out.fn.parent_order.push_back(eid);

  if (bp.size() < 2) {
    // Fully deterministic node: a two-state error the mechanism ignores.
    out.error = error_node(eid, 2);
    out.spec = ErrorSpec{eid, {{0.5, 0}, {0.5, 1}}};
    out.fn.table.reserve(cums.size() * 2);
    for (const auto& cum : cums) {
      int v = inverse_cdf(cum, 0.5);
      out.fn.table.push_back(v);
      out.fn.table.push_back(v);
    }
    return out;
  }

  out.error = error_node(eid, static_cast<int>(bp.size()));
  out.spec.node = eid;
  double prev = 0.0;
  for (std::size_t k = 0; k < bp.size(); ++k) {
    out.spec.atoms.push_back(ErrorAtom{bp[k] - prev, static_cast<int>(k)});
    prev = bp[k];
  }
  out.fn.table.reserve(cums.size() * bp.size());
  for (const auto& cum : cums) {
    prev = 0.0;
    for (double b : bp) {
      out.fn.table.push_back(inverse_cdf(cum, (prev + b) / 2.0));
      prev = b;
    }
  }
  return out;
}

Scm assemble_spm(const BayesNet& bn, const std::map<int, SpmPieces>& pieces) {
  const Dag& g = bn.dag();
  std::vector<Node> nodes = g.nodes();
  std::vector<std::pair<std::string, std::string>> edges = g.edge_ids();
  std::vector<ErrorSpec> errors;
  std::vector<StructuralFunction> fns;
  for (int i = 0; i < g.size(); ++i) {
    const SpmPieces& p = pieces.at(i);
    nodes.push_back(p.error);
    edges.emplace_back(p.error.id, g.node(i).id);
    errors.push_back(p.spec);
    fns.push_back(p.fn);
  }
  return Scm::build(Dag::build(std::move(nodes), std::move(edges)), std::move(errors),
                    std::move(fns));
}

void require_all_domain(const BayesNet& bn) {
  for (const auto& nd : bn.dag().nodes())
    if (nd.kind != NodeKind::Domain)
      throw SemanticError("structural construction requires an all-domain net (node " + nd.id +
                          ")");
}

std::uint64_t checked_rows(const Dag& g, const Cpt& c, std::uint64_t max_cells) {
  std::uint64_t rows = 1;
  for (const auto& pid : c.parent_order) {
    rows *= static_cast<std::uint64_t>(g.node(pid).cardinality);
    if (rows > max_cells) throw CapacityError("parent state space exceeds the cell limit");
  }
  return rows;
}

}  // namespace

Scm build_spm(const BayesNet& bn, std::uint64_t max_cells) {
  require_all_domain(bn);
  std::map<int, SpmPieces> pieces;
  for (int i = 0; i < bn.dag().size(); ++i) {
    checked_rows(bn.dag(), bn.cpts()[static_cast<size_t>(i)], max_cells);
    pieces[i] = invert_node(bn, i);
  }
  return assemble_spm(bn, pieces);
}

Scm build_spm_copula(const BayesNet& bn, const std::string& node,
                     const ResponseCoupling& coupling, std::uint64_t max_cells) {
  require_all_domain(bn);
  const Dag& g = bn.dag();
  const int target = g.index_of(node);
  const Cpt& c = bn.cpt(node);
  const std::uint64_t rows = checked_rows(g, c, max_cells);

  if (coupling.configs != static_cast<int>(rows))
    throw ConsistencyError("coupling covers " + std::to_string(coupling.configs) +
                           " parent configurations, expected " + std::to_string(rows));
  if (coupling.outcome_card != g.node(target).cardinality)
    throw ConsistencyError("coupling outcome cardinality mismatch for " + node);
  std::uint64_t cells = 1;
  for (int i = 0; i < coupling.configs; ++i) {
    cells *= static_cast<std::uint64_t>(coupling.outcome_card);
    if (cells > max_cells) throw CapacityError("coupling table exceeds the cell limit");
  }
  if (coupling.table.size() != cells)
    throw ConsistencyError("coupling table has the wrong size");
  double sum = 0.0;
  for (double p : coupling.table) {
    if (!(p >= 0.0)) throw ConsistencyError("negative probability in coupling");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTol) throw ConsistencyError("coupling does not sum to 1");
  for (int i = 0; i < coupling.configs; ++i) {
    std::vector<double> m = coupling.marginal(i);
    for (std::size_t y = 0; y < m.size(); ++y)
      if (std::abs(m[y] - c.table[static_cast<size_t>(i)][y]) > kSumTol)
        throw ConsistencyError("coupling marginal for configuration " + std::to_string(i) +
                               " does not match the cpt row of " + node);
  }

  std::map<int, SpmPieces> pieces;
  for (int i = 0; i < g.size(); ++i) {
    checked_rows(g, bn.cpts()[static_cast<size_t>(i)], max_cells);
    if (i != target) {
      pieces[i] = invert_node(bn, i);
      continue;
    }
    const std::string eid = "E_" + node;
    if (g.has_node(eid)) throw SemanticError("error node id already taken: " + eid);
    SpmPieces p;
    p.error = error_node(eid, static_cast<int>(coupling.table.size()));
    p.spec.node = eid;
    for (std::size_t t = 0; t < coupling.table.size(); ++t)
      if (coupling.table[t] > 0.0)
        p.spec.atoms.push_back(ErrorAtom{coupling.table[t], static_cast<int>(t)});
    p.fn.node = node;
    p.fn.parent_order = c.parent_order;
    p.fn.parent_order.push_back(eid);
    // f(config i, tuple t) = component i of t.
    const std::size_t card = static_cast<std::size_t>(coupling.outcome_card);
    p.fn.table.reserve(rows * coupling.table.size());
    for (std::uint64_t row = 0; row < rows; ++row) {
      std::size_t below = 1;
      for (std::uint64_t k = row + 1; k < rows; ++k) below *= card;
      for (std::size_t t = 0; t < coupling.table.size(); ++t)
        p.fn.table.push_back(static_cast<int>((t / below) % card));
    }
    pieces[i] = std::move(p);
  }
  return assemble_spm(bn, pieces);
}

namespace {

// Evaluation support shared by the joint, the potential responses, and PC.
struct Evaluator {
  const Scm* s;
  std::vector<int> topo_domain;     // domain node indices in topological order
  std::vector<int> error_nodes;     // error node indices (dag order)
  std::vector<int> error_slot;      // per dag index, slot within error_nodes
  std::vector<int> error_parent;    // per domain node, dag index of its error

  explicit Evaluator(const Scm& scm) : s(&scm) {
    const Dag& g = scm.dag();
    error_slot.assign(static_cast<size_t>(g.size()), -1);
    error_parent.assign(static_cast<size_t>(g.size()), -1);
    for (int v : g.topological_order())
      if (g.node(v).kind == NodeKind::Domain) topo_domain.push_back(v);
    for (int i = 0; i < g.size(); ++i) {
      if (g.node(i).kind == NodeKind::Error) {
        error_slot[static_cast<size_t>(i)] = static_cast<int>(error_nodes.size());
        error_nodes.push_back(i);
      }
      if (g.node(i).kind == NodeKind::Domain)
        for (int p : g.parents(i))
          if (g.node(p).kind == NodeKind::Error) error_parent[static_cast<size_t>(i)] = p;
    }
  }

  // error_values by error slot; overrides by dag index (-1 = none).
  // Returns values by dag index (regime/error positions hold errors' values
  // or are unused).
  void eval(const std::vector<int>& error_values, const std::vector<int>& overrides,
            std::vector<int>& out) const {
    const Dag& g = s->dag();
    for (std::size_t i = 0; i < error_nodes.size(); ++i)
      out[static_cast<size_t>(error_nodes[i])] = error_values[i];
    for (int v : topo_domain) {
      if (overrides[static_cast<size_t>(v)] >= 0) {
        out[static_cast<size_t>(v)] = overrides[static_cast<size_t>(v)];
        continue;
      }
      const StructuralFunction& f = s->function(g.node(v).id);
      std::size_t row = 0;
      for (const auto& pid : f.parent_order) {
        int pi = g.index_of(pid);
        row = row * static_cast<std::size_t>(g.node(pi).cardinality) +
              static_cast<std::size_t>(out[static_cast<size_t>(pi)]);
      }
      out[static_cast<size_t>(v)] = f.table[row];
    }
  }

  std::uint64_t config_count(std::uint64_t max_cells) const {
    std::uint64_t n = 1;
    for (int e : error_nodes) {
      n *= static_cast<std::uint64_t>(s->error(s->dag().node(e).id).atoms.size());
      if (n > max_cells) throw CapacityError("error configuration space exceeds the cell limit");
    }
    return n;
  }
};

std::vector<int> forced_values(const Dag& g, const RegimeAssignment& r) {
  std::vector<int> forced(static_cast<size_t>(g.size()), -1);
  for (const auto& [fid, v] : r.values())
    if (v) forced[static_cast<size_t>(g.index_of(g.node(fid).regime_target))] = *v;
  return forced;
}

}  // namespace

JointTable spm_joint(const Scm& s, const RegimeAssignment& r, std::uint64_t max_cells) {
  const Dag& g = s.dag();
  RegimeAssignment valid = RegimeAssignment::build(g, r.values());
  std::vector<int> forced = forced_values(g, valid);

  // Per-node error marginalisation: each error is private to its node, so the
  // model factorises into effective CPT rows.
  JointTable t;
  std::vector<int> vars;
  for (int i = 0; i < g.size(); ++i) {
    if (g.node(i).kind != NodeKind::Domain) continue;
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

  // Effective rows: for node v, effective[v][parent row][value].
  std::map<int, std::vector<std::vector<double>>> effective;
  std::map<int, std::vector<int>> domain_parents;
  for (int v : vars) {
    const StructuralFunction& f = s.function(g.node(v).id);
    std::vector<int> dpar;
    for (std::size_t i = 0; i + 1 < f.parent_order.size(); ++i)
      dpar.push_back(g.index_of(f.parent_order[i]));
    const ErrorSpec& err = s.error(f.parent_order.back());
    const int ecard = g.node(f.parent_order.back()).cardinality;
    std::uint64_t rows = 1;
    for (int p : dpar) {
      rows *= static_cast<std::uint64_t>(g.node(p).cardinality);
      if (rows > max_cells) throw CapacityError("parent state space exceeds the cell limit");
    }
    std::vector<std::vector<double>> rows_out(
        static_cast<std::size_t>(rows),
        std::vector<double>(static_cast<size_t>(g.node(v).cardinality), 0.0));
    for (std::uint64_t row = 0; row < rows; ++row)
      for (const auto& atom : err.atoms) {
        int y = f.table[static_cast<std::size_t>(row) * static_cast<std::size_t>(ecard) +
                        static_cast<std::size_t>(atom.value)];
        rows_out[static_cast<std::size_t>(row)][static_cast<size_t>(y)] += atom.p;
      }
    effective[v] = std::move(rows_out);
    domain_parents[v] = std::move(dpar);
  }

  std::vector<int> state_of(static_cast<size_t>(g.size()), 0);
  std::vector<int> states(vars.size(), 0);
  for (std::size_t cell = 0; cell < t.probabilities.size(); ++cell) {
    for (std::size_t i = 0; i < vars.size(); ++i)
      state_of[static_cast<size_t>(vars[i])] = states[i];
    double p = 1.0;
    for (std::size_t i = 0; i < vars.size() && p > 0.0; ++i) {
      const int v = vars[i];
      if (forced[static_cast<size_t>(v)] >= 0) {
        if (states[i] != forced[static_cast<size_t>(v)]) p = 0.0;
        continue;
      }
      std::size_t row = 0;
      for (int dp : domain_parents[v])
        row = row * static_cast<std::size_t>(g.node(dp).cardinality) +
              static_cast<std::size_t>(state_of[static_cast<size_t>(dp)]);
      p *= effective[v][row][static_cast<size_t>(states[i])];
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

JointTable spm_joint(const Scm& s, std::uint64_t max_cells) {
  return spm_joint(s, RegimeAssignment::all_idle(s.dag()), max_cells);
}

PotentialResponseJoint potential_response_joint(const Scm& s, const std::string& cause,
                                                const std::string& outcome,
                                                std::uint64_t max_cells) {
  const Dag& g = s.dag();
  const int ci = g.index_of(cause);
  const int oi = g.index_of(outcome);
  if (ci == oi) throw QueryError("cause and outcome must differ");
  if (g.node(ci).kind != NodeKind::Domain || g.node(oi).kind != NodeKind::Domain)
    throw SemanticError("cause and outcome must be domain nodes");

  PotentialResponseJoint pr;
  pr.cause = cause;
  pr.outcome = outcome;
  pr.cause_card = g.node(ci).cardinality;
  pr.outcome_card = g.node(oi).cardinality;
  std::uint64_t cells = 1;
  for (int x = 0; x < pr.cause_card; ++x) {
    cells *= static_cast<std::uint64_t>(pr.outcome_card);
    if (cells > max_cells) throw CapacityError("response tuple space exceeds the cell limit");
  }
  pr.table.assign(static_cast<std::size_t>(cells), 0.0);
  pr.degenerate = ancestors(g, {outcome}).count(cause) == 0;

  Evaluator ev(s);
  const std::uint64_t n_configs = ev.config_count(max_cells);
  std::vector<std::size_t> atom_idx(ev.error_nodes.size(), 0);
  std::vector<int> error_values(ev.error_nodes.size(), 0);
  std::vector<int> overrides(static_cast<size_t>(g.size()), -1);
  std::vector<int> values(static_cast<size_t>(g.size()), 0);

  for (std::uint64_t cfg = 0; cfg < n_configs; ++cfg) {
    double p = 1.0;
    for (std::size_t i = 0; i < ev.error_nodes.size(); ++i) {
      const auto& atoms = s.error(g.node(ev.error_nodes[i]).id).atoms;
      p *= atoms[atom_idx[i]].p;
      error_values[i] = atoms[atom_idx[i]].value;
    }
    if (p > 0.0) {
      std::size_t tuple = 0;
      for (int x = 0; x < pr.cause_card; ++x) {
        overrides[static_cast<size_t>(ci)] = x;
        ev.eval(error_values, overrides, values);
        tuple = tuple * static_cast<std::size_t>(pr.outcome_card) +
                static_cast<std::size_t>(values[static_cast<size_t>(oi)]);
      }
      pr.table[tuple] += p;
    }
    for (std::size_t i = ev.error_nodes.size(); i-- > 0;) {
      const auto& atoms = s.error(g.node(ev.error_nodes[i]).id).atoms;
      if (++atom_idx[i] < atoms.size()) break;
      atom_idx[i] = 0;
      if (i == 0) break;
    }
  }
  return pr;
}

double probability_of_causation(const Scm& s, const std::string& cause,
                                const std::string& outcome, std::uint64_t max_cells) {
  const Dag& g = s.dag();
  const int ci = g.index_of(cause);
  const int oi = g.index_of(outcome);
  if (ci == oi) throw QueryError("cause and outcome must differ");
  if (g.node(ci).kind != NodeKind::Domain || g.node(oi).kind != NodeKind::Domain)
    throw SemanticError("cause and outcome must be domain nodes");
  if (g.node(ci).cardinality != 2 || g.node(oi).cardinality != 2)
    throw SemanticError("probability of causation requires binary cause and outcome");

  Evaluator ev(s);
  const std::uint64_t n_configs = ev.config_count(max_cells);
  std::vector<std::size_t> atom_idx(ev.error_nodes.size(), 0);
  std::vector<int> error_values(ev.error_nodes.size(), 0);
  std::vector<int> no_override(static_cast<size_t>(g.size()), -1);
  std::vector<int> overrides(static_cast<size_t>(g.size()), -1);
  std::vector<int> values(static_cast<size_t>(g.size()), 0);

  double num = 0.0, den = 0.0;
  for (std::uint64_t cfg = 0; cfg < n_configs; ++cfg) {
    double p = 1.0;
    for (std::size_t i = 0; i < ev.error_nodes.size(); ++i) {
      const auto& atoms = s.error(g.node(ev.error_nodes[i]).id).atoms;
      p *= atoms[atom_idx[i]].p;
      error_values[i] = atoms[atom_idx[i]].value;
    }
    if (p > 0.0) {
      ev.eval(error_values, no_override, values);
      const int x_factual = values[static_cast<size_t>(ci)];
      if (x_factual == 1) {
        overrides[static_cast<size_t>(ci)] = 1;
        ev.eval(error_values, overrides, values);
        const int y1 = values[static_cast<size_t>(oi)];
        if (y1 == 1) {
          den += p;
          overrides[static_cast<size_t>(ci)] = 0;
          ev.eval(error_values, overrides, values);
          if (values[static_cast<size_t>(oi)] == 0) num += p;
        }
      }
    }
    for (std::size_t i = ev.error_nodes.size(); i-- > 0;) {
      const auto& atoms = s.error(g.node(ev.error_nodes[i]).id).atoms;
      if (++atom_idx[i] < atoms.size()) break;
      atom_idx[i] = 0;
      if (i == 0) break;
    }
  }
  if (den <= kPositivity)
    throw ConditioningError("conditioning event (X=1, Y_1=1) has zero probability");
  return num / den;
}

PcBounds pc_bounds(double p0, double p1) {
  if (!(p0 >= 0.0 && p0 <= 1.0))
    throw ValidationError("p(Y=1|X=0) must lie in [0,1]");
  if (!(p1 >= 0.0 && p1 <= 1.0))
    throw ValidationError("p(Y=1|X=1) must lie in [0,1]");
  if (p1 <= 0.0) throw ValidationError("p(Y=1|X=1) must be positive (PC conditions on Y_1=1)");
  // Frechet extremes of q = P(Y_0=0, Y_1=1) given the two marginals.
  const double q_lo = std::max(0.0, p1 - p0);
  const double q_hi = std::min(1.0 - p0, p1);
  return PcBounds{q_lo / p1, q_hi / p1};
}

namespace {

void validate_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ValidationError("coupling needs at least one row");
  const std::size_t card = rows.front().size();
  if (card < 2) throw ValidationError("rows must cover at least two states");
  for (const auto& row : rows) {
    if (row.size() != card) throw ValidationError("rows have differing lengths");
    double s = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw ValidationError("negative probability in row");
      s += p;
    }
    if (std::abs(s - 1.0) > kSumTol) throw ValidationError("row does not sum to 1");
  }
}

}  // namespace

ResponseCoupling independent_coupling(const std::vector<std::vector<double>>& rows) {
  validate_rows(rows);
  ResponseCoupling c;
  c.configs = static_cast<int>(rows.size());
  c.outcome_card = static_cast<int>(rows.front().size());
  std::size_t cells = 1;
  for (int i = 0; i < c.configs; ++i) cells *= static_cast<std::size_t>(c.outcome_card);
  c.table.assign(cells, 0.0);
  std::vector<int> tuple(rows.size(), 0);
  for (std::size_t t = 0; t < cells; ++t) {
    double p = 1.0;
    for (std::size_t i = 0; i < rows.size(); ++i) p *= rows[i][static_cast<size_t>(tuple[i])];
    c.table[t] = p;
    for (std::size_t i = rows.size(); i-- > 0;) {
      if (++tuple[i] < c.outcome_card) break;
      tuple[i] = 0;
      if (i == 0) break;
    }
  }
  return c;
}

ResponseCoupling comonotone_coupling(const std::vector<std::vector<double>>& rows) {
  validate_rows(rows);
  ResponseCoupling c;
  c.configs = static_cast<int>(rows.size());
  c.outcome_card = static_cast<int>(rows.front().size());
  std::size_t cells = 1;
  for (int i = 0; i < c.configs; ++i) cells *= static_cast<std::size_t>(c.outcome_card);
  c.table.assign(cells, 0.0);

  std::vector<std::vector<double>> cums;
  cums.reserve(rows.size());
  for (const auto& row : rows) cums.push_back(cumulative(row));
  std::vector<double> bp = merge_breakpoints(cums);
  double prev = 0.0;
  for (double b : bp) {
    const double mid = (prev + b) / 2.0;
    std::vector<int> tuple;
    tuple.reserve(rows.size());
    for (const auto& cum : cums) tuple.push_back(inverse_cdf(cum, mid));
    c.at(tuple) += b - prev;
    prev = b;
  }
  return c;
}

ResponseCoupling antitone_coupling(const std::vector<double>& row0,
                                   const std::vector<double>& row1) {
  validate_rows({row0, row1});
  ResponseCoupling c;
  c.configs = 2;
  c.outcome_card = static_cast<int>(row0.size());
  c.table.assign(static_cast<std::size_t>(c.outcome_card) *
                     static_cast<std::size_t>(c.outcome_card),
                 0.0);
  const std::vector<double> cum0 = cumulative(row0);
  const std::vector<double> cum1 = cumulative(row1);
  std::vector<std::vector<double>> pseudo{cum0};
  // Reflect the second row's breakpoints so both lookups are constant on
  // every interval.
  std::vector<double> reflected;
  for (double v : cum1) reflected.push_back(1.0 - v);
  pseudo.push_back(std::move(reflected));
  std::vector<double> bp = merge_breakpoints(pseudo);
  double prev = 0.0;
  for (double b : bp) {
    const double mid = (prev + b) / 2.0;
    c.at({inverse_cdf(cum0, mid), inverse_cdf(cum1, 1.0 - mid)}) += b - prev;
    prev = b;
  }
  return c;
}

}  // namespace cde
