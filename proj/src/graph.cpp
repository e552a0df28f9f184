#include "cde/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace cde {

namespace {

const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Domain: return "domain";
    case NodeKind::Regime: return "regime";
    case NodeKind::Error: return "error";
  }
  return "?";
}

}  // namespace

Dag Dag::build(std::vector<Node> nodes, std::vector<std::pair<std::string, std::string>> edges) {
  return build_impl(std::move(nodes), std::move(edges), /*typed_checks=*/true);
}

Dag Dag::build_relaxed(std::vector<Node> nodes,
                       std::vector<std::pair<std::string, std::string>> edges) {
  return build_impl(std::move(nodes), std::move(edges), /*typed_checks=*/false);
}

Dag Dag::build_impl(std::vector<Node> nodes,
                    std::vector<std::pair<std::string, std::string>> edges, bool typed_checks) {
  Dag g;
  g.nodes_ = std::move(nodes);
  for (int i = 0; i < g.size(); ++i) {
    const Node& n = g.nodes_[static_cast<size_t>(i)];
    if (n.id.empty()) throw GraphError("node with empty id");
    if (!g.index_.emplace(n.id, i).second) throw GraphError("duplicate node id: " + n.id);
  }

  std::vector<std::pair<int, int>> idx_edges;
  idx_edges.reserve(edges.size());
  for (const auto& [from, to] : edges) {
    auto fi = g.index_.find(from);
    if (fi == g.index_.end()) throw GraphError("edge references unknown node: " + from);
    auto ti = g.index_.find(to);
    if (ti == g.index_.end()) throw GraphError("edge references unknown node: " + to);
    if (fi->second == ti->second) throw GraphError("self loop on node: " + from);
    idx_edges.emplace_back(fi->second, ti->second);
  }
  g.finish(std::move(idx_edges), typed_checks);
  return g;
}

void Dag::finish(std::vector<std::pair<int, int>> idx_edges, bool typed_checks) {
  std::sort(idx_edges.begin(), idx_edges.end());
  if (std::adjacent_find(idx_edges.begin(), idx_edges.end()) != idx_edges.end())
    throw GraphError("duplicate edge");
  edges_ = std::move(idx_edges);

  const size_t n = nodes_.size();
  parents_.assign(n, {});
  children_.assign(n, {});
  for (const auto& [from, to] : edges_) {
    parents_[static_cast<size_t>(to)].push_back(from);
    children_[static_cast<size_t>(from)].push_back(to);
  }
  for (auto& v : parents_) std::sort(v.begin(), v.end());
  for (auto& v : children_) std::sort(v.begin(), v.end());

  // Kahn's algorithm; ties resolved by node index for a stable order.
  std::vector<int> indeg(n, 0);
  for (const auto& e : edges_) indeg[static_cast<size_t>(e.second)]++;
  std::set<int> ready;
  for (size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.insert(static_cast<int>(i));
  topo_.clear();
  while (!ready.empty()) {
    int v = *ready.begin();
    ready.erase(ready.begin());
    topo_.push_back(v);
    for (int c : children_[static_cast<size_t>(v)])
      if (--indeg[static_cast<size_t>(c)] == 0) ready.insert(c);
  }
  if (topo_.size() != n) throw GraphError("graph contains a directed cycle");

  // Exogeneity holds for all graphs, derived or not.
  for (size_t i = 0; i < n; ++i) {
    const Node& nd = nodes_[i];
    if (nd.kind != NodeKind::Domain && !parents_[i].empty())
      throw GraphError(std::string(kind_name(nd.kind)) + " node has a parent: " + nd.id);
    if (nd.kind != NodeKind::Regime && nd.cardinality < 2)
      throw GraphError("node cardinality must be >= 2: " + nd.id);
  }

  if (!typed_checks) {
    for (auto& nd : nodes_)
      if (nd.kind == NodeKind::Regime && nd.cardinality < 2)
        throw GraphError("regime cardinality must be >= 2: " + nd.id);
    return;
  }

  std::map<std::string, std::string> regime_of_target;
  for (size_t i = 0; i < n; ++i) {
    Node& nd = nodes_[i];
    if (nd.kind != NodeKind::Regime) continue;
    auto it = index_.find(nd.regime_target);
    if (it == index_.end())
      throw GraphError("regime node " + nd.id + " targets unknown node: " + nd.regime_target);
    const Node& target = nodes_[static_cast<size_t>(it->second)];
    if (target.kind != NodeKind::Domain)
      throw GraphError("regime node " + nd.id + " must target a domain node");
    if (!regime_of_target.emplace(nd.regime_target, nd.id).second)
      throw GraphError("domain node " + nd.regime_target + " has two regime nodes");
    const auto& ch = children_[i];
    if (ch.size() != 1 || ch[0] != it->second)
      throw GraphError("regime node " + nd.id + " must have exactly one edge, to " +
                       nd.regime_target);
    nd.cardinality = target.cardinality + 1;  // values of the target plus idle
  }
}

int Dag::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw QueryError("unknown node id: " + id);
  return it->second;
}

bool Dag::has_edge(int from, int to) const {
  return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(from, to));
}

std::vector<std::pair<std::string, std::string>> Dag::edge_ids() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(edges_.size());
  for (const auto& [f, t] : edges_)
    out.emplace_back(node(f).id, node(t).id);
  return out;
}

CiQuery CiQuery::of(std::vector<std::string> x, std::vector<std::string> y,
                    std::vector<std::string> z) {
  auto norm = [](std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  CiQuery q{std::move(x), std::move(y), std::move(z)};
  norm(q.x);
  norm(q.y);
  norm(q.z);
  return q;
}

void CiQuery::validate(const Dag& g) const {
  if (x.empty() || y.empty()) throw QueryError("query sides x and y must be nonempty");
  for (const auto* side : {&x, &y, &z})
    for (const auto& id : *side)
      if (!g.has_node(id)) throw QueryError("unknown node id in query: " + id);
  auto overlaps = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::string> tmp;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(tmp));
    return tmp.empty() ? std::string() : tmp.front();
  };
  for (const auto& [a, b] : {std::pair{&x, &y}, {&x, &z}, {&y, &z}}) {
    std::string id = overlaps(*a, *b);
    if (!id.empty()) throw QueryError("query sides overlap on node: " + id);
  }
}

CiQuery CiQuery::canonical() const {
  CiQuery q = *this;
  if (q.y < q.x) std::swap(q.x, q.y);
  return q;
}

UndirectedGraph UndirectedGraph::build(std::vector<std::string> nodes,
                                       std::vector<std::pair<std::string, std::string>> edges) {
  UndirectedGraph g;
  g.nodes_ = std::move(nodes);
  for (int i = 0; i < g.size(); ++i)
    if (!g.index_.emplace(g.nodes_[static_cast<size_t>(i)], i).second)
      throw GraphError("duplicate node id: " + g.nodes_[static_cast<size_t>(i)]);
  std::vector<std::pair<int, int>> idx;
  idx.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    auto ai = g.index_.find(a);
    auto bi = g.index_.find(b);
    if (ai == g.index_.end() || bi == g.index_.end())
      throw GraphError("edge references unknown node: " + (ai == g.index_.end() ? a : b));
    if (ai->second == bi->second) throw GraphError("self loop on node: " + a);
    idx.emplace_back(std::min(ai->second, bi->second), std::max(ai->second, bi->second));
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  g.edges_ = std::move(idx);
  g.adj_.assign(g.nodes_.size(), {});
  for (const auto& [a, b] : g.edges_) {
    g.adj_[static_cast<size_t>(a)].push_back(b);
    g.adj_[static_cast<size_t>(b)].push_back(a);
  }
  for (auto& v : g.adj_) std::sort(v.begin(), v.end());
  return g;
}

int UndirectedGraph::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw QueryError("unknown node id: " + id);
  return it->second;
}

bool UndirectedGraph::adjacent(int a, int b) const {
  const auto& na = adj_[static_cast<size_t>(a)];
  return std::binary_search(na.begin(), na.end(), b);
}

std::string UndirectedGraph::to_text() const {
  std::vector<std::string> ids = nodes_;
  std::sort(ids.begin(), ids.end());
  std::ostringstream os;
  os << "nodes";
  for (const auto& id : ids) os << ' ' << id;
  os << '\n';
  std::vector<std::pair<std::string, std::string>> named;
  named.reserve(edges_.size());
  for (const auto& [a, b] : edges_) {
    std::string sa = nodes_[static_cast<size_t>(a)];
    std::string sb = nodes_[static_cast<size_t>(b)];
    if (sb < sa) std::swap(sa, sb);
    named.emplace_back(std::move(sa), std::move(sb));
  }
  std::sort(named.begin(), named.end());
  for (const auto& [a, b] : named) os << "edge " << a << " -- " << b << '\n';
  return os.str();
}

bool operator==(const UndirectedGraph& a, const UndirectedGraph& b) {
  std::vector<std::string> an = a.nodes_, bn = b.nodes_;
  std::sort(an.begin(), an.end());
  std::sort(bn.begin(), bn.end());
  if (an != bn) return false;
  auto name_edges = [](const UndirectedGraph& g) {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(g.edges_.size());
    for (const auto& [i, j] : g.edges_) {
      std::string si = g.nodes_[static_cast<size_t>(i)];
      std::string sj = g.nodes_[static_cast<size_t>(j)];
      if (sj < si) std::swap(si, sj);
      out.emplace_back(std::move(si), std::move(sj));
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  return name_edges(a) == name_edges(b);
}

std::string to_text(const std::set<Immorality>& imms) {
  std::ostringstream os;
  for (const auto& im : imms)
    os << "immorality " << im.parent_a << ' ' << im.parent_b << " -> " << im.child << '\n';
  return os.str();
}

std::set<std::string> ancestors(const Dag& g, const std::set<std::string>& s) {
  std::deque<int> queue;
  std::vector<char> seen(static_cast<size_t>(g.size()), 0);
  for (const auto& id : s) {
    int i = g.index_of(id);
    if (!seen[static_cast<size_t>(i)]) {
      seen[static_cast<size_t>(i)] = 1;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int p : g.parents(v))
      if (!seen[static_cast<size_t>(p)]) {
        seen[static_cast<size_t>(p)] = 1;
        queue.push_back(p);
      }
  }
  std::set<std::string> out;
  for (int i = 0; i < g.size(); ++i)
    if (seen[static_cast<size_t>(i)]) out.insert(g.node(i).id);
  return out;
}

Dag ancestral_subgraph_impl(const Dag& g, const std::vector<int>& keep_sorted) {
  std::vector<char> keep(static_cast<size_t>(g.size()), 0);
  for (int i : keep_sorted) keep[static_cast<size_t>(i)] = 1;
  std::vector<Node> nodes;
  nodes.reserve(keep_sorted.size());
  for (int i = 0; i < g.size(); ++i)
    if (keep[static_cast<size_t>(i)]) nodes.push_back(g.node(i));
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& [f, t] : g.edges())
    if (keep[static_cast<size_t>(f)] && keep[static_cast<size_t>(t)])
      edges.emplace_back(g.node(f).id, g.node(t).id);
  return Dag::build_relaxed(std::move(nodes), std::move(edges));
}

Dag ancestral_subgraph(const Dag& g, const CiQuery& q) {
  q.validate(g);
  std::set<std::string> mentioned(q.x.begin(), q.x.end());
  mentioned.insert(q.y.begin(), q.y.end());
  mentioned.insert(q.z.begin(), q.z.end());
  std::set<std::string> anc = ancestors(g, mentioned);
  std::vector<int> keep;
  keep.reserve(anc.size());
  for (const auto& id : anc) keep.push_back(g.index_of(id));
  std::sort(keep.begin(), keep.end());
  return ancestral_subgraph_impl(g, keep);
}

UndirectedGraph moralise(const Dag& g) {
  std::vector<std::string> nodes;
  nodes.reserve(static_cast<size_t>(g.size()));
  for (const auto& n : g.nodes()) nodes.push_back(n.id);
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& [f, t] : g.edges()) edges.emplace_back(g.node(f).id, g.node(t).id);
  // Marry co-parents of every common child.
  for (int c = 0; c < g.size(); ++c) {
    const auto& ps = g.parents(c);
    for (size_t i = 0; i < ps.size(); ++i)
      for (size_t j = i + 1; j < ps.size(); ++j)
        if (!g.adjacent(ps[i], ps[j]))
          edges.emplace_back(g.node(ps[i]).id, g.node(ps[j]).id);
  }
  return UndirectedGraph::build(std::move(nodes), std::move(edges));
}

UndirectedGraph skeleton(const Dag& g) {
  std::vector<std::string> nodes;
  nodes.reserve(static_cast<size_t>(g.size()));
  for (const auto& n : g.nodes()) nodes.push_back(n.id);
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& [f, t] : g.edges()) edges.emplace_back(g.node(f).id, g.node(t).id);
  return UndirectedGraph::build(std::move(nodes), std::move(edges));
}

std::set<Immorality> immoralities(const Dag& g) {
  std::set<Immorality> out;
  for (int c = 0; c < g.size(); ++c) {
    const auto& ps = g.parents(c);
    for (size_t i = 0; i < ps.size(); ++i)
      for (size_t j = i + 1; j < ps.size(); ++j) {
        if (g.adjacent(ps[i], ps[j])) continue;
        std::string a = g.node(ps[i]).id;
        std::string b = g.node(ps[j]).id;
        if (b < a) std::swap(a, b);
        out.insert(Immorality{std::move(a), std::move(b), g.node(c).id});
      }
  }
  return out;
}

namespace {

// Shared validation + BFS for the two separation entry points. Returns the
// connecting path (possibly empty when separated).
std::vector<std::string> u_search(const UndirectedGraph& g, const std::set<std::string>& x,
                                  const std::set<std::string>& y,
                                  const std::set<std::string>& z) {
  if (x.empty() || y.empty()) throw QueryError("separation sides x and y must be nonempty");
  auto check = [&](const std::set<std::string>& s) {
    for (const auto& id : s)
      if (!g.has_node(id)) throw QueryError("unknown node id: " + id);
  };
  check(x);
  check(y);
  check(z);
  for (const auto& id : x)
    if (y.count(id) || z.count(id)) throw QueryError("separation sets overlap on node: " + id);
  for (const auto& id : y)
    if (z.count(id)) throw QueryError("separation sets overlap on node: " + id);

  const size_t n = static_cast<size_t>(g.size());
  std::vector<char> blocked(n, 0);
  for (const auto& id : z) blocked[static_cast<size_t>(g.index_of(id))] = 1;
  std::vector<char> is_target(n, 0);
  for (const auto& id : y) is_target[static_cast<size_t>(g.index_of(id))] = 1;

  std::vector<int> pred(n, -2);
  std::deque<int> queue;
  for (const auto& id : x) {
    int i = g.index_of(id);
    if (pred[static_cast<size_t>(i)] == -2) {
      pred[static_cast<size_t>(i)] = -1;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    if (is_target[static_cast<size_t>(v)]) {
      std::vector<std::string> path;
      for (int w = v; w != -1; w = pred[static_cast<size_t>(w)])
        path.push_back(g.node_ids()[static_cast<size_t>(w)]);
      std::reverse(path.begin(), path.end());
      return path;
    }
    for (int w : g.neighbors(v)) {
      if (blocked[static_cast<size_t>(w)] || pred[static_cast<size_t>(w)] != -2) continue;
      pred[static_cast<size_t>(w)] = v;
      queue.push_back(w);
    }
  }
  return {};
}

}  // namespace

bool u_separated(const UndirectedGraph& g, const std::set<std::string>& x,
                 const std::set<std::string>& y, const std::set<std::string>& z) {
  return u_search(g, x, y, z).empty();
}

std::vector<std::string> u_connecting_path(const UndirectedGraph& g,
                                           const std::set<std::string>& x,
                                           const std::set<std::string>& y,
                                           const std::set<std::string>& z) {
  return u_search(g, x, y, z);
}

}  // namespace cde
