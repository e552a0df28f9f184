#include "cde/ci.hpp"

#include <algorithm>
#include <deque>

namespace cde {

CiVerdict query_ci_moral(const Dag& g, const CiQuery& q) {
  q.validate(g);
  Dag anc = ancestral_subgraph(g, q);
  UndirectedGraph moral = moralise(anc);
  std::set<std::string> x(q.x.begin(), q.x.end());
  std::set<std::string> y(q.y.begin(), q.y.end());
  std::set<std::string> z;
  // z members are all ancestral (they are mentioned), so no filtering needed.
  z.insert(q.z.begin(), q.z.end());
  std::vector<std::string> path = u_connecting_path(moral, x, y, z);
  CiVerdict v;
  v.method = CiMethod::Moralisation;
  v.represented = path.empty();
  v.witness = std::move(path);
  return v;
}

namespace {

// Reachability over (node, arrival-direction) states. Arrival FromParent
// means the walk entered v along an edge u -> v; FromChild means it entered
// along u <- v, i.e. climbed from a child of v.
struct DsepState {
  int node;
  int arrival;  // 0 = FromParent, 1 = FromChild
};

}  // namespace

CiVerdict query_ci_dsep(const Dag& g, const CiQuery& q) {
  q.validate(g);
  const size_t n = static_cast<size_t>(g.size());

  std::vector<char> in_z(n, 0);
  for (const auto& id : q.z) in_z[static_cast<size_t>(g.index_of(id))] = 1;
  std::vector<char> in_y(n, 0);
  for (const auto& id : q.y) in_y[static_cast<size_t>(g.index_of(id))] = 1;

  // Colliders stay open iff they are in z or have a descendant in z,
  // i.e. they are an ancestor-or-self of z.
  std::set<std::string> zset(q.z.begin(), q.z.end());
  std::vector<char> anc_of_z(n, 0);
  if (!zset.empty())
    for (const auto& id : ancestors(g, zset))
      anc_of_z[static_cast<size_t>(g.index_of(id))] = 1;

  // visited[2*v + arrival]; pred stores the previous state for the witness.
  std::vector<int> pred(2 * n, -2);
  std::deque<DsepState> queue;
  auto push = [&](int node, int arrival, int from_state) {
    size_t key = 2 * static_cast<size_t>(node) + static_cast<size_t>(arrival);
    if (pred[key] != -2) return;
    pred[key] = from_state;
    queue.push_back(DsepState{node, arrival});
  };

  for (const auto& id : q.x) {
    int s = g.index_of(id);
    // Leaving a source applies no blocking rule at the source itself.
    for (int c : g.children(s)) push(c, 0, -1);
    for (int p : g.parents(s)) push(p, 1, -1);
  }

  CiVerdict v;
  v.method = CiMethod::DSeparation;
  while (!queue.empty()) {
    DsepState st = queue.front();
    queue.pop_front();
    size_t key = 2 * static_cast<size_t>(st.node) + static_cast<size_t>(st.arrival);
    if (in_y[static_cast<size_t>(st.node)]) {
      std::vector<int> keys;
      for (int k = static_cast<int>(key); k != -1; k = pred[static_cast<size_t>(k)])
        keys.push_back(k);
      std::reverse(keys.begin(), keys.end());
      std::vector<std::string> walk;
      walk.reserve(keys.size() + 1);
      // The x endpoint is not part of the state chain; pick one consistent
      // with the first step's direction (FromParent needs an x parent of the
      // first node, FromChild an x child of it).
      const int first_node = keys.front() / 2;
      const int first_arrival = keys.front() % 2;
      for (const auto& id : q.x) {
        int s = g.index_of(id);
        bool ok = first_arrival == 0 ? g.has_edge(s, first_node) : g.has_edge(first_node, s);
        if (ok) {
          walk.push_back(id);
          break;
        }
      }
      for (int k : keys) walk.push_back(g.node(k / 2).id);
      v.represented = false;
      v.witness = std::move(walk);
      return v;
    }
    const bool blocked_nc = in_z[static_cast<size_t>(st.node)];
    if (st.arrival == 0) {
      // ... u -> v: continue down as a chain, or up through a collider.
      if (!blocked_nc)
        for (int c : g.children(st.node)) push(c, 0, static_cast<int>(key));
      if (anc_of_z[static_cast<size_t>(st.node)])
        for (int p : g.parents(st.node)) push(p, 1, static_cast<int>(key));
    } else {
      // ... u <- v: fork or chain; v must be unconditioned either way.
      if (!blocked_nc) {
        for (int c : g.children(st.node)) push(c, 0, static_cast<int>(key));
        for (int p : g.parents(st.node)) push(p, 1, static_cast<int>(key));
      }
    }
  }
  v.represented = true;
  return v;
}

std::set<CiQuery> represented_ci_set(const Dag& g, int max_query_size) {
  if (g.size() > 8)
    throw CapacityError("represented_ci_set is limited to graphs of <= 8 nodes");
  if (max_query_size < 1) throw QueryError("max_query_size must be >= 1");
  const int n = g.size();
  std::set<CiQuery> out;
  // Assign each node a role: 0 = unused, 1 = x, 2 = y, 3 = z.
  std::vector<int> role(static_cast<size_t>(n), 0);
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 4;
  for (long code = 0; code < total; ++code) {
    long c = code;
    int nx = 0, ny = 0;
    for (int i = 0; i < n; ++i) {
      role[static_cast<size_t>(i)] = static_cast<int>(c % 4);
      c /= 4;
      if (role[static_cast<size_t>(i)] == 1) nx++;
      if (role[static_cast<size_t>(i)] == 2) ny++;
    }
    if (nx < 1 || nx > max_query_size || ny < 1 || ny > max_query_size) continue;
    std::vector<std::string> x, y, z;
    for (int i = 0; i < n; ++i) {
      if (role[static_cast<size_t>(i)] == 1) x.push_back(g.node(i).id);
      if (role[static_cast<size_t>(i)] == 2) y.push_back(g.node(i).id);
      if (role[static_cast<size_t>(i)] == 3) z.push_back(g.node(i).id);
    }
    CiQuery q = CiQuery::of(std::move(x), std::move(y), std::move(z)).canonical();
    if (out.count(q)) continue;
    if (query_ci_moral(g, q).represented) out.insert(std::move(q));
  }
  return out;
}

bool markov_equivalent(const Dag& g1, const Dag& g2) {
  std::set<std::string> ids1, ids2;
  for (const auto& nd : g1.nodes()) ids1.insert(nd.id);
  for (const auto& nd : g2.nodes()) ids2.insert(nd.id);
  if (ids1 != ids2) throw QueryError("markov_equivalent requires identical node sets");
  return skeleton(g1) == skeleton(g2) && immoralities(g1) == immoralities(g2);
}

std::vector<Dag> enumerate_equivalence_class(const Dag& g) {
  // Edges at Regime/Error nodes cannot be reoriented without breaking
  // exogeneity, so only Domain-Domain edges vary.
  std::vector<std::pair<int, int>> fixed, orientable;
  for (const auto& [f, t] : g.edges()) {
    if (g.node(f).kind == NodeKind::Domain && g.node(t).kind == NodeKind::Domain)
      orientable.emplace_back(f, t);
    else
      fixed.emplace_back(f, t);
  }
  if (orientable.size() > 24)
    throw CapacityError("equivalence class enumeration is limited to 24 orientable edges");

  const std::set<Immorality> target = immoralities(g);
  const size_t n = static_cast<size_t>(g.size());

  std::vector<Dag> members;
  const unsigned long long count = 1ULL << orientable.size();
  std::vector<std::pair<int, int>> edges(fixed);
  edges.resize(fixed.size() + orientable.size());
  for (unsigned long long mask = 0; mask < count; ++mask) {
    for (size_t i = 0; i < orientable.size(); ++i) {
      auto [f, t] = orientable[i];
      if (mask & (1ULL << i)) std::swap(f, t);
      edges[fixed.size() + i] = {f, t};
    }
    // Acyclicity via Kahn on the candidate orientation.
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> ch(n);
    for (const auto& [f, t] : edges) {
      indeg[static_cast<size_t>(t)]++;
      ch[static_cast<size_t>(f)].push_back(t);
    }
    std::deque<int> ready;
    for (size_t i = 0; i < n; ++i)
      if (indeg[i] == 0) ready.push_back(static_cast<int>(i));
    size_t seen = 0;
    while (!ready.empty()) {
      int v = ready.front();
      ready.pop_front();
      seen++;
      for (int c : ch[static_cast<size_t>(v)])
        if (--indeg[static_cast<size_t>(c)] == 0) ready.push_back(c);
    }
    if (seen != n) continue;

    std::vector<std::pair<std::string, std::string>> named;
    named.reserve(edges.size());
    for (const auto& [f, t] : edges) named.emplace_back(g.node(f).id, g.node(t).id);
    Dag cand = Dag::build_relaxed(g.nodes(), std::move(named));
    if (immoralities(cand) == target) members.push_back(std::move(cand));
  }
  std::sort(members.begin(), members.end(),
            [](const Dag& a, const Dag& b) { return a.edges() < b.edges(); });
  return members;
}

}  // namespace cde
