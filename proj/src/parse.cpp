#include "cde/parse.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

namespace cde {

namespace {

struct Token {
  std::string text;
  int column = 0;  // 1-based
};

std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    if (line[i] == '#') break;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
           line[i] != '#')
      ++i;
    out.push_back(Token{line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

bool valid_id(const std::string& s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

struct LineRef {
  int line = 0;
  int column = 0;
};

struct CptDecl {
  std::string node;
  std::vector<std::string> parents;
  std::vector<double> numbers;
  LineRef at;
};

struct FnDecl {
  std::string node;
  std::vector<std::string> parents;
  std::vector<int> numbers;
  LineRef at;
};

struct ErrDistDecl {
  std::string node;
  std::vector<double> numbers;
  LineRef at;
};

class LineParser {
 public:
  LineParser(const std::string& file, int line, std::vector<Token> tokens)
      : file_(file), line_(line), tokens_(std::move(tokens)) {}

  [[noreturn]] void fail(const std::string& msg, int column) const {
    throw ParseError(file_, line_, column, msg);
  }
  [[noreturn]] void fail_at(const std::string& msg, std::size_t tok) const {
    fail(msg, tok < tokens_.size() ? tokens_[tok].column : end_column());
  }
  int end_column() const {
    return tokens_.empty() ? 1
                           : tokens_.back().column + static_cast<int>(tokens_.back().text.size());
  }

  const Token& at(std::size_t i) const { return tokens_[i]; }
  std::size_t size() const { return tokens_.size(); }

  std::string expect_id(std::size_t i, const std::string& what) const {
    if (i >= tokens_.size()) fail_at("expected " + what, i);
    if (!valid_id(tokens_[i].text))
      fail("invalid identifier for " + what + ": '" + tokens_[i].text + "'", tokens_[i].column);
    return tokens_[i].text;
  }

  void expect_literal(std::size_t i, const std::string& lit) const {
    if (i >= tokens_.size() || tokens_[i].text != lit) fail_at("expected '" + lit + "'", i);
  }

  void expect_end(std::size_t i) const {
    if (i < tokens_.size()) fail("unexpected token: '" + tokens_[i].text + "'", tokens_[i].column);
  }

  // Optional `states=<k>` at position i.
  int parse_states(std::size_t i, int fallback) const {
    if (i >= tokens_.size()) return fallback;
    const std::string& t = tokens_[i].text;
    if (t.rfind("states=", 0) != 0)
      fail("unexpected token: '" + t + "' (expected states=<k>)", tokens_[i].column);
    int k = 0;
    bool ok = true;
    try {
      std::size_t pos = 0;
      k = std::stoi(t.substr(7), &pos);
      ok = pos == t.size() - 7;
    } catch (const std::exception&) {
      ok = false;
    }
    if (!ok || k < 2) fail("states must be an integer >= 2", tokens_[i].column);
    expect_end(i + 1);
    return k;
  }

  // Splits tokens [from, to) on commas into trimmed pieces.
  std::vector<std::pair<std::string, int>> comma_list(std::size_t from, std::size_t to) const {
    std::vector<std::pair<std::string, int>> out;
    std::string pending;
    int pending_col = 0;
    auto flush = [&](int col) {
      out.emplace_back(pending, pending.empty() ? col : pending_col);
      pending.clear();
    };
    for (std::size_t i = from; i < to; ++i) {
      const std::string& t = tokens_[i].text;
      int col = tokens_[i].column;
      std::size_t start = 0;
      while (true) {
        std::size_t comma = t.find(',', start);
        std::string piece = t.substr(start, comma == std::string::npos ? comma : comma - start);
        if (!piece.empty() && pending.empty()) pending_col = col + static_cast<int>(start);
        pending += piece;
        if (comma == std::string::npos) break;
        flush(col + static_cast<int>(comma));
        start = comma + 1;
      }
    }
    if (!pending.empty()) flush(end_column());
    return out;
  }

 private:
  std::string file_;
  int line_;
  std::vector<Token> tokens_;
};

// Finds the unique positions of '|' and ':' tokens for cpt/fn lines.
struct TableShape {
  std::size_t bar = 0;   // 0 = absent
  std::size_t colon = 0;
};

TableShape table_shape(const LineParser& lp) {
  TableShape shape;
  bool have_colon = false;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (lp.at(i).text == "|") {
      if (shape.bar || have_colon) lp.fail("unexpected '|'", lp.at(i).column);
      shape.bar = i;
    } else if (lp.at(i).text == ":") {
      if (have_colon) lp.fail("unexpected ':'", lp.at(i).column);
      shape.colon = i;
      have_colon = true;
    }
  }
  if (!have_colon) lp.fail_at("expected ':' before the table", lp.size());
  if (shape.bar && shape.bar > shape.colon) lp.fail("'|' must precede ':'", lp.at(shape.bar).column);
  return shape;
}

std::vector<std::string> parse_parent_list(const LineParser& lp, std::size_t from,
                                           std::size_t to) {
  std::vector<std::string> out;
  for (const auto& [piece, col] : lp.comma_list(from, to)) {
    if (!valid_id(piece)) lp.fail("invalid parent id: '" + piece + "'", col);
    out.push_back(piece);
  }
  return out;
}

std::vector<double> parse_numbers(const LineParser& lp, std::size_t from, std::size_t to) {
  std::vector<double> out;
  auto pieces = lp.comma_list(from, to);
  if (pieces.empty()) lp.fail_at("expected a probability list", to);
  for (const auto& [piece, col] : pieces) {
    try {
      std::size_t pos = 0;
      double v = std::stod(piece, &pos);
      if (pos != piece.size()) throw std::invalid_argument("");
      out.push_back(v);
    } catch (const std::exception&) {
      lp.fail("invalid number: '" + piece + "'", col);
    }
  }
  return out;
}

std::vector<int> parse_ints(const LineParser& lp, std::size_t from, std::size_t to) {
  std::vector<int> out;
  auto pieces = lp.comma_list(from, to);
  if (pieces.empty()) lp.fail_at("expected a state list", to);
  for (const auto& [piece, col] : pieces) {
    try {
      std::size_t pos = 0;
      int v = std::stoi(piece, &pos);
      if (pos != piece.size() || v < 0) throw std::invalid_argument("");
      out.push_back(v);
    } catch (const std::exception&) {
      lp.fail("invalid state index: '" + piece + "'", col);
    }
  }
  return out;
}

}  // namespace

ParsedModel parse_graph_file(const std::string& text, const std::string& filename) {
  std::vector<Node> nodes;
  std::map<std::string, LineRef> node_lines;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<CptDecl> cpts;
  std::vector<FnDecl> fns;
  std::vector<ErrDistDecl> errdists;
  struct PendingEdge {
    std::string from, to;
    LineRef at;
    int to_col;
  };
  std::vector<PendingEdge> pending_edges;
  struct PendingRegime {
    std::string id, target;
    LineRef at;
    int target_col;
  };
  std::vector<PendingRegime> pending_regimes;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::vector<Token> tokens = tokenize(line);
    if (tokens.empty()) continue;
    LineParser lp(filename, lineno, tokens);
    const std::string& head = tokens[0].text;

    if (head == "var" || head == "error") {
      std::string id = lp.expect_id(1, "node id");
      int k = lp.parse_states(2, 2);
      if (node_lines.count(id)) lp.fail("duplicate node id: " + id, tokens[1].column);
      node_lines[id] = LineRef{lineno, tokens[1].column};
      nodes.push_back(head == "var" ? domain_node(id, k) : error_node(id, k));
    } else if (head == "regime") {
      std::string id = lp.expect_id(1, "node id");
      lp.expect_literal(2, "targets");
      std::string target = lp.expect_id(3, "target id");
      lp.expect_end(4);
      if (node_lines.count(id)) lp.fail("duplicate node id: " + id, tokens[1].column);
      node_lines[id] = LineRef{lineno, tokens[1].column};
      nodes.push_back(regime_node(id, target));
      pending_regimes.push_back({id, target, {lineno, tokens[1].column}, tokens[3].column});
    } else if (head == "edge") {
      std::string from = lp.expect_id(1, "source id");
      lp.expect_literal(2, "->");
      std::string to = lp.expect_id(3, "destination id");
      lp.expect_end(4);
      edges.emplace_back(from, to);
      pending_edges.push_back({from, to, {lineno, tokens[1].column}, tokens[3].column});
    } else if (head == "cpt") {
      TableShape shape = table_shape(lp);
      CptDecl d;
      d.node = lp.expect_id(1, "node id");
      if (shape.bar) {
        if (shape.bar != 2) lp.fail_at("expected '|' after the node id", 2);
        d.parents = parse_parent_list(lp, 3, shape.colon);
      } else if (shape.colon != 2) {
        lp.fail_at("expected ':' after the node id", 2);
      }
      d.numbers = parse_numbers(lp, shape.colon + 1, lp.size());
      d.at = {lineno, tokens[1].column};
      cpts.push_back(std::move(d));
    } else if (head == "fn") {
      TableShape shape = table_shape(lp);
      FnDecl d;
      d.node = lp.expect_id(1, "node id");
      if (shape.bar) {
        if (shape.bar != 2) lp.fail_at("expected '|' after the node id", 2);
        d.parents = parse_parent_list(lp, 3, shape.colon);
      } else if (shape.colon != 2) {
        lp.fail_at("expected ':' after the node id", 2);
      }
      d.numbers = parse_ints(lp, shape.colon + 1, lp.size());
      d.at = {lineno, tokens[1].column};
      fns.push_back(std::move(d));
    } else if (head == "errdist") {
      TableShape shape = table_shape(lp);
      if (shape.bar) lp.fail("errdist takes no parent list", lp.at(shape.bar).column);
      if (shape.colon != 2) lp.fail_at("expected ':' after the node id", 2);
      ErrDistDecl d;
      d.node = lp.expect_id(1, "node id");
      d.numbers = parse_numbers(lp, shape.colon + 1, lp.size());
      d.at = {lineno, tokens[1].column};
      errdists.push_back(std::move(d));
    } else {
      lp.fail("unknown declaration: '" + head + "'", tokens[0].column);
    }
  }

  // Reference checks with locations before handing to the graph builder.
  for (const auto& e : pending_edges) {
    if (!node_lines.count(e.from))
      throw ParseError(filename, e.at.line, e.at.column, "edge references undeclared node: " + e.from);
    if (!node_lines.count(e.to))
      throw ParseError(filename, e.at.line, e.to_col, "edge references undeclared node: " + e.to);
  }
  for (const auto& r : pending_regimes)
    if (!node_lines.count(r.target))
      throw ParseError(filename, r.at.line, r.target_col,
                       "regime targets undeclared node: " + r.target);

  ParsedModel model;
  model.dag = Dag::build(std::move(nodes), std::move(edges));
  const Dag& g = model.dag;

  auto check_known = [&](const std::string& id, const LineRef& at) {
    if (!g.has_node(id))
      throw ParseError(filename, at.line, at.column, "declaration for undeclared node: " + id);
  };
  std::set<std::string> quantified;
  auto check_unique = [&](const std::string& id, const LineRef& at, const char* what) {
    if (!quantified.insert(id).second)
      throw ParseError(filename, at.line, at.column,
                       std::string("node has more than one ") + what + ": " + id);
  };

  const bool has_cpt = !cpts.empty();
  const bool has_fn = !fns.empty() || !errdists.empty();
  if (has_cpt && has_fn) {
    std::set<std::string> fn_nodes;
    for (const auto& f : fns) fn_nodes.insert(f.node);
    for (const auto& c : cpts)
      if (fn_nodes.count(c.node))
        throw ParseError(filename, c.at.line, c.at.column,
                         "node declares both cpt and fn: " + c.node);
    throw SemanticError("file mixes cpt and fn/errdist declarations");
  }

  if (has_cpt) {
    std::vector<Cpt> built;
    built.reserve(cpts.size());
    for (auto& d : cpts) {
      check_known(d.node, d.at);
      check_unique(d.node, d.at, "cpt");
      int card = g.node(d.node).cardinality;
      if (card <= 0 || d.numbers.size() % static_cast<std::size_t>(card) != 0)
        throw ParseError(filename, d.at.line, d.at.column,
                         "cpt for " + d.node + " must list a multiple of " +
                             std::to_string(card) + " probabilities");
      Cpt c;
      c.node = d.node;
      c.parent_order = std::move(d.parents);
      for (std::size_t i = 0; i < d.numbers.size(); i += static_cast<std::size_t>(card))
        c.table.emplace_back(d.numbers.begin() + static_cast<long>(i),
                             d.numbers.begin() + static_cast<long>(i) + card);
      built.push_back(std::move(c));
    }
    bool has_regimes = false;
    for (const auto& nd : g.nodes())
      if (nd.kind == NodeKind::Regime) has_regimes = true;
    model.richness = ParsedModel::Richness::BayesNet;
    if (has_regimes)
      model.augmented = AugmentedBayesNet::from_observational(g, std::move(built));
    else
      model.bayes_net = BayesNet::build(g, std::move(built));
    return model;
  }

  if (has_fn) {
    std::vector<ErrorSpec> specs;
    specs.reserve(errdists.size());
    for (auto& d : errdists) {
      check_known(d.node, d.at);
      check_unique(d.node, d.at, "errdist");
      int card = g.node(d.node).cardinality;
      if (d.numbers.size() != static_cast<std::size_t>(card))
        throw ParseError(filename, d.at.line, d.at.column,
                         "errdist for " + d.node + " must list " + std::to_string(card) +
                             " probabilities");
      ErrorSpec e;
      e.node = d.node;
      for (std::size_t i = 0; i < d.numbers.size(); ++i)
        e.atoms.push_back(ErrorAtom{d.numbers[i], static_cast<int>(i)});
      specs.push_back(std::move(e));
    }
    std::vector<StructuralFunction> built;
    built.reserve(fns.size());
    for (auto& d : fns) {
      check_known(d.node, d.at);
      check_unique(d.node, d.at, "fn");
      StructuralFunction f;
      f.node = d.node;
      f.parent_order = std::move(d.parents);
      f.table = std::move(d.numbers);
      built.push_back(std::move(f));
    }
    model.richness = ParsedModel::Richness::Scm;
    model.scm = Scm::build(g, std::move(specs), std::move(built));
    return model;
  }

  model.richness = ParsedModel::Richness::DagOnly;
  return model;
}

CiQuery parse_query(const std::string& text, const Dag& g) {
  const std::string sep = "_||_";
  std::size_t pos = text.find(sep);
  if (pos == std::string::npos)
    throw QueryError("query must contain '_||_' between the two sides");
  if (text.find(sep, pos + sep.size()) != std::string::npos)
    throw QueryError("query contains more than one '_||_'");
  std::string lhs = text.substr(0, pos);
  std::string rest = text.substr(pos + sep.size());
  std::string mid = rest, zpart;
  std::size_t bar = rest.find('|');
  if (bar != std::string::npos) {
    mid = rest.substr(0, bar);
    zpart = rest.substr(bar + 1);
    if (zpart.find('|') != std::string::npos)
      throw QueryError("query contains more than one conditioning bar");
  }
  auto split_ids = [](const std::string& s, bool allow_empty) {
    std::vector<std::string> out;
    std::string piece;
    std::istringstream ss(s);
    while (std::getline(ss, piece, ',')) {
      std::string t;
      for (char c : piece)
        if (!std::isspace(static_cast<unsigned char>(c))) t += c;
      if (t.empty()) throw QueryError("empty id in query list: '" + s + "'");
      if (!valid_id(t)) throw QueryError("invalid id in query: '" + t + "'");
      out.push_back(std::move(t));
    }
    if (out.empty() && !allow_empty) throw QueryError("empty side in query");
    return out;
  };
  std::vector<std::string> x = split_ids(lhs, false);
  std::vector<std::string> y = split_ids(mid, false);
  std::vector<std::string> z;
  bool z_present = bar != std::string::npos;
  if (z_present) {
    bool only_space = true;
    for (char c : zpart)
      if (!std::isspace(static_cast<unsigned char>(c))) only_space = false;
    if (only_space) throw QueryError("conditioning bar with empty set; drop the bar instead");
    z = split_ids(zpart, true);
  }
  CiQuery q = CiQuery::of(std::move(x), std::move(y), std::move(z));
  q.validate(g);
  return q;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

void append_numbers(std::ostringstream& os, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << format_double(v[i]);
  }
}

void append_cpt_line(std::ostringstream& os, const Cpt& c) {
  os << "cpt " << c.node;
  if (!c.parent_order.empty()) {
    os << " |";
    for (std::size_t i = 0; i < c.parent_order.size(); ++i)
      os << (i ? "," : " ") << c.parent_order[i];
  }
  os << " : ";
  std::vector<double> flat;
  for (const auto& row : c.table) flat.insert(flat.end(), row.begin(), row.end());
  append_numbers(os, flat);
  os << '\n';
}

}  // namespace

std::string to_text(const Dag& g) {
  std::ostringstream os;
  for (const auto& nd : g.nodes()) {
    switch (nd.kind) {
      case NodeKind::Domain:
        os << "var " << nd.id;
        if (nd.cardinality != 2) os << " states=" << nd.cardinality;
        break;
      case NodeKind::Error:
        os << "error " << nd.id;
        if (nd.cardinality != 2) os << " states=" << nd.cardinality;
        break;
      case NodeKind::Regime:
        os << "regime " << nd.id << " targets " << nd.regime_target;
        break;
    }
    os << '\n';
  }
  for (const auto& [f, t] : g.edge_ids()) os << "edge " << f << " -> " << t << '\n';
  return os.str();
}

std::string to_text(const BayesNet& bn) {
  std::ostringstream os;
  os << to_text(bn.dag());
  for (const auto& c : bn.cpts()) append_cpt_line(os, c);
  return os.str();
}

std::string to_text(const AugmentedBayesNet& abn) {
  std::ostringstream os;
  os << to_text(abn.dag());
  BayesNet obs = abn.observational();
  for (const auto& c : obs.cpts()) append_cpt_line(os, c);
  return os.str();
}

std::string to_text(const Scm& s) {
  std::ostringstream os;
  os << to_text(s.dag());
  for (int i = 0; i < s.dag().size(); ++i) {
    const Node& nd = s.dag().node(i);
    if (nd.kind != NodeKind::Error) continue;
    const ErrorSpec& e = s.error(nd.id);
    std::vector<double> dense(static_cast<size_t>(nd.cardinality), 0.0);
    for (const auto& a : e.atoms) dense[static_cast<size_t>(a.value)] = a.p;
    os << "errdist " << nd.id << " : ";
    append_numbers(os, dense);
    os << '\n';
  }
  for (int i = 0; i < s.dag().size(); ++i) {
    const Node& nd = s.dag().node(i);
    if (nd.kind != NodeKind::Domain) continue;
    const StructuralFunction& f = s.function(nd.id);
    os << "fn " << f.node << " |";
    for (std::size_t k = 0; k < f.parent_order.size(); ++k)
      os << (k ? "," : " ") << f.parent_order[k];
    os << " : ";
    for (std::size_t k = 0; k < f.table.size(); ++k) {
      if (k) os << ',';
      os << f.table[k];
    }
    os << '\n';
  }
  return os.str();
}

std::string to_text(const ParsedModel& m) {
  switch (m.richness) {
    case ParsedModel::Richness::DagOnly:
      return to_text(m.dag);
    case ParsedModel::Richness::BayesNet:
      return m.bayes_net ? to_text(*m.bayes_net) : to_text(*m.augmented);
    case ParsedModel::Richness::Scm:
      return to_text(*m.scm);
  }
  return {};
}

}  // namespace cde
