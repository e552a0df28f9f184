#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cde/ci.hpp"
#include "cde/parse.hpp"
#include "cde/regimes.hpp"
#include "cde/scm.hpp"

namespace cde::cli {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

ParsedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_graph_file(buf.str(), path);
}

double rounded(double v) { return std::stod(format_double(v)); }

json table_json(const JointTable& t) {
  json j;
  j["variables"] = t.variable_order;
  j["cards"] = t.cards;
  json probs = json::array();
  for (double p : t.probabilities) probs.push_back(rounded(p));
  j["probabilities"] = std::move(probs);
  return j;
}

void print_table(std::ostream& out, const JointTable& t) {
  out << "vars";
  for (const auto& id : t.variable_order) out << ' ' << id;
  out << '\n';
  for (std::size_t cell = 0; cell < t.probabilities.size(); ++cell) {
    std::vector<int> s = t.states_at(cell);
    for (std::size_t i = 0; i < s.size(); ++i) out << (i ? " " : "") << s[i];
    out << " : " << format_double(t.probabilities[cell]) << '\n';
  }
}

void emit_json(std::ostream& out, const std::string& command, json inputs, json result,
               std::optional<json> witness = std::nullopt) {
  json j;
  j["schema"] = kSchemaVersion;
  j["command"] = command;
  j["inputs"] = std::move(inputs);
  j["result"] = std::move(result);
  if (witness) j["witness"] = std::move(*witness);
  out << j.dump() << '\n';
}

struct SetArg {
  std::string node;
  std::optional<int> value;  // nullopt = idle
};

SetArg parse_set(const std::string& text) {
  std::size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ValidationError("--set expects <node>=<value|idle>: '" + text + "'");
  SetArg a;
  a.node = text.substr(0, eq);
  std::string v = text.substr(eq + 1);
  if (v == "idle") {
    a.value = std::nullopt;
  } else {
    try {
      std::size_t pos = 0;
      int k = std::stoi(v, &pos);
      if (pos != v.size() || k < 0) throw std::invalid_argument("");
      a.value = k;
    } catch (const std::exception&) {
      throw ValidationError("--set value must be a state index or 'idle': '" + text + "'");
    }
  }
  return a;
}

// Resolves --set arguments against a graph, augmenting domain targets that
// lack a regime node. Returns the (possibly augmented) graph and the full
// assignment, unmentioned regimes idle.
std::pair<Dag, RegimeAssignment> resolve_sets(const Dag& g, const std::vector<SetArg>& sets) {
  std::set<std::string> to_augment;
  for (const auto& s : sets) {
    if (!g.has_node(s.node)) throw QueryError("unknown node id in --set: " + s.node);
    const Node& nd = g.node(s.node);
    if (nd.kind == NodeKind::Regime) continue;
    if (nd.kind != NodeKind::Domain)
      throw SemanticError("--set must name a regime or domain node: " + s.node);
    bool has_regime = true;
    try {
      regime_node_for(g, s.node);
    } catch (const SemanticError&) {
      has_regime = false;
    }
    if (!has_regime) to_augment.insert(s.node);
  }
  Dag aug = to_augment.empty() ? g : augment(g, to_augment);
  RegimeAssignment::Map m = RegimeAssignment::all_idle(aug).values();
  for (const auto& s : sets) {
    std::string rid =
        aug.node(s.node).kind == NodeKind::Regime ? s.node : regime_node_for(aug, s.node);
    m[rid] = s.value;
  }
  return {std::move(aug), RegimeAssignment::build(aug, std::move(m))};
}

// Marginalises a dense table over a subset of its variables (kept in table
// order).
JointTable table_marginal(const JointTable& t, const std::set<std::string>& vars) {
  JointTable out;
  std::vector<std::size_t> axes;
  for (std::size_t i = 0; i < t.variable_order.size(); ++i)
    if (vars.count(t.variable_order[i])) {
      axes.push_back(i);
      out.variable_order.push_back(t.variable_order[i]);
      out.cards.push_back(t.cards[i]);
    }
  for (const auto& v : vars)
    if (std::find(t.variable_order.begin(), t.variable_order.end(), v) ==
        t.variable_order.end())
      throw QueryError("unknown variable: " + v);
  std::size_t cells = 1;
  for (int c : out.cards) cells *= static_cast<std::size_t>(c);
  out.probabilities.assign(cells, 0.0);
  for (std::size_t cell = 0; cell < t.probabilities.size(); ++cell) {
    std::vector<int> s = t.states_at(cell);
    std::vector<int> sub;
    sub.reserve(axes.size());
    for (std::size_t a : axes) sub.push_back(s[a]);
    out.probabilities[out.index_of(sub)] += t.probabilities[cell];
  }
  return out;
}

struct VerdictPrinter {
  bool with_witness = false;
  bool as_json = false;

  void print(std::ostream& out, const std::string& command, const json& inputs,
             const CiVerdict& v) const {
    if (as_json) {
      std::optional<json> w;
      if (with_witness) w = json(v.witness);
      emit_json(out, command, inputs, v.represented, std::move(w));
      return;
    }
    out << (v.represented ? "true" : "false") << '\n';
    if (with_witness && !v.witness.empty()) {
      out << "witness:";
      for (const auto& id : v.witness) out << ' ' << id;
      out << '\n';
    }
  }
};

std::string dag_line(const Dag& g) {
  auto edges = g.edge_ids();
  if (edges.empty()) return "(no edges)";
  std::string s;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i) s += ' ';
    s += edges[i].first + "->" + edges[i].second;
  }
  return s;
}

const BayesNet& require_bn(const ParsedModel& m, std::optional<BayesNet>& storage) {
  if (m.bayes_net) return *m.bayes_net;
  if (m.augmented) {
    storage = m.augmented->observational();
    return *storage;
  }
  throw SemanticError("this command needs cpt declarations in the graph file");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"causal DAG engine: conditional independence, interventions, and counterfactual bounds"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);

  long seed = 0;
  app.add_option("--seed", seed, "seed for randomized helpers (reserved)");

  struct QueryCmd {
    CLI::App* cmd = nullptr;
    std::string graph, query;
    bool witness = false;
    bool as_json = false;
  };
  auto add_query_cmd = [&](const std::string& name, const std::string& desc) {
    QueryCmd qc;
    qc.cmd = app.add_subcommand(name, desc);
    qc.cmd->add_option("-g,--graph", qc.graph, "graph file")->required();
    qc.cmd->add_option("-q,--query", qc.query, "query, e.g. \"A,B _||_ C | D\"")->required();
    qc.cmd->add_flag("--witness", qc.witness, "print a connecting path when false");
    qc.cmd->add_flag("--json", qc.as_json, "machine-readable output");
    return qc;
  };
  QueryCmd ci = add_query_cmd("ci", "conditional-independence query by moralisation");
  QueryCmd dsep = add_query_cmd("dsep", "conditional-independence query by d-separation");
  QueryCmd eci = add_query_cmd("eci", "extended conditional-independence query");

  auto* equiv = app.add_subcommand("equiv", "Markov equivalence of two graphs");
  std::string equiv_g, equiv_h;
  bool equiv_json = false;
  equiv->add_option("-g,--graph", equiv_g, "first graph file")->required();
  equiv->add_option("-h,--other", equiv_h, "second graph file")->required();
  equiv->add_flag("--json", equiv_json, "machine-readable output");

  auto* cls = app.add_subcommand("class", "enumerate the Markov equivalence class");
  std::string cls_g;
  bool cls_json = false;
  cls->add_option("-g,--graph", cls_g, "graph file")->required();
  cls->add_flag("--json", cls_json, "machine-readable output");

  auto* aug = app.add_subcommand("augment", "add regime indicator nodes");
  std::string aug_g, aug_targets;
  bool aug_all = false, aug_json = false;
  aug->add_option("-g,--graph", aug_g, "graph file")->required();
  aug->add_flag("--all", aug_all, "augment every domain node");
  aug->add_option("--targets", aug_targets, "comma-separated domain nodes");
  aug->add_flag("--json", aug_json, "machine-readable output");

  auto* itv = app.add_subcommand("intervene", "interventional joint by truncated factorisation");
  std::string itv_g;
  std::vector<std::string> itv_sets;
  bool itv_json = false;
  itv->add_option("-g,--graph", itv_g, "model file with cpt or fn declarations")->required();
  itv->add_option("--set", itv_sets, "<regime-or-domain>=<value|idle> (repeatable)");
  itv->add_flag("--json", itv_json, "machine-readable output");

  auto* mar = app.add_subcommand("marginal", "marginal (optionally conditional) distribution");
  std::string mar_g, mar_vars;
  std::vector<std::string> mar_given;
  bool mar_json = false;
  mar->add_option("-g,--graph", mar_g, "model file with cpt declarations")->required();
  mar->add_option("--vars", mar_vars, "comma-separated variables")->required();
  mar->add_option("--given", mar_given, "<node>=<state> conditioning (repeatable)");
  mar->add_flag("--json", mar_json, "machine-readable output");

  auto* pc = app.add_subcommand("pc", "probability of causation of a structural model");
  std::string pc_g, pc_cause = "X", pc_outcome = "Y";
  bool pc_json = false;
  pc->add_option("-g,--graph", pc_g, "structural model file")->required();
  pc->add_option("--cause", pc_cause, "binary cause node")->required();
  pc->add_option("--outcome", pc_outcome, "binary outcome node")->required();
  pc->add_flag("--json", pc_json, "machine-readable output");

  auto* pcb = app.add_subcommand("pc-bounds", "interval bounds on the probability of causation");
  double pcb_p0 = 0.0, pcb_p1 = 0.0;
  bool pcb_json = false;
  pcb->add_option("--p0", pcb_p0, "p(Y=1|X=0)")->required();
  pcb->add_option("--p1", pcb_p1, "p(Y=1|X=1)")->required();
  pcb->add_flag("--json", pcb_json, "machine-readable output");

  auto* spm = app.add_subcommand("spm-from-bn", "inverse-transform structural model of a net");
  std::string spm_g;
  bool spm_json = false;
  spm->add_option("-g,--graph", spm_g, "model file with cpt declarations")->required();
  spm->add_flag("--json", spm_json, "machine-readable output");

  auto* cf = app.add_subcommand("counterfactual", "joint law of the potential responses");
  std::string cf_g, cf_cause, cf_outcome;
  bool cf_json = false;
  cf->add_option("-g,--graph", cf_g, "structural model file")->required();
  cf->add_option("--cause", cf_cause, "cause node")->required();
  cf->add_option("--outcome", cf_outcome, "outcome node")->required();
  cf->add_flag("--json", cf_json, "machine-readable output");

  auto* val = app.add_subcommand("validate", "parse a model file and report its shape");
  std::string val_g;
  bool val_json = false;
  val->add_option("-g,--graph", val_g, "model file")->required();
  val->add_flag("--json", val_json, "machine-readable output");

  std::vector<std::string> argv_strings;
  argv_strings.reserve(args.size() + 1);
  argv_strings.push_back("cde");
  argv_strings.insert(argv_strings.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(argv_strings.size());
  for (const auto& s : argv_strings) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    auto run_query = [&](const QueryCmd& qc, const std::string& name,
                         CiVerdict (*fn)(const Dag&, const CiQuery&)) {
      ParsedModel m = load_model(qc.graph);
      CiQuery q = parse_query(qc.query, m.dag);
      CiVerdict v = fn(m.dag, q);
      VerdictPrinter{qc.witness, qc.as_json}.print(
          out, name, json{{"graph", qc.graph}, {"query", qc.query}}, v);
    };
    if (ci.cmd->parsed()) {
      run_query(ci, "ci", &query_ci_moral);
    } else if (dsep.cmd->parsed()) {
      run_query(dsep, "dsep", &query_ci_dsep);
    } else if (eci.cmd->parsed()) {
      run_query(eci, "eci", &query_eci);
    } else if (equiv->parsed()) {
      ParsedModel a = load_model(equiv_g);
      ParsedModel b = load_model(equiv_h);
      bool r = markov_equivalent(a.dag, b.dag);
      if (equiv_json)
        emit_json(out, "equiv", json{{"graph", equiv_g}, {"other", equiv_h}}, r);
      else
        out << (r ? "true" : "false") << '\n';
    } else if (cls->parsed()) {
      ParsedModel m = load_model(cls_g);
      std::vector<Dag> members = enumerate_equivalence_class(m.dag);
      if (cls_json) {
        json arr = json::array();
        for (const auto& d : members) {
          json edges = json::array();
          for (const auto& [f, t] : d.edge_ids()) edges.push_back(json::array({f, t}));
          arr.push_back(std::move(edges));
        }
        emit_json(out, "class", json{{"graph", cls_g}},
                  json{{"size", members.size()}, {"members", std::move(arr)}});
      } else {
        out << "size=" << members.size() << '\n';
        for (const auto& d : members) out << dag_line(d) << '\n';
      }
    } else if (aug->parsed()) {
      if (aug_all == !aug_targets.empty())
        throw ValidationError("augment needs exactly one of --all or --targets");
      ParsedModel m = load_model(aug_g);
      std::set<std::string> targets;
      if (aug_all) {
        for (const auto& nd : m.dag.nodes())
          if (nd.kind == NodeKind::Domain) targets.insert(nd.id);
      } else {
        std::istringstream ss(aug_targets);
        std::string piece;
        while (std::getline(ss, piece, ','))
          if (!piece.empty()) targets.insert(piece);
      }
      Dag a = augment(m.dag, targets);
      if (aug_json)
        emit_json(out, "augment", json{{"graph", aug_g}}, json{{"graph_text", to_text(a)}});
      else
        out << to_text(a);
    } else if (itv->parsed()) {
      ParsedModel m = load_model(itv_g);
      std::vector<SetArg> sets;
      for (const auto& s : itv_sets) sets.push_back(parse_set(s));
      JointTable t;
      if (m.scm) {
        auto [aug_dag, assignment] = resolve_sets(m.scm->dag(), sets);
        Scm s = Scm::build(aug_dag, m.scm->errors(), m.scm->functions());
        t = spm_joint(s, assignment);
      } else if (m.bayes_net || m.augmented) {
        std::optional<BayesNet> storage;
        const BayesNet& bn = require_bn(m, storage);
        Dag base = m.augmented ? m.augmented->dag() : bn.dag();
        auto [aug_dag, assignment] = resolve_sets(base, sets);
        AugmentedBayesNet abn =
            AugmentedBayesNet::from_observational(aug_dag, bn.cpts());
        t = interventional_joint(abn, assignment);
      } else {
        throw SemanticError("intervene needs cpt or fn declarations in the model file");
      }
      if (itv_json)
        emit_json(out, "intervene", json{{"graph", itv_g}, {"set", itv_sets}}, table_json(t));
      else
        print_table(out, t);
    } else if (mar->parsed()) {
      ParsedModel m = load_model(mar_g);
      std::set<std::string> vars;
      {
        std::istringstream ss(mar_vars);
        std::string piece;
        while (std::getline(ss, piece, ','))
          if (!piece.empty()) vars.insert(piece);
      }
      if (vars.empty()) throw ValidationError("--vars must name at least one variable");
      Assignment given;
      for (const auto& gstr : mar_given) {
        SetArg a = parse_set(gstr);
        if (!a.value) throw ValidationError("--given takes explicit states, not 'idle'");
        given[a.node] = *a.value;
      }
      JointTable t;
      if (m.scm) {
        JointTable full = spm_joint(*m.scm);
        if (!given.empty()) {
          // Condition by slicing the domain joint.
          std::set<std::string> all = vars;
          for (const auto& [id, st] : given) all.insert(id);
          JointTable sub = table_marginal(full, all);
          double mass = 0.0;
          JointTable target;
          std::vector<std::size_t> keep_axes;
          std::vector<int> fixed(sub.variable_order.size(), -1);
          for (std::size_t i = 0; i < sub.variable_order.size(); ++i) {
            auto it = given.find(sub.variable_order[i]);
            if (it != given.end()) {
              fixed[i] = it->second;
            } else {
              keep_axes.push_back(i);
              target.variable_order.push_back(sub.variable_order[i]);
              target.cards.push_back(sub.cards[i]);
            }
          }
          std::size_t cells = 1;
          for (int c : target.cards) cells *= static_cast<std::size_t>(c);
          target.probabilities.assign(cells, 0.0);
          for (std::size_t cell = 0; cell < sub.probabilities.size(); ++cell) {
            std::vector<int> s = sub.states_at(cell);
            bool ok = true;
            for (std::size_t i = 0; i < s.size(); ++i)
              if (fixed[i] >= 0 && s[i] != fixed[i]) ok = false;
            if (!ok) continue;
            std::vector<int> ks;
            for (std::size_t a : keep_axes) ks.push_back(s[a]);
            target.probabilities[target.index_of(ks)] += sub.probabilities[cell];
            mass += sub.probabilities[cell];
          }
          if (mass <= 1e-12)
            throw ConditioningError("conditioning event has (numerically) zero probability");
          for (double& p : target.probabilities) p /= mass;
          t = std::move(target);
        } else {
          t = table_marginal(full, vars);
        }
      } else {
        std::optional<BayesNet> storage;
        const BayesNet& bn = require_bn(m, storage);
        t = given.empty() ? marginal(bn, vars) : conditional(bn, vars, given);
      }
      if (mar_json)
        emit_json(out, "marginal",
                  json{{"graph", mar_g}, {"vars", mar_vars}, {"given", mar_given}},
                  table_json(t));
      else
        print_table(out, t);
    } else if (pc->parsed()) {
      ParsedModel m = load_model(pc_g);
      if (!m.scm) throw SemanticError("pc needs a structural model (fn/errdist declarations)");
      double v = probability_of_causation(*m.scm, pc_cause, pc_outcome);
      if (pc_json)
        emit_json(out, "pc",
                  json{{"graph", pc_g}, {"cause", pc_cause}, {"outcome", pc_outcome}},
                  rounded(v));
      else
        out << "pc=" << format_double(v) << '\n';
    } else if (pcb->parsed()) {
      PcBounds b = pc_bounds(pcb_p0, pcb_p1);
      if (pcb_json) {
        emit_json(out, "pc-bounds", json{{"p0", rounded(pcb_p0)}, {"p1", rounded(pcb_p1)}},
                  json{{"lower", rounded(b.lower)},
                       {"upper", rounded(b.upper)},
                       {"assumes", "ignorability: observational rows taken as the laws of the potential responses"}});
      } else {
        out << "# assumes ignorability: observational rows are taken as the laws of the potential responses\n";
        out << "lower=" << format_double(b.lower) << " upper=" << format_double(b.upper) << '\n';
      }
    } else if (spm->parsed()) {
      ParsedModel m = load_model(spm_g);
      std::optional<BayesNet> storage;
      const BayesNet& bn = require_bn(m, storage);
      Scm s = build_spm(bn);
      if (spm_json)
        emit_json(out, "spm-from-bn", json{{"graph", spm_g}}, json{{"scm_text", to_text(s)}});
      else
        out << to_text(s);
    } else if (cf->parsed()) {
      ParsedModel m = load_model(cf_g);
      if (!m.scm)
        throw SemanticError("counterfactual needs a structural model (fn/errdist declarations)");
      PotentialResponseJoint pr = potential_response_joint(*m.scm, cf_cause, cf_outcome);
      if (cf_json) {
        json probs = json::array();
        for (double p : pr.table) probs.push_back(rounded(p));
        emit_json(out, "counterfactual",
                  json{{"graph", cf_g}, {"cause", cf_cause}, {"outcome", cf_outcome}},
                  json{{"cause_card", pr.cause_card},
                       {"outcome_card", pr.outcome_card},
                       {"degenerate", pr.degenerate},
                       {"probabilities", std::move(probs)}});
      } else {
        out << "responses " << pr.outcome << " under " << pr.cause << "=0.."
            << pr.cause_card - 1 << '\n';
        if (pr.degenerate)
          out << "# note: " << pr.cause << " is not an ancestor of " << pr.outcome
              << "; all responses coincide\n";
        std::vector<int> tuple(static_cast<size_t>(pr.cause_card), 0);
        for (std::size_t cell = 0; cell < pr.table.size(); ++cell) {
          for (std::size_t i = 0; i < tuple.size(); ++i) out << (i ? " " : "") << tuple[i];
          out << " : " << format_double(pr.table[cell]) << '\n';
          for (std::size_t i = tuple.size(); i-- > 0;) {
            if (++tuple[i] < pr.outcome_card) break;
            tuple[i] = 0;
            if (i == 0) break;
          }
        }
      }
    } else if (val->parsed()) {
      ParsedModel m = load_model(val_g);
      std::string kind;
      switch (m.richness) {
        case ParsedModel::Richness::DagOnly:
          kind = "dag";
          break;
        case ParsedModel::Richness::BayesNet:
          kind = m.augmented ? "augmented bayes_net" : "bayes_net";
          break;
        case ParsedModel::Richness::Scm:
          kind = "scm";
          break;
      }
      if (val_json)
        emit_json(out, "validate", json{{"graph", val_g}},
                  json{{"kind", kind},
                       {"nodes", m.dag.size()},
                       {"edges", m.dag.edges().size()}});
      else
        out << kind << ": " << m.dag.size() << " nodes, " << m.dag.edges().size()
            << " edges\n";
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace cde::cli
