#pragma once

#include <optional>
#include <string>

#include "cde/bayes_net.hpp"
#include "cde/graph.hpp"
#include "cde/regimes.hpp"
#include "cde/scm.hpp"

namespace cde {

// Result of parsing one model file: always a Dag, plus the richest
// quantitative structure the declarations support. A file whose graph has
// regime nodes and complete CPTs yields an AugmentedBayesNet (cpt lines are
// always observational; surgical rows are derived).
struct ParsedModel {
  enum class Richness { DagOnly, BayesNet, Scm };

  Richness richness = Richness::DagOnly;
  Dag dag;
  std::optional<BayesNet> bayes_net;
  std::optional<AugmentedBayesNet> augmented;
  std::optional<Scm> scm;
};

// One declaration per line, `#` comments:
//   var <id> [states=<k>]        (k defaults to 2)
//   error <id> [states=<k>]
//   regime <id> targets <var-id>
//   edge <from> -> <to>
//   cpt <var> [| <parents>] : <row-major probabilities>
//   fn <var> | <parents> : <row-major output states>
//   errdist <err> : <probabilities>
// Parent lists are comma-separated, in graph node order (error parent last
// for fn). Throws ParseError with file:line:column for anything local to a
// line; graph-level problems (cycles, incomplete tables) throw GraphError or
// SemanticError.
ParsedModel parse_graph_file(const std::string& text, const std::string& filename = "<input>");

// Grammar: `X1,X2 _||_ Y1,Y2 | Z1,Z2` (the `| Z` part optional). Validated
// against g.
CiQuery parse_query(const std::string& text, const Dag& g);

// Deterministic text serializations in the file format above. Parsing the
// output reproduces the structure.
std::string to_text(const Dag& g);
std::string to_text(const BayesNet& bn);
std::string to_text(const AugmentedBayesNet& abn);
std::string to_text(const Scm& s);
std::string to_text(const ParsedModel& m);

// 12 significant digits, the fixed float format of all text output.
std::string format_double(double v);

}  // namespace cde
