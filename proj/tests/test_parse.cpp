#include <fstream>
#include <sstream>

#include "doctest.h"
#include "testutil.hpp"

using namespace cde;

namespace {

ParseError capture(const std::string& text) {
  try {
    parse_graph_file(text, "t");
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("expected a ParseError");
  return ParseError("t", 0, 0, "unreachable");
}

std::string slurp(const std::string& name) {
  std::ifstream in(test::fixture_path(name), std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("parse the instrumental fixture") {
  ParsedModel m = test::load_fixture("instrumental.dag");
  CHECK(m.richness == ParsedModel::Richness::DagOnly);
  CHECK(m.dag.size() == 4);
  CHECK(m.dag.edges().size() == 4);
}

TEST_CASE("empty file parses to the empty graph") {
  ParsedModel m = parse_graph_file("", "t");
  CHECK(m.richness == ParsedModel::Richness::DagOnly);
  CHECK(m.dag.size() == 0);

  ParsedModel c = parse_graph_file("# only a comment\n\n", "t");
  CHECK(c.dag.size() == 0);
}

TEST_CASE("syntax errors carry file, line, and column") {
  ParseError e1 = capture("var A\nedge A ->\n");
  CHECK(e1.line() == 2);
  CHECK(std::string(e1.what()).find("t:2:") == 0);

  ParseError e2 = capture("wobble A\n");
  CHECK(e2.line() == 1);
  CHECK(e2.column() == 1);

  ParseError e3 = capture("var A\nvar B states=banana\n");
  CHECK(e3.line() == 2);
  CHECK(std::string(e3.what()).find("states") != std::string::npos);

  ParseError e4 = capture("var A\ncpt A 0.5,0.5\n");  // missing colon
  CHECK(e4.line() == 2);

  ParseError e5 = capture("var A\ncpt A : 0.5,oops\n");
  CHECK(e5.line() == 2);
  CHECK(std::string(e5.what()).find("oops") != std::string::npos);

  ParseError e6 = capture("var A states=2 extra\n");
  CHECK(e6.column() == 16);
}

TEST_CASE("semantic line errors name the offending node") {
  ParseError e1 = capture("var A\nedge A -> B\n");
  CHECK(e1.line() == 2);
  CHECK(std::string(e1.what()).find("B") != std::string::npos);

  ParseError e2 = capture("var A\nvar A\n");
  CHECK(e2.line() == 2);

  ParseError e3 = capture("regime F targets Q\n");
  CHECK(std::string(e3.what()).find("Q") != std::string::npos);

  ParseError e4 = capture("var A\ncpt A : 0.5,0.5\ncpt A : 0.5,0.5\n");
  CHECK(e4.line() == 3);

  ParseError e5 = capture("var A\ncpt B : 0.5,0.5\n");
  CHECK(std::string(e5.what()).find("B") != std::string::npos);
}

TEST_CASE("graph-level problems surface as graph errors") {
  CHECK_THROWS_AS(parse_graph_file("var A\nvar B\nedge A -> B\nedge B -> A\n", "t"),
                  GraphError);
  // Incomplete cpt coverage.
  CHECK_THROWS_AS(parse_graph_file("var A\nvar B\ncpt A : 0.5,0.5\n", "t"), GraphError);
  // Mixed quantitative declarations.
  CHECK_THROWS_AS(
      parse_graph_file("var A\nvar B\ncpt A : 0.5,0.5\nfn B | A : 0,1\n", "t"),
      SemanticError);
  // cpt and fn for one node.
  CHECK_THROWS_AS(
      parse_graph_file("var A\nerror E\nedge E -> A\ncpt A : 0.5,0.5\nfn A | E : 0,1\n", "t"),
      ParseError);
}

TEST_CASE("cpt declarations must list parents in graph order") {
  std::string good =
      "var A\nvar B\nedge A -> B\ncpt A : 0.25,0.75\ncpt B | A : 0.5,0.5,0.1,0.9\n";
  ParsedModel m = parse_graph_file(good, "t");
  CHECK(m.richness == ParsedModel::Richness::BayesNet);
  REQUIRE(m.bayes_net);
  CHECK(m.bayes_net->cpt("B").table[1] == std::vector<double>{0.1, 0.9});

  std::string wrong_parent =
      "var A\nvar B\nedge A -> B\ncpt A : 0.25,0.75\ncpt B | B : 0.5,0.5,0.1,0.9\n";
  CHECK_THROWS_AS(parse_graph_file(wrong_parent, "t"), GraphError);
}

TEST_CASE("query parsing") {
  Dag g = test::load_fixture("evidence.dag").dag;
  CiQuery q = parse_query("B,R _||_ G1,Y1 | A,N", g);
  CHECK(q.x == std::vector<std::string>{"B", "R"});
  CHECK(q.y == std::vector<std::string>{"G1", "Y1"});
  CHECK(q.z == std::vector<std::string>{"A", "N"});

  CiQuery marg = parse_query("A _||_ B", g);
  CHECK(marg.z.empty());

  Dag aug_iv = test::load_fixture("instrumental_aug.dag").dag;
  CiQuery eci = parse_query("Y _||_ F_X | Z,U,X", aug_iv);
  CHECK(eci.y == std::vector<std::string>{"F_X"});

  CHECK_THROWS_AS(parse_query("A _||_ A", g), QueryError);
  CHECK_THROWS_AS(parse_query("A _||_ Q", g), QueryError);
  CHECK_THROWS_AS(parse_query("A , _||_ B", g), QueryError);
  CHECK_THROWS_AS(parse_query("A B", g), QueryError);
  CHECK_THROWS_AS(parse_query("A _||_ B | ", g), QueryError);
  CHECK_THROWS_AS(parse_query("A _||_ B | C | D", g), QueryError);
}

TEST_CASE("round trip: every fixture survives parse -> serialize -> parse") {
  for (const char* name :
       {"evidence.dag", "instrumental.dag", "instrumental_aug.dag", "instrumental_aug_v.dag",
        "chain.dag", "chain_rev.dag", "fork.dag", "collider.dag", "aug_chain1.dag",
        "aug_chain2.dag", "aug_chain3.dag", "pearl.dag", "pearl_aug.dag", "instrumental.bn",
        "instrumental_spm.scm", "simple.scm", "simple_comonotone.scm"}) {
    CAPTURE(name);
    ParsedModel m = parse_graph_file(slurp(name), name);
    std::string text = to_text(m);
    ParsedModel again = parse_graph_file(text, name);
    CHECK(m.richness == again.richness);
    CHECK(m.dag == again.dag);
    if (m.bayes_net) CHECK(*m.bayes_net == *again.bayes_net);
    if (m.scm) CHECK(*m.scm == *again.scm);
    if (m.augmented) {
      REQUIRE(again.augmented);
      CHECK(m.augmented->dag() == again.augmented->dag());
      CHECK(m.augmented->cpts() == again.augmented->cpts());
    }
    // Serialization is a fixed point after one round.
    CHECK(to_text(again) == text);
  }
}

TEST_CASE("augmented net files: observational rows, surgical expansion") {
  ParsedModel m = test::load_fixture("instrumental.bn");
  CHECK(m.richness == ParsedModel::Richness::BayesNet);
  REQUIRE(m.augmented);
  const Cpt& cx = m.augmented->cpt("X");
  REQUIRE(cx.parent_order == std::vector<std::string>{"Z", "U", "F_X"});
  // Idle slice of the first parent row equals the declared observational row.
  CHECK(cx.table[2] == std::vector<double>{0.75, 0.25});
  CHECK(cx.table[0] == std::vector<double>{1.0, 0.0});
  CHECK(cx.table[1] == std::vector<double>{0.0, 1.0});
}

TEST_CASE("regime declared before its target still augments correctly") {
  std::string text =
      "regime F_A targets A\nvar B\nvar A\nedge B -> A\nedge F_A -> A\n"
      "cpt A | B : 0.8,0.2,0.3,0.7\ncpt B : 0.5,0.5\n";
  ParsedModel m = parse_graph_file(text, "t");
  REQUIRE(m.augmented);
  // The regime parent goes last in the cpt regardless of declaration order.
  CHECK(m.augmented->cpt("A").parent_order == std::vector<std::string>{"B", "F_A"});
  JointTable t = interventional_joint(
      *m.augmented, RegimeAssignment::build(m.augmented->dag(), {{"F_A", 1}}));
  CHECK(t.at({0, 1}) == 0.5);
  CHECK(t.at({1, 1}) == 0.5);
  CHECK(t.at({0, 0}) == 0.0);
}

TEST_CASE("scm files parse into structural models") {
  ParsedModel m = test::load_fixture("simple.scm");
  CHECK(m.richness == ParsedModel::Richness::Scm);
  REQUIRE(m.scm);
  CHECK(m.scm->function("Y").parent_order == std::vector<std::string>{"X", "E_Y"});
  CHECK(m.scm->error("E_Y").atoms.size() == 4);

  // errdist length must match the error cardinality.
  CHECK_THROWS_AS(
      parse_graph_file("var A\nerror E\nedge E -> A\nerrdist E : 0.5,0.25,0.25\nfn A | E : 0,1\n",
                       "t"),
      ParseError);
}

TEST_CASE("float formatting is stable at 12 significant digits") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(1.0 / 3.0) == "0.333333333333");
  CHECK(format_double(0.1234567890123456) == "0.123456789012");
}
