#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "testutil.hpp"

#include "cli.hpp"

using namespace cde;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fx(const std::string& name) { return test::fixture_path(name); }

}  // namespace

TEST_CASE("ci subcommand answers the worked query") {
  Result r = run({"ci", "-g", fx("evidence.dag"), "-q", "B,R _||_ G1,Y1 | A,N"});
  CHECK(r.code == 0);
  CHECK(r.out == "true\n");
  CHECK(r.err.empty());
}

TEST_CASE("dsep agrees and prints witnesses on request") {
  Result t = run({"dsep", "-g", fx("instrumental.dag"), "-q", "Y _||_ Z | U,X"});
  CHECK(t.code == 0);
  CHECK(t.out == "true\n");

  Result f = run({"dsep", "-g", fx("instrumental.dag"), "-q", "Y _||_ Z | X", "--witness"});
  CHECK(f.code == 0);
  CHECK(f.out.substr(0, 6) == "false\n");
  CHECK(f.out.find("witness:") != std::string::npos);
}

TEST_CASE("equiv and class") {
  CHECK(run({"equiv", "-g", fx("chain.dag"), "-h", fx("fork.dag")}).out == "true\n");
  CHECK(run({"equiv", "-g", fx("chain.dag"), "-h", fx("collider.dag")}).out == "false\n");

  Result cls = run({"class", "-g", fx("chain.dag")});
  CHECK(cls.out ==
        "size=3\n"
        "A->B B->C\n"
        "B->A B->C\n"
        "B->A C->B\n");
}

TEST_CASE("augment emits the serialized augmented graph") {
  Result r = run({"augment", "-g", fx("instrumental.dag"), "--targets", "X"});
  CHECK(r.code == 0);
  CHECK(r.out ==
        "var Z\n"
        "var U\n"
        "var X\n"
        "var Y\n"
        "regime F_X targets X\n"
        "edge Z -> X\n"
        "edge U -> X\n"
        "edge U -> Y\n"
        "edge X -> Y\n"
        "edge F_X -> X\n");

  Result all = run({"augment", "-g", fx("pearl.dag"), "--all"});
  CHECK(all.out.find("regime F_E targets E") != std::string::npos);

  CHECK(run({"augment", "-g", fx("pearl.dag")}).code == 2);
  CHECK(run({"augment", "-g", fx("pearl.dag"), "--all", "--targets", "A"}).code == 2);
}

TEST_CASE("eci on the augmented instrumental graph") {
  CHECK(run({"eci", "-g", fx("instrumental_aug.dag"), "-q", "U,Z _||_ F_X"}).out == "true\n");
  Result bad = run({"eci", "-g", fx("instrumental_aug.dag"), "-q", "F_X _||_ Y"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("stochastic") != std::string::npos);
}

TEST_CASE("intervene: regime node, domain auto-augmentation, idle") {
  Result by_regime = run({"intervene", "-g", fx("instrumental.bn"), "--set", "F_X=1"});
  CHECK(by_regime.code == 0);

  Result idle = run({"intervene", "-g", fx("instrumental.bn"), "--set", "F_X=idle"});
  CHECK(idle.code == 0);

  // Observational equals all-idle.
  Result obs = run({"intervene", "-g", fx("instrumental.bn")});
  CHECK(obs.out == idle.out);

  // chain.bn has no regime nodes; naming the domain node augments on the fly,
  // and p(C) under do(B=1) equals the observational conditional p(C | B=1).
  Result doB = run({"intervene", "-g", fx("chain.bn"), "--set", "B=1"});
  CHECK(doB.code == 0);
  CHECK(doB.out.find("vars A B C\n") == 0);
  CHECK(doB.out.find("1 1 1 : 0.54\n") != std::string::npos);  // 0.6 * 1 * 0.9

  Result bad = run({"intervene", "-g", fx("instrumental.bn"), "--set", "Q=1"});
  CHECK(bad.code == 2);
  Result badval = run({"intervene", "-g", fx("instrumental.bn"), "--set", "F_X=7"});
  CHECK(badval.code == 2);
}

TEST_CASE("intervene on a structural model matches the net route") {
  Result bn_route = run({"intervene", "-g", fx("instrumental.bn"), "--set", "F_X=0"});
  Result scm_route = run({"intervene", "-g", fx("instrumental_spm.scm"), "--set", "F_X=0"});
  CHECK(bn_route.code == 0);
  CHECK(scm_route.code == 0);
  CHECK(bn_route.out == scm_route.out);
}

TEST_CASE("marginal with and without conditioning") {
  Result m = run({"marginal", "-g", fx("instrumental.bn"), "--vars", "Y"});
  CHECK(m.code == 0);
  CHECK(m.out.find("vars Y\n") == 0);

  Result c = run({"marginal", "-g", fx("instrumental.bn"), "--vars", "Y", "--given", "X=1"});
  CHECK(c.code == 0);
  CHECK(c.out != m.out);

  // A bare dag has no distribution.
  CHECK(run({"marginal", "-g", fx("instrumental.dag"), "--vars", "Y"}).code == 2);

  // Structural models marginalise through the induced domain joint.
  Result s = run({"marginal", "-g", fx("instrumental_spm.scm"), "--vars", "Y"});
  CHECK(s.out == m.out);
  Result sc =
      run({"marginal", "-g", fx("instrumental_spm.scm"), "--vars", "Y", "--given", "X=1"});
  CHECK(sc.out == c.out);
}

TEST_CASE("pc and counterfactual on the simple structural models") {
  CHECK(run({"pc", "-g", fx("simple.scm"), "--cause", "X", "--outcome", "Y"}).out ==
        "pc=0.5\n");
  CHECK(run({"pc", "-g", fx("simple_comonotone.scm"), "--cause", "X", "--outcome", "Y"}).out ==
        "pc=0\n");

  Result cf = run({"counterfactual", "-g", fx("simple.scm"), "--cause", "X", "--outcome", "Y"});
  CHECK(cf.out ==
        "responses Y under X=0..1\n"
        "0 0 : 0.25\n"
        "0 1 : 0.25\n"
        "1 0 : 0.25\n"
        "1 1 : 0.25\n");

  // Same observables, different counterfactuals.
  Result cf2 = run({"counterfactual", "-g", fx("simple_comonotone.scm"), "--cause", "X",
                    "--outcome", "Y"});
  CHECK(cf2.out ==
        "responses Y under X=0..1\n"
        "0 0 : 0.5\n"
        "0 1 : 0\n"
        "1 0 : 0\n"
        "1 1 : 0.5\n");

  CHECK(run({"pc", "-g", fx("instrumental.dag"), "--cause", "X", "--outcome", "Y"}).code == 2);
}

TEST_CASE("pc-bounds prints the assumption banner and the interval") {
  Result r = run({"pc-bounds", "--p0", "0.25", "--p1", "0.5"});
  CHECK(r.code == 0);
  CHECK(r.out ==
        "# assumes ignorability: observational rows are taken as the laws of the potential "
        "responses\n"
        "lower=0.5 upper=1\n");
  CHECK(run({"pc-bounds", "--p0", "2", "--p1", "0.5"}).code == 2);
}

TEST_CASE("spm-from-bn output parses and reproduces the joint") {
  Result r = run({"spm-from-bn", "-g", fx("instrumental.bn")});
  REQUIRE(r.code == 0);
  ParsedModel m = parse_graph_file(r.out, "generated");
  REQUIRE(m.scm);
  ParsedModel original = test::load_fixture("instrumental.bn");
  JointTable from_scm = spm_joint(*m.scm);
  JointTable from_bn = joint(original.augmented->observational());
  CHECK(test::table_max_diff(from_scm, from_bn) < 1e-9);
}

TEST_CASE("validate reports the model shape") {
  CHECK(run({"validate", "-g", fx("instrumental.dag")}).out == "dag: 4 nodes, 4 edges\n");
  CHECK(run({"validate", "-g", fx("instrumental.bn")}).out ==
        "augmented bayes_net: 5 nodes, 5 edges\n");
  CHECK(run({"validate", "-g", fx("simple.scm")}).out == "scm: 4 nodes, 3 edges\n");
  Result missing = run({"validate", "-g", fx("nope.dag")});
  CHECK(missing.code == 2);
  CHECK_FALSE(missing.err.empty());
}

TEST_CASE("json output is schema-versioned and machine-readable") {
  Result r = run({"ci", "-g", fx("evidence.dag"), "-q", "B,R _||_ G1,Y1 | A,N", "--json"});
  REQUIRE(r.code == 0);
  nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j["schema"] == 1);
  CHECK(j["command"] == "ci");
  CHECK(j["result"] == true);
  CHECK(j["inputs"]["query"] == "B,R _||_ G1,Y1 | A,N");

  Result w = run({"dsep", "-g", fx("instrumental.dag"), "-q", "Y _||_ Z | X", "--witness",
                  "--json"});
  nlohmann::json jw = nlohmann::json::parse(w.out);
  CHECK(jw["result"] == false);
  CHECK(jw["witness"].is_array());
  CHECK_FALSE(jw["witness"].empty());

  nlohmann::json jb = nlohmann::json::parse(
      run({"pc-bounds", "--p0", "0.25", "--p1", "0.5", "--json"}).out);
  CHECK(jb["result"]["lower"] == 0.5);
  CHECK(jb["result"]["upper"] == 1.0);

  nlohmann::json jm = nlohmann::json::parse(
      run({"marginal", "-g", fx("instrumental.bn"), "--vars", "Y", "--json"}).out);
  CHECK(jm["result"]["variables"] == nlohmann::json::array({"Y"}));
}

TEST_CASE("identical invocations produce byte-identical output") {
  for (std::vector<std::string> args :
       {std::vector<std::string>{"ci", "-g", fx("evidence.dag"), "-q",
                                 "B,R _||_ G1,Y1 | A,N", "--json"},
        {"class", "-g", fx("pearl.dag")},
        {"intervene", "-g", fx("instrumental.bn"), "--set", "F_X=1"},
        {"counterfactual", "-g", fx("simple.scm"), "--cause", "X", "--outcome", "Y"}}) {
    Result a = run(args);
    Result b = run(args);
    CHECK(a.code == b.code);
    CHECK(a.out == b.out);
  }
}

TEST_CASE("CDE_MAX_CELLS lowers the capacity guard") {
  std::string base = std::string(CDE_CLI_BIN) + " marginal -g " + fx("chain.bn") +
                     " --vars A,B,C >/dev/null 2>&1";
  int ok = std::system(base.c_str());
  CHECK(WEXITSTATUS(ok) == 0);
  int capped = std::system(("CDE_MAX_CELLS=4 " + base).c_str());
  CHECK(WEXITSTATUS(capped) == 2);
}

TEST_CASE("usage errors exit with status 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"ci", "-g", fx("chain.dag")}).code == 2);       // missing -q
  CHECK(run({"ci", "--bogus"}).code == 2);                   // unknown flag
  Result parse_err = run({"ci", "-g", fx("simple.scm"), "-q", "A _||_ A"});
  CHECK(parse_err.code == 2);
  CHECK(parse_err.err.find("error:") == 0);

  Result help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("ci") != std::string::npos);

  // Reserved global flag is accepted.
  CHECK(run({"--seed", "7", "validate", "-g", fx("chain.dag")}).code == 0);
}
