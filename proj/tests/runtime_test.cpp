#include <gtest/gtest.h>

#include <sstream>

#include "project.hpp"

using namespace strata;
namespace fs = std::filesystem;
using strata::testing::Project;

namespace {

struct Run {
  std::optional<Term> result;
  std::string debug;
};

Run run(const std::string& strategies, const std::string& input, std::size_t max_depth = 100000) {
  Project p("rt");
  p.module("m", "module m\nsignature constructors\n  F : 2\n  G : 1\n  Pair : 2\n  Nil : 0\nstrategies\n" + strategies);
  auto r = p.compile("m");
  if (!r.report.errors.empty()) throw std::runtime_error(render(r.report.errors.front()));
  auto program = p.load();
  std::ostringstream dbg;
  runtime::Options opts;
  opts.max_depth = max_depth;
  opts.debug = &dbg;
  runtime::Interpreter interp(program, opts);
  Run out;
  out.result = interp.apply({"main", 0, 0}, parse_term(input));
  out.debug = dbg.str();
  return out;
}

std::string show(const Run& r) { return r.result ? print_term(*r.result) : "<fail>"; }

std::string eval(const std::string& main_body, const std::string& input = "0") {
  return show(run("  main = " + main_body + "\n", input));
}

}  // namespace

TEST(Laws, IdentityAndFailure) {
  EXPECT_EQ(eval("id", "F(1,2)"), "F(1,2)");
  EXPECT_EQ(eval("fail"), "<fail>");
  EXPECT_EQ(eval("id; fail"), "<fail>");
  EXPECT_EQ(eval("fail <+ id", "7"), "7");
}

TEST(Laws, MatchBindsAndBuildUsesBindings) {
  EXPECT_EQ(eval("?F(x, y); !F(y, x)", "F(1,\"a\")"), "F(\"a\",1)");
  EXPECT_EQ(eval("?F(x, x)", "F(1,2)"), "<fail>");
  EXPECT_EQ(eval("?F(x, x)", "F(3,3)"), "F(3,3)");
  EXPECT_EQ(eval("?[x|xs]; !(x, xs)", "[1,2,3]"), "(1,[2,3])");
  EXPECT_EQ(eval("?_; !Nil()", "[1]"), "Nil()");
}

TEST(Laws, LeftChoiceUndoesBindingsOfTheFailedBranch) {
  EXPECT_EQ(eval("{x: (!1; ?x; fail) <+ (!2; ?x)}"), "2");
  EXPECT_EQ(eval("{x: !1; ?x; ((!5; ?y; fail) <+ !x)}"), "1");
}

TEST(Laws, LeftChoiceRestoresTheSubject) {
  EXPECT_EQ(eval("(!5; fail) <+ id", "3"), "3");
}

TEST(Laws, ScopeHidesInnerBindings) {
  EXPECT_EQ(eval("?x; {x: !9; ?x}; !x", "4"), "4");
}

TEST(Laws, SequenceIsAssociative) {
  for (std::string in : {"1", "F(1,2)", "[]"}) {
    EXPECT_EQ(eval("(?x; !G(x)); !G(G(x))", in), eval("?x; (!G(x); !G(G(x)))", in));
  }
}

TEST(Laws, AllAppliesToEveryChild) {
  EXPECT_EQ(eval("all(!0)", "F(1,2)"), "F(0,0)");
  EXPECT_EQ(eval("all(!0)", "[1,2,3]"), "[0,0,0]");
  EXPECT_EQ(eval("all(!0)", "(1,2)"), "(0,0)");
  EXPECT_EQ(eval("all(fail)", "5"), "5");
  EXPECT_EQ(eval("all(?1)", "F(1,2)"), "<fail>");
}

TEST(Laws, CongruenceAppliesPositionally) {
  EXPECT_EQ(eval("Pair(!1, !2)", "Pair(0,0)"), "Pair(1,2)");
  EXPECT_EQ(eval("Pair(id, fail)", "Pair(0,0)"), "<fail>");
  EXPECT_EQ(eval("Pair(id, id)", "F(0,0)"), "<fail>");
}

TEST(Laws, ApplyAndWhereBind) {
  EXPECT_EQ(eval("<addi> (2, 3) => x; !G(x)"), "G(5)");
  EXPECT_EQ(eval("\\G(x) -> x\\", "G(8)"), "8");
  EXPECT_EQ(eval("\\G(x) -> x\\", "F(8,8)"), "<fail>");
}

TEST(Laws, RulesWithWhereClauses) {
  EXPECT_EQ(show(run("  main = swap\nrules\n  swap: F(a, b) -> F(b, a) where <gti> (a, b)\n", "F(3,1)")), "F(1,3)");
  EXPECT_EQ(show(run("  main = swap\nrules\n  swap: F(a, b) -> F(b, a) where <gti> (a, b)\n", "F(1,3)")), "<fail>");
}

TEST(Laws, StrategyParametersAndTermArguments) {
  EXPECT_EQ(show(run("  main = wrap(!G(0)|7)\n  wrap(s|t) = s; ?G(x); !F(x, t)\n", "1")), "F(0,7)");
  EXPECT_EQ(show(run("  main = map(\\x -> G(x)\\)\n", "[1,2]")), "[G(1),G(2)]");
}

TEST(Laws, RecursionThroughTheStandardLibrary) {
  EXPECT_EQ(show(run("  main = innermost(\\G(G(x)) -> x\\)\n", "G(G(G(G(G(1)))))")), "G(1)");
  EXPECT_EQ(show(run("  main = <conc> ([1,2], [3])\n", "0")), "[1,2,3]");
}

TEST(Primitives, Arithmetic) {
  EXPECT_EQ(eval("addi", "(40,2)"), "42");
  EXPECT_EQ(eval("subti", "(40,2)"), "38");
  EXPECT_EQ(eval("muli", "(-4,3)"), "-12");
  EXPECT_EQ(eval("lti", "(1,2)"), "(1,2)");
  EXPECT_EQ(eval("lti", "(2,2)"), "<fail>");
  EXPECT_EQ(eval("gti", "(3,2)"), "(3,2)");
  EXPECT_EQ(eval("eqi", "(2,2)"), "(2,2)");
  EXPECT_EQ(eval("not-zero", "0"), "<fail>");
  EXPECT_EQ(eval("not-zero", "-3"), "-3");
}

TEST(Primitives, OverflowAndBadOperandsAreRuntimeErrors) {
  EXPECT_THROW(eval("addi", "(9223372036854775807,1)"), runtime::RuntimeError);
  EXPECT_THROW(eval("muli", "(4611686018427387904,2)"), runtime::RuntimeError);
  EXPECT_THROW(eval("addi", "(1,\"x\")"), runtime::RuntimeError);
}

TEST(Primitives, NewIsFreshWithinOneRun) {
  EXPECT_EQ(eval("new => a; new => b; !(a, b)"), "(\"v_0\",\"v_1\")");
}

TEST(Primitives, DebugPrintsAndPassesThrough) {
  auto r = run("  main = debug; !1\n", "F(1,[])");
  EXPECT_EQ(show(r), "1");
  EXPECT_EQ(r.debug, "F(1,[])\n");
}

TEST(Limits, DeepRecursionIsARuntimeError) {
  EXPECT_THROW(run("  main = main\n", "0", 1000), runtime::RuntimeError);
}

TEST(Limits, DeepButBoundedRecursionSucceeds) {
  // 50000 nested calls on the default limit.
  EXPECT_EQ(show(run("  main = count\n  count = ?0 <+ (?n; <subti> (n, 1) => m; <count> m)\n", "50000")), "0");
}

TEST(DynamicRules, DefineThenApply) {
  EXPECT_EQ(eval("{| K : rules(K: 1 -> 10); <K> 1 |}"), "10");
  EXPECT_EQ(eval("{| K : rules(K: 1 -> 10); <K> 2 |}"), "<fail>");
}

TEST(DynamicRules, CapturesValuesAtDefinitionTime) {
  EXPECT_EQ(eval("{| K : !5 => v; rules(K: 1 -> v); <K> 1 |}"), "5");
}

TEST(DynamicRules, NewestDefinitionWins) {
  EXPECT_EQ(eval("{| K : rules(K: 1 -> 10); rules(K: 1 -> 20); <K> 1 |}"), "20");
}

TEST(DynamicRules, ScopeRestoresOuterEntries) {
  EXPECT_EQ(eval("{| K : rules(K: 1 -> 10); {| K : rules(K: 1 -> 20) |}; <K> 1 |}"), "10");
  EXPECT_EQ(eval("{| K : {| K : rules(K: 1 -> 20) |}; <K> 1 |}"), "<fail>");
}

TEST(DynamicRules, FailedChoiceBranchKeepsItsRules) {
  // Choice restores bindings, not the rule store.
  EXPECT_EQ(eval("{| K : ((rules(K: 1 -> 10); fail) <+ id); <K> 1 |}"), "10");
  EXPECT_EQ(eval("{| K : ((?x; rules(K: 1 -> x); fail) <+ !2); <K> 1 |}", "7"), "7");
}

TEST(DynamicRules, Undefine) {
  EXPECT_EQ(eval("{| K : rules(K: 1 -> 10); rules(K :- 1); <K> 1 |}"), "<fail>");
}
