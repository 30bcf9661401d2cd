#include <gtest/gtest.h>

#include "project.hpp"

using namespace strata;
using strata::testing::error_kinds;
using strata::testing::Project;
using syntax::StrategyKey;
namespace fs = std::filesystem;

namespace {

using Kinds = std::vector<std::string>;

std::optional<StrategyKey> resolution(const pipeline::Collected& c, const std::string& mod, const StrategyKey& site,
                                      const std::string& name) {
  auto it = c.analysis.resolutions.find({mod, site, name});
  if (it == c.analysis.resolutions.end()) return std::nullopt;
  return it->second;
}

// `g` passes the bare name `f` to a one-parameter strategy.
std::string ambiguity_module(const std::string& f_defs) {
  return "module m strategies\n  twice(s|) = s; s\n  g = twice(f)\n" + f_defs;
}

}  // namespace

TEST(Ambiguity, NullaryCandidateWins) {
  Project p;
  p.module("m", ambiguity_module("  f = id\n  f(s|) = s\n"));
  auto c = p.collect("m");
  EXPECT_TRUE(c.errors.empty());
  EXPECT_EQ(resolution(c, "m", {"g", 0, 0}, "f"), (StrategyKey{"f", 0, 0}));
}

TEST(Ambiguity, SingleCandidateOfAnyArity) {
  Project p;
  p.module("m", ambiguity_module("  f(s|t) = !t; s\n"));
  auto c = p.collect("m");
  EXPECT_TRUE(c.errors.empty());
  EXPECT_EQ(resolution(c, "m", {"g", 0, 0}, "f"), (StrategyKey{"f", 1, 1}));
}

TEST(Ambiguity, TwoNonNullaryCandidatesIsAnError) {
  Project p;
  p.module("m", ambiguity_module("  f(s|) = s\n  f(|t) = !t\n"));
  auto c = p.collect("m");
  EXPECT_EQ(error_kinds(c.errors), Kinds{"AmbiguousReference"});
  EXPECT_EQ(c.errors.at(0).subject, "f");
  EXPECT_FALSE(resolution(c, "m", {"g", 0, 0}, "f"));
}

TEST(Ambiguity, NoCandidateIsAnError) {
  Project p;
  p.module("m", "module m strategies\n  twice(s|) = s; s\n  g = twice(nothing)\n");
  EXPECT_EQ(error_kinds(p.collect("m").errors), Kinds{"AmbiguousReference"});
}

TEST(Ambiguity, OnlyVisibleCandidatesCount) {
  // f/1-0 lives in a module m does not import; only f/0-0 is a candidate.
  Project p;
  p.module("m", "module m imports a strategies\n  twice(s|) = s; s\n  g = twice(f)\n");
  p.module("a", "module a strategies\n  f(|t) = !t\n");
  p.module("b", "module b imports m strategies\n  f(s|) = s\n");
  auto c = p.collect("b");
  EXPECT_TRUE(c.errors.empty());
  EXPECT_EQ(resolution(c, "m", {"g", 0, 0}, "f"), (StrategyKey{"f", 0, 1}));
}

TEST(Overlays, SelfLoop) {
  Project p;
  p.module("m", "module m signature constructors B : 0 overlays\n  A() = A()\nstrategies\n  main = !A()\n");
  auto c = p.collect("m");
  EXPECT_EQ(error_kinds(c.errors), Kinds{"OverlayCycle"});
  EXPECT_EQ(c.errors.at(0).subject, "{A/0}");
}

TEST(Overlays, IndirectCycle) {
  Project p;
  p.module("m", "module m imports n overlays\n  A() = B()\n");
  p.module("n", "module n imports m overlays\n  B() = A()\n");
  auto c = p.collect("m");
  ASSERT_EQ(error_kinds(c.errors), Kinds{"OverlayCycle"});
  EXPECT_EQ(c.errors.at(0).subject, "{A/0, B/0}");
}

TEST(Overlays, AcyclicChainIsFine) {
  Project p;
  p.module("m", "module m signature constructors C : 1\noverlays\n  A() = B()\n  B() = C(1)\n");
  EXPECT_TRUE(p.collect("m").errors.empty());
}

class ExtendOverride : public ::testing::Test {
 protected:
  ExtendOverride() {
    p.library("base", {{{"f", 0, 0}, "Id()"}});
  }
  std::vector<StaticError> errors_of(const std::string& main) { return p.collect(main).errors; }
  Project p;
};

TEST_F(ExtendOverride, OverrideOfLibraryStrategyIsFine) {
  p.module("m", "module m imports base strategies\n  override f = fail\n");
  EXPECT_TRUE(errors_of("m").empty());
}

TEST_F(ExtendOverride, ExtendOfLibraryStrategyIsFine) {
  p.module("m", "module m imports base strategies\n  extend f = proceed <+ fail\n");
  EXPECT_TRUE(errors_of("m").empty());
}

TEST_F(ExtendOverride, ClauseA_NoLibraryDefinition) {
  p.module("m", "module m imports base strategies\n  extend h = proceed\n");
  auto e = errors_of("m");
  ASSERT_EQ(error_kinds(e), Kinds{"ExtendOverrideViolation"});
  EXPECT_EQ(e[0].detail.substr(0, 3), "(a)");
  EXPECT_EQ(e[0].subject, "h/0-0");
}

TEST_F(ExtendOverride, ClauseB_TwoExtensions) {
  p.module("m", "module m imports base n strategies\n  extend f = proceed\n");
  p.module("n", "module n imports base strategies\n  extend f = fail <+ proceed\n");
  auto e = errors_of("m");
  ASSERT_EQ(error_kinds(e), Kinds{"ExtendOverrideViolation"});
  EXPECT_EQ(e[0].detail.substr(0, 3), "(b)");
}

TEST_F(ExtendOverride, ClauseC_PlainRedefinition) {
  p.module("m", "module m imports base strategies\n  f = fail\n");
  auto e = errors_of("m");
  ASSERT_EQ(error_kinds(e), Kinds{"ExtendOverrideViolation"});
  EXPECT_EQ(e[0].detail.substr(0, 3), "(c)");
}

TEST_F(ExtendOverride, ClauseD_ExtendAndOverride) {
  p.module("m", "module m imports base n strategies\n  extend f = proceed\n");
  p.module("n", "module n imports base strategies\n  override f = fail\n");
  auto e = errors_of("m");
  ASSERT_EQ(error_kinds(e), Kinds{"ExtendOverrideViolation"});
  EXPECT_EQ(e[0].detail.substr(0, 3), "(d)");
}

TEST(Visibility, TransitiveChain) {
  Project p;
  p.module("a", "module a imports b strategies\n  main = helper\n");
  p.module("b", "module b imports c\n");
  p.module("c", "module c strategies\n  helper = id\n");
  auto r = p.compile("a");
  EXPECT_TRUE(r.report.errors.empty());
  p.module("c", "module c strategies\n  other = id\n");
  r = p.compile("a");
  ASSERT_EQ(error_kinds(r.report.errors), Kinds{"UnresolvedStrategy"});
  EXPECT_EQ(r.report.errors[0].subject, "helper/0-0");
  EXPECT_EQ(r.report.errors[0].module, "a");
}

TEST(Visibility, ImportCycle) {
  Project p;
  p.module("x", "module x imports y strategies\n  main = from-y\n  from-x = id\n");
  p.module("y", "module y imports x strategies\n  from-y = from-x\n");
  auto r = p.compile("x");
  EXPECT_TRUE(r.report.errors.empty());
  p.module("x", "module x imports y strategies\n  main = from-y\n");
  r = p.compile("x");
  ASSERT_EQ(error_kinds(r.report.errors), Kinds{"UnresolvedStrategy"});
  EXPECT_EQ(r.report.errors[0].subject, "from-x/0-0");
  EXPECT_EQ(r.report.errors[0].module, "y");
}

TEST(Visibility, ImporterDefinitionsAreNotVisible) {
  Project p;
  p.module("a", "module a imports b strategies\n  up = id\n");
  p.module("b", "module b strategies\n  down = up\n");
  EXPECT_EQ(error_kinds(p.collect("a").errors), Kinds{"UnresolvedStrategy"});
}

TEST(Visibility, ConstructorArityMustMatch) {
  Project p;
  p.module("m", "module m signature constructors C : 3\nstrategies\n  main = !C(1, 2)\n");
  EXPECT_EQ(error_kinds(p.collect("m").errors), Kinds{"UnresolvedConstructor"});
}

TEST(Visibility, CongruenceFallback) {
  Project p;
  p.module("m", "module m signature constructors Pair : 2\nstrategies\n  main = Pair(id, fail)\n");
  auto c = p.collect("m");
  EXPECT_TRUE(c.errors.empty());
  EXPECT_TRUE(c.analysis.congruences.count({"Pair", 2}));
}

TEST(FrontEnd, MissingImportNamesTheImporter) {
  Project p;
  p.module("m", "module m imports ghost\n");
  auto r = p.compile("m");
  ASSERT_EQ(error_kinds(r.report.errors), Kinds{"ModuleNotFound"});
  EXPECT_EQ(r.report.errors[0].subject, "ghost");
  EXPECT_EQ(r.report.errors[0].module, "m");
}

TEST(FrontEnd, ErrorsLeaveNoUnits) {
  Project p;
  p.module("m", "module m strategies\n  main = nope\n");
  auto r = p.compile("m");
  EXPECT_FALSE(r.report.errors.empty());
  EXPECT_EQ(r.report.units, 0);
  EXPECT_FALSE(fs::exists(p.out() / "program.manifest"));
}
