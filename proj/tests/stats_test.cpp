#include <gtest/gtest.h>

#include "project.hpp"

using namespace strata;
namespace fs = std::filesystem;
using strata::testing::Project;

namespace {

// The shipped lib/std defines 14 strategy keys, each in one module, with no
// dynamic rules, overlays or ambiguous sites.
constexpr int kStdKeys = 14;

const fs::path kFixtures = STRATA_FIXTURES_DIR;

// sig, a..e, o and the main module `stats`: `shared` is defined in a, b and c;
// Once has one contribution and Thrice three; overlay Unused is used nowhere
// and Pair2 in d and e; `twice(shared)` is the one bare-name argument.
void ground_truth_corpus(const Project& p) { strata::testing::copy_tree(kFixtures / "stats" / "src", p.src()); }

}  // namespace

TEST(Stats, GroundTruthCorpus) {
  Project p("stats");
  ground_truth_corpus(p);
  auto c = p.collect("stats");
  ASSERT_TRUE(c.errors.empty()) << render(c.errors[0]);
  auto s = pipeline::compute_stats(c);
  EXPECT_EQ(s.modules, 9);  // eight sources plus lib/std
  EXPECT_EQ(s.libraries, 0);
  EXPECT_EQ(s.strategy_keys, kStdKeys + 10);
  EXPECT_EQ(s.congruences, 1);
  EXPECT_EQ(s.dyn_rule_names, 2);
  EXPECT_EQ(s.dyn_rule_contributions, (std::map<int, int>{{1, 1}, {3, 1}}));
  EXPECT_EQ(s.modules_per_strategy, (std::map<int, int>{{1, kStdKeys + 9}, {3, 1}}));
  EXPECT_EQ(s.ambiguous_sites, 1);
  EXPECT_EQ(s.overlays, 2);
  EXPECT_EQ(s.overlay_users, (std::map<int, int>{{0, 1}, {2, 1}}));
}

TEST(Stats, RenderedReport) {
  Project p("stats");
  ground_truth_corpus(p);
  EXPECT_EQ(pipeline::render_stats(pipeline::compute_stats(p.collect("stats"))),
            strata::testing::read_text(kFixtures / "stats" / "expected.txt"));
}

TEST(Stats, LibrariesAreCounted) {
  Project p("stats");
  p.library("base", {{{"f", 0, 0}, "Id()"}});
  p.module("m", "module m imports base strategies\n  main = f\n");
  auto s = pipeline::compute_stats(p.collect("m"));
  EXPECT_EQ(s.libraries, 1);
  EXPECT_EQ(s.strategy_keys, kStdKeys + 1);
}

TEST(Stats, CollectDoesNotWriteOutputs) {
  Project p("stats");
  ground_truth_corpus(p);
  p.collect("stats");
  EXPECT_FALSE(fs::exists(p.out()));
  EXPECT_FALSE(fs::exists(p.store()));
}
