#include <gtest/gtest.h>

#include "corpus.hpp"
#include "project.hpp"

using namespace strata;
using strata::testing::CorpusGen;
using strata::testing::Project;

TEST(Corpus, GeneratedProgramCompilesCleanly) {
  CorpusGen gen(12, 8, 7);
  Project p("corpus");
  gen.write(p.src());
  EXPECT_EQ(gen.definition_count(), 12 * 8 + 1);
  auto r = p.compile(gen.main_module());
  ASSERT_TRUE(r.report.errors.empty()) << render(r.report.errors[0]);
}

TEST(Corpus, SameSeedSameProgram) {
  Project a("corpus-a"), b("corpus-b");
  CorpusGen(6, 5, 3).write(a.src());
  CorpusGen(6, 5, 3).write(b.src());
  for (const auto& e : std::filesystem::recursive_directory_iterator(a.src())) {
    if (!e.is_regular_file()) continue;
    auto rel = std::filesystem::relative(e.path(), a.src());
    EXPECT_EQ(strata::testing::read_text(e.path()), strata::testing::read_text(b.src() / rel));
  }
}

TEST(Corpus, ShortScriptMatchesCleanBuildsEverywhere) {
  CorpusGen gen(10, 6, 11);
  Project p("corpus");
  gen.write(p.src());
  auto script = gen.edit_script(20);
  ASSERT_EQ(script.steps.size(), 20u);

  bench::BenchOptions o;
  o.main = gen.main_module();
  o.config = p.config();
  o.store = p.store();
  o.verify = true;
  auto rows = bench::run_bench(o, script);
  ASSERT_EQ(rows.size(), 21u);
  EXPECT_EQ(rows[0].step, "CLEAN");
  EXPECT_FALSE(rows[0].errors);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].verify, "ok") << rows[i].step;
    bool broken = rows[i].step.find("break") != std::string::npos;
    EXPECT_EQ(rows[i].errors, broken) << rows[i].step;
  }
}
