// Acceptance run: one PASS/FAIL line per criterion. Criteria 1 and 8 are
// measured here; the others run their gtest cases in a child process and
// require every named case to have run and passed.
#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include "corpus.hpp"
#include "fs_util.hpp"
#include "strata/bench.hpp"

namespace fs = std::filesystem;
using namespace strata;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

pipeline::Config config_for(const fs::path& root) {
  pipeline::Config c;
  c.src = root / "src";
  c.out = root / "out";
  c.std_root = pipeline::default_std_root();
  return c;
}

Outcome incremental_equals_clean() {
  testing::TempDir dir("accept-c1");
  testing::CorpusGen gen(50, 8, 20261016);
  gen.write(dir / "src");
  int defs = gen.definition_count();
  auto script = gen.edit_script(50);
  bench::BenchOptions o;
  o.main = gen.main_module();
  o.config = config_for(dir.path());
  o.store = dir / "store";
  o.verify = true;
  std::ostringstream log;
  auto rows = bench::run_bench(o, script, &log);
  int ok = 0, errors = 0;
  for (const auto& r : rows) {
    if (r.step == "CLEAN") continue;
    ok += r.verify == "ok";
    errors += r.errors;
  }
  bool clean_ok = !rows.empty() && rows.front().step == "CLEAN" && !rows.front().errors;
  std::ostringstream d;
  d << ok << "/" << script.steps.size() << " steps verified ok (50 modules, " << defs << " definitions, " << errors
    << " steps with deliberate errors)";
  return {clean_ok && ok == static_cast<int>(script.steps.size()), d.str()};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

Outcome relative_timing(const fs::path& csv_path) {
  testing::TempDir dir("accept-c8");
  testing::CorpusGen gen(100, 8, 8);
  gen.write(dir / "src");
  bench::EditScript script;
  script.steps.push_back(gen.single_body_edit());
  bench::BenchOptions o;
  o.main = gen.main_module();
  o.config = config_for(dir.path());
  o.store = dir / "store";
  o.repeat = 10;
  auto rows = bench::run_bench(o, script);

  std::vector<double> clean, inc;
  std::ofstream csv(csv_path);
  csv << bench::csv_header() << "\n";
  bool single = true;
  for (const auto& r : rows) {
    csv << bench::csv_row(r) << "\n";
    if (r.errors) return {false, "build errors in timing corpus"};
    if (r.step == "CLEAN") {
      clean.push_back(r.times.total_ms);
    } else {
      inc.push_back(r.times.total_ms);
      single = single && r.counts.sfe_exec == 1 && r.counts.be_exec == 1;
    }
  }
  if (clean.size() != 10 || inc.size() != 10) return {false, "expected 10 trials"};
  double mc = median(clean), mi = median(inc);
  std::ostringstream d;
  d.precision(1);
  d << std::fixed << "median incremental " << mi << " ms vs clean " << mc << " ms = " << 100 * mi / mc
    << "% (limit 25%); rows in " << csv_path.string();
  if (!single) d << "; step did not rebuild exactly one definition";
  return {single && mi <= 0.25 * mc, d.str()};
}

Outcome gtest_cases(const std::string& binary, const std::vector<std::string>& cases) {
  std::string filter;
  for (const auto& c : cases) filter += (filter.empty() ? "" : ":") + c;
  std::string cmd = "'" + binary + "' --gtest_filter='" + filter + "' 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return {false, "cannot start " + binary};
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  int status = ::pclose(pipe);
  bool exited_ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;

  int passed = 0;
  std::vector<std::string> missing;
  for (const auto& c : cases) {
    // Wildcard entries must match at least one passing case.
    std::string pattern = std::regex_replace(c, std::regex(R"([.])"), R"(\.)");
    pattern = std::regex_replace(pattern, std::regex(R"(\*)"), R"([A-Za-z0-9_/]*)");
    std::regex ok_line(R"(\[       OK \] )" + pattern + R"( \()");
    auto begin = std::sregex_iterator(out.begin(), out.end(), ok_line);
    int n = static_cast<int>(std::distance(begin, std::sregex_iterator()));
    if (n == 0) missing.push_back(c);
    passed += n;
  }
  std::ostringstream d;
  d << passed << " test cases passed";
  if (!missing.empty()) {
    d << "; not passing:";
    for (const auto& m : missing) d << " " << m;
  }
  if (!exited_ok) d << "; test binary reported failures";
  return {exited_ok && missing.empty() && passed > 0, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::string tests = argc > 1 ? argv[1] : STRATA_TESTS_BIN;
  fs::path csv = argc > 2 ? fs::path(argv[2]) : fs::current_path() / "acceptance_timing.csv";

  struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> check;
  };
  std::vector<Criterion> criteria = {
      {1, "incremental build equals clean build", incremental_equals_clean},
      {2, "minimal re-execution counts",
       [&] {
         return gtest_cases(tests, {"Minimality.BodyEditOfOneDefinition",
                                    "Minimality.WhitespaceEditCutsOffBeforeTheBackEnd"});
       }},
      {3, "two-definition merge golden file", [&] { return gtest_cases(tests, {"Merge.FigureFourGolden"}); }},
      {4, "static analysis table",
       [&] {
         return gtest_cases(tests, {"Ambiguity.NullaryCandidateWins", "Ambiguity.SingleCandidateOfAnyArity",
                                    "Ambiguity.TwoNonNullaryCandidatesIsAnError", "Overlays.SelfLoop",
                                    "Overlays.IndirectCycle", "ExtendOverride.ClauseA_NoLibraryDefinition",
                                    "ExtendOverride.ClauseB_TwoExtensions", "ExtendOverride.ClauseC_PlainRedefinition",
                                    "ExtendOverride.ClauseD_ExtendAndOverride"});
       }},
      {5, "cross-module visibility",
       [&] { return gtest_cases(tests, {"Visibility.TransitiveChain", "Visibility.ImportCycle"}); }},
      {6, "TFA behaviour",
       [&] {
         return gtest_cases(tests, {"Tfa.DesugarIfThen", "Tfa.DesugarForUsesOneFreshVariable", "Tfa.EvalArithmetic",
                                    "Tfa.DynamicRuleRoundTrip", "Tfa.DynamicRuleFailsAfterScopeExit"});
       }},
      {7, "build engine properties",
       [&] {
         return gtest_cases(tests, {"EnginePropertyTest.RandomDagsRebuildExactlyTheChangedTasks",
                                    "Engine.HiddenDependencyReadAfterGenerate",
                                    "Engine.HiddenDependencyReadBeforeGenerate", "Engine.OverlappingProviders",
                                    "Store.*"});
       }},
      {8, "relative incremental timing", [&] { return relative_timing(csv); }},
      {9, "stats ground truth",
       [&] { return gtest_cases(tests, {"Stats.GroundTruthCorpus", "Stats.RenderedReport", "CliStats.PrintedCounts"}); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << o.detail
              << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << "\n";
  return failed ? 1 : 0;
}
