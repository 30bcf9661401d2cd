#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "fs_util.hpp"
#include "strata/build_engine.hpp"

using namespace strata;
using namespace strata::build;
using strata::testing::read_text;
using strata::testing::TempDir;
using strata::testing::write_text;

namespace {

TaskKey key(const std::string& kind, Term input = Term::integer(0)) { return TaskKey{kind, std::move(input)}; }

std::set<std::string> executed(const ExecTrace& t) {
  std::set<std::string> out;
  for (const auto& e : t)
    if (e.outcome == Outcome::Executed) out.insert(e.text);
  return out;
}

int count_executed(const ExecTrace& t) { return static_cast<int>(executed(t).size()); }

void check_unique(const ExecTrace& t) {
  std::set<std::string> seen;
  for (const auto& e : t) EXPECT_TRUE(seen.insert(e.text).second) << "twice in trace: " << e.text;
}

// ---- Random DAG property suite ----

struct Item {
  bool task;
  int index;
};

struct Graph {
  int nodes = 0;
  int files = 0;
  std::vector<std::vector<Item>> deps;
  std::vector<bool> cutoff;
};

Graph random_graph(std::mt19937& rng) {
  Graph g;
  g.nodes = std::uniform_int_distribution<int>(1, 12)(rng);
  g.files = std::uniform_int_distribution<int>(1, 6)(rng);
  g.deps.resize(g.nodes);
  g.cutoff.resize(g.nodes);
  std::bernoulli_distribution edge(0.3), cut(0.25);
  std::vector<bool> has_parent(g.nodes, false);
  for (int i = 0; i < g.nodes; ++i) {
    g.cutoff[i] = cut(rng);
    for (int j = i + 1; j < g.nodes; ++j)
      if (edge(rng)) {
        g.deps[i].push_back({true, j});
        has_parent[j] = true;
      }
    for (int f = 0; f < g.files; ++f)
      if (edge(rng)) g.deps[i].push_back({false, f});
  }
  for (int j = 1; j < g.nodes; ++j)
    if (!has_parent[j]) g.deps[0].push_back({true, j});
  for (auto& d : g.deps) std::shuffle(d.begin(), d.end(), rng);
  return g;
}

using FileState = std::vector<std::optional<std::string>>;

std::string file_name(int f) { return "f" + std::to_string(f) + ".txt"; }

// Node value: either the concatenation of its inputs, or (cutoff nodes) the
// parity of their total length, so unchanged outputs stop propagation.
Term node_value(const Graph& g, int i, const std::vector<std::string>& inputs) {
  std::string cat;
  for (const auto& s : inputs) cat += "(" + s + ")";
  if (g.cutoff[i]) return Term::integer(static_cast<std::int64_t>(cat.size() % 2));
  return Term::string(cat);
}

Registry graph_registry(const Graph& g, const fs::path& dir) {
  Registry reg;
  reg.add("node", [&g, dir](Context& ctx, const Term& input) {
    int i = static_cast<int>(input.int_value());
    std::vector<std::string> inputs;
    for (const auto& item : g.deps[i]) {
      if (item.task) {
        inputs.push_back(print_term(ctx.require_task(key("node", Term::integer(item.index)))));
      } else {
        auto r = ctx.require_file(dir / file_name(item.index));
        inputs.push_back(r.bytes ? *r.bytes : "<absent>");
      }
    }
    return node_value(g, i, inputs);
  });
  return reg;
}

// Oracle: direct evaluation of every node from the file state.
std::vector<Term> oracle_values(const Graph& g, const FileState& files) {
  std::vector<std::optional<Term>> vals(g.nodes);
  for (int i = g.nodes - 1; i >= 0; --i) {
    std::vector<std::string> inputs;
    for (const auto& item : g.deps[i])
      inputs.push_back(item.task ? print_term(*vals[item.index])
                                 : (files[item.index] ? *files[item.index] : "<absent>"));
    vals[i] = node_value(g, i, inputs);
  }
  std::vector<Term> out;
  for (auto& v : vals) out.push_back(*v);
  return out;
}

// Oracle: mark nodes with a changed direct input (file bytes or callee value),
// sweeping from the leaves up.
std::set<std::string> oracle_executed(const Graph& g, const FileState& before, const FileState& after) {
  auto old_vals = oracle_values(g, before);
  auto new_vals = oracle_values(g, after);
  std::set<std::string> out;
  for (int i = 0; i < g.nodes; ++i) {
    bool changed = false;
    for (const auto& item : g.deps[i]) {
      if (item.task ? old_vals[item.index] != new_vals[item.index] : before[item.index] != after[item.index])
        changed = true;
    }
    if (changed) out.insert(key("node", Term::integer(i)).text());
  }
  return out;
}

void apply_files(const fs::path& dir, const FileState& files) {
  for (std::size_t f = 0; f < files.size(); ++f) {
    fs::path p = dir / file_name(static_cast<int>(f));
    if (files[f]) {
      write_text(p, *files[f]);
    } else {
      fs::remove(p);
    }
  }
}

std::string random_content(std::mt19937& rng) {
  std::uniform_int_distribution<int> len(0, 3), ch(0, 2);
  std::string s;
  for (int n = len(rng); n > 0; --n) s += static_cast<char>('a' + ch(rng));
  return s;
}

}  // namespace

TEST(EnginePropertyTest, RandomDagsRebuildExactlyTheChangedTasks) {
  std::mt19937 rng(20261016);
  int checked_nonempty = 0;
  for (int round = 0; round < 1000; ++round) {
    Graph g = random_graph(rng);
    TempDir dir("engine-prop");
    fs::path store_path = dir / "store";
    FileState files(g.files);
    for (auto& f : files)
      if (std::bernoulli_distribution(0.85)(rng)) f = random_content(rng);
    apply_files(dir.path(), files);
    Registry reg = graph_registry(g, dir.path());
    TaskKey root = key("node", Term::integer(0));

    Store store = Store::open(store_path);
    auto first = build::build(store, root, reg);
    ASSERT_EQ(count_executed(first.trace), g.nodes) << "round " << round;
    EXPECT_EQ(first.output, oracle_values(g, files)[0]);
    store.persist(store_path);
    Store reopened = Store::open(store_path);
    ASSERT_TRUE(reopened == store) << "store round trip, round " << round;

    FileState edited = files;
    for (auto& f : edited) {
      std::uniform_int_distribution<int> what(0, 9);
      switch (what(rng)) {
        case 0: case 1: f = random_content(rng); break;
        case 2: break;  // rewritten with identical bytes below
        case 3: f = std::nullopt; break;
        default: break;
      }
    }
    apply_files(dir.path(), edited);
    auto expect = oracle_executed(g, files, edited);
    auto second = build::build(reopened, root, reg);
    check_unique(second.trace);
    ASSERT_EQ(static_cast<int>(second.trace.size()), g.nodes) << "round " << round;
    ASSERT_EQ(executed(second.trace), expect) << "round " << round;
    EXPECT_EQ(second.output, oracle_values(g, edited)[0]);
    if (!expect.empty()) ++checked_nonempty;

    auto third = build::build(reopened, root, reg);
    ASSERT_EQ(count_executed(third.trace), 0) << "no-change rebuild, round " << round;
  }
  // The generator must actually exercise change propagation.
  EXPECT_GT(checked_nonempty, 300);
}

TEST(Engine, ChainRebuildsOnlyWhatChanged) {
  TempDir dir("engine");
  fs::path f = dir / "f";
  write_text(f, "abc");
  Registry reg;
  reg.add("B", [f](Context& ctx, const Term&) {
    return Term::integer(static_cast<std::int64_t>(ctx.require_file(f).bytes->size()));
  });
  reg.add("A", [](Context& ctx, const Term&) { return Term::appl("Len", {ctx.require_task(key("B"))}); });
  Store store;
  EXPECT_EQ(count_executed(build::build(store, key("A"), reg).trace), 2);

  // Same length: B re-executes, A is cut off.
  write_text(f, "xyz");
  auto r = build::build(store, key("A"), reg);
  EXPECT_EQ(executed(r.trace), std::set<std::string>{key("B").text()});

  write_text(f, "abcd");
  r = build::build(store, key("A"), reg);
  EXPECT_EQ(count_executed(r.trace), 2);
  EXPECT_EQ(r.output, parse_term("Len(4)"));

  // Identical bytes rewritten: content stamps see no change.
  write_text(f, "abcd");
  EXPECT_EQ(count_executed(build::build(store, key("A"), reg).trace), 0);
}

TEST(Engine, AbsentFileCreatedLater) {
  TempDir dir("engine");
  fs::path f = dir / "later";
  Registry reg;
  reg.add("T", [f](Context& ctx, const Term&) {
    auto r = ctx.require_file(f);
    EXPECT_EQ(r.bytes.has_value(), r.stamp != kAbsent);
    return Term::string(r.bytes.value_or("none"));
  });
  Store store;
  EXPECT_EQ(build::build(store, key("T"), reg).output, Term::string("none"));
  EXPECT_EQ(count_executed(build::build(store, key("T"), reg).trace), 0);
  write_text(f, "now");
  auto r = build::build(store, key("T"), reg);
  EXPECT_EQ(count_executed(r.trace), 1);
  EXPECT_EQ(r.output, Term::string("now"));
}

TEST(Engine, RequiringSameCalleeTwice) {
  int runs = 0;
  Registry reg;
  reg.add("C", [&runs](Context&, const Term&) {
    ++runs;
    return Term::integer(7);
  });
  reg.add("R", [](Context& ctx, const Term&) {
    Term a = ctx.require_task(key("C"));
    Term b = ctx.require_task(key("C"));
    EXPECT_EQ(a, b);
    return a;
  });
  Store store;
  build::build(store, key("R"), reg);
  EXPECT_EQ(runs, 1);
  EXPECT_EQ(store.find(key("R").text())->deps.size(), 2u);
  build::build(store, key("R"), reg);
  EXPECT_EQ(runs, 1);
}

TEST(Engine, ChangedInputIsANewTask) {
  Registry reg;
  reg.add("Sq", [](Context&, const Term& in) { return Term::integer(in.int_value() * in.int_value()); });
  reg.add("R", [](Context& ctx, const Term& in) { return ctx.require_task(key("Sq", in)); });
  Store store;
  EXPECT_EQ(build::build(store, key("R", Term::integer(3)), reg).output, Term::integer(9));
  auto r = build::build(store, key("R", Term::integer(4)), reg);
  EXPECT_EQ(count_executed(r.trace), 2);
  EXPECT_EQ(r.output, Term::integer(16));
}

TEST(Engine, HiddenDependencyReadAfterGenerate) {
  TempDir dir("engine");
  fs::path out = dir / "gen.txt";
  Registry reg;
  reg.add("Gen", [out](Context& ctx, const Term&) {
    ctx.provide_file(out, "generated");
    return Term::integer(0);
  });
  reg.add("Reader", [out](Context& ctx, const Term&) { return Term::string(*ctx.require_file(out).bytes); });
  reg.add("Root", [](Context& ctx, const Term&) {
    ctx.require_task(key("Gen"));
    return ctx.require_task(key("Reader"));
  });
  Store store;
  EXPECT_THROW(build::build(store, key("Root"), reg), HiddenDependency);
}

TEST(Engine, HiddenDependencyReadBeforeGenerate) {
  TempDir dir("engine");
  fs::path out = dir / "gen.txt";
  Registry reg;
  reg.add("Gen", [out](Context& ctx, const Term&) {
    ctx.provide_file(out, "generated");
    return Term::integer(0);
  });
  reg.add("Reader", [out](Context& ctx, const Term&) {
    return Term::string(ctx.require_file(out).bytes.value_or(""));
  });
  reg.add("Root", [](Context& ctx, const Term&) {
    ctx.require_task(key("Reader"));
    return ctx.require_task(key("Gen"));
  });
  Store store;
  EXPECT_THROW(build::build(store, key("Root"), reg), HiddenDependency);
}

TEST(Engine, ReadingThroughTheGeneratorIsFine) {
  TempDir dir("engine");
  fs::path out = dir / "gen.txt";
  Registry reg;
  reg.add("Gen", [out](Context& ctx, const Term&) {
    ctx.provide_file(out, "generated");
    return Term::integer(0);
  });
  reg.add("Reader", [out](Context& ctx, const Term&) {
    ctx.require_task(key("Gen"));
    return Term::string(*ctx.require_file(out).bytes);
  });
  Store store;
  EXPECT_EQ(build::build(store, key("Reader"), reg).output, Term::string("generated"));
  EXPECT_EQ(count_executed(build::build(store, key("Reader"), reg).trace), 0);
}

TEST(Engine, OverlappingProviders) {
  TempDir dir("engine");
  fs::path out = dir / "same.txt";
  Registry reg;
  reg.add("P", [out](Context& ctx, const Term& in) {
    ctx.provide_file(out, print_term(in));
    return in;
  });
  reg.add("Root", [](Context& ctx, const Term&) {
    ctx.require_task(key("P", Term::integer(1)));
    return ctx.require_task(key("P", Term::integer(2)));
  });
  Store store;
  EXPECT_THROW(build::build(store, key("Root"), reg), OverlappingProvider);
}

TEST(Engine, ProvidedFileEditedExternally) {
  TempDir dir("engine");
  fs::path out = dir / "unit.txt";
  int runs = 0;
  Registry reg;
  reg.add("P", [out, &runs](Context& ctx, const Term&) {
    ++runs;
    ctx.provide_file(out, "payload");
    return Term::integer(0);
  });
  Store store;
  build::build(store, key("P"), reg);
  EXPECT_EQ(read_text(out), "payload");
  build::build(store, key("P"), reg);
  EXPECT_EQ(runs, 1);
  write_text(out, "tampered");
  build::build(store, key("P"), reg);
  EXPECT_EQ(runs, 2);
  EXPECT_EQ(read_text(out), "payload");
}

TEST(Engine, CycleIsAnError) {
  Registry reg;
  reg.add("A", [](Context& ctx, const Term&) { return ctx.require_task(key("B")); });
  reg.add("B", [](Context& ctx, const Term&) { return ctx.require_task(key("A")); });
  Store store;
  try {
    build::build(store, key("A"), reg);
    FAIL();
  } catch (const CycleError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find(key("A").text()), std::string::npos);
    EXPECT_NE(msg.find(key("B").text()), std::string::npos);
  }
}

TEST(Engine, FailingTaskLeavesRecordUnchanged) {
  bool fail = false;
  Registry reg;
  reg.add("T", [&fail](Context&, const Term& in) {
    if (fail) throw std::runtime_error("boom");
    return in;
  });
  reg.add("Root", [](Context& ctx, const Term& in) { return ctx.require_task(key("T", in)); });
  Store store;
  build::build(store, key("Root", Term::integer(1)), reg);
  Store before = store;
  fail = true;
  EXPECT_THROW(build::build(store, key("Root", Term::integer(2)), reg), std::runtime_error);
  EXPECT_TRUE(store.find(key("T", Term::integer(1)).text()) != nullptr);
  EXPECT_TRUE(store.find(key("T", Term::integer(2)).text()) == nullptr);
  EXPECT_TRUE(store == before);
}

TEST(Engine, GarbageCollectionRemovesStaleOutputs) {
  TempDir dir("engine");
  Registry reg;
  reg.add("Emit", [&dir](Context& ctx, const Term& in) {
    ctx.provide_file(dir / (in.name() + ".out"), in.name());
    return in;
  });
  reg.add("Root", [](Context& ctx, const Term& in) {
    for (const auto& n : in.children()) ctx.require_task(key("Emit", n));
    return Term::integer(0);
  });
  Store store;
  {
    Session s(store, reg);
    s.require(key("Root", parse_term(R"(["a","b"])")));
    EXPECT_TRUE(s.collect_garbage().empty());
  }
  Session s(store, reg);
  s.require(key("Root", parse_term(R"(["a"])")));
  auto deleted = s.collect_garbage();
  ASSERT_EQ(deleted.size(), 1u);
  EXPECT_FALSE(fs::exists(dir / "b.out"));
  EXPECT_TRUE(fs::exists(dir / "a.out"));
  EXPECT_EQ(store.size(), 2u);
}

TEST(Store, MissingFileIsEmpty) {
  TempDir dir("store");
  EXPECT_EQ(Store::open(dir / "none").size(), 0u);
}

TEST(Store, TruncatedFileIsCorrupt) {
  TempDir dir("store");
  Registry reg;
  reg.add("T", [](Context&, const Term&) { return Term::string("value"); });
  Store store;
  build::build(store, key("T"), reg);
  store.persist(dir / "s");
  std::string text = read_text(dir / "s");
  write_text(dir / "s", text.substr(0, text.size() / 2));
  EXPECT_THROW(Store::open(dir / "s"), StoreCorrupt);
}

TEST(Store, OtherVersionStartsEmpty) {
  TempDir dir("store");
  write_text(dir / "s", "strata-store 99 sha256\nE\n");
  EXPECT_EQ(Store::open(dir / "s").size(), 0u);
}

TEST(Store, LockIsExclusive) {
  TempDir dir("store");
  StoreLock first(dir / "s");
  EXPECT_THROW(StoreLock second(dir / "s"), StoreLocked);
}

TEST(Store, TimingIsAttributedPerKind) {
  Registry reg;
  reg.add("Inner", [](Context&, const Term&) { return Term::integer(1); });
  reg.add("Outer", [](Context& ctx, const Term&) { return ctx.require_task(key("Inner")); });
  Store store;
  Session s(store, reg);
  s.require(key("Outer"));
  auto ms = s.kind_millis();
  EXPECT_TRUE(ms.count("Inner"));
  EXPECT_TRUE(ms.count("Outer"));
}
