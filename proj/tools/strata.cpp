// strata: compile, run, bench, stats and clean for Strata programs.
//
// Exit codes: 0 success, 1 compile errors / strategy failure / failed bench,
// 2 usage, 3 internal, store or runtime errors.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "strata/bench.hpp"
#include "strata/pipeline.hpp"
#include "strata/runtime.hpp"

namespace fs = std::filesystem;
using namespace strata;

namespace {

constexpr int kOk = 0, kFailed = 1, kUsage = 2, kInternal = 3;

struct CompileFlags {
  std::string main, src, out, store, std_root;
  std::vector<std::string> libs;
};

void add_compile_flags(CLI::App* cmd, CompileFlags& f, bool need_out = true) {
  cmd->add_option("--main", f.main, "Main module")->required();
  cmd->add_option("--src", f.src, "Source root")->required();
  cmd->add_option("--lib", f.libs, "Library directory (repeatable)");
  auto* out = cmd->add_option("--out", f.out, "Output directory");
  if (need_out) out->required();
  cmd->add_option("--store", f.store, "Build store file (default <out>/.store)");
  cmd->add_option("--std", f.std_root, "Directory holding lib/std.str");
}

pipeline::Config make_config(const CompileFlags& f) {
  pipeline::Config c;
  c.src = fs::absolute(f.src).lexically_normal();
  for (const auto& l : f.libs) c.libs.push_back(fs::absolute(l).lexically_normal());
  if (!f.out.empty()) c.out = fs::absolute(f.out).lexically_normal();
  c.std_root = f.std_root.empty() ? pipeline::default_std_root() : fs::absolute(f.std_root).lexically_normal();
  return c;
}

fs::path store_path(const CompileFlags& f, const pipeline::Config& c) {
  return f.store.empty() ? c.out / ".store" : fs::absolute(f.store);
}

void print_report(const pipeline::Report& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& e : r.errors) std::cerr << render(e) << "\n";
}

int cmd_compile(const CompileFlags& f, bool clean, const std::string& trace_file) {
  pipeline::CompileOptions o;
  o.main = f.main;
  o.config = make_config(f);
  o.store = store_path(f, o.config);
  o.clean = clean;
  auto res = pipeline::compile(o);
  print_report(res.report);
  if (!trace_file.empty()) {
    std::ofstream tf(trace_file);
    for (const auto& e : res.trace)
      tf << (e.outcome == build::Outcome::Executed ? "Executed " : "Cached ") << pipeline::describe(e.key()) << "\n";
    if (!tf) throw std::runtime_error("cannot write trace file " + trace_file);
  }
  if (!res.report.errors.empty()) return kFailed;
  auto c = pipeline::count_tasks(res.trace);
  std::cout << "compiled " << f.main << ": " << res.report.units << " units; front " << c.fe_exec << "/"
            << c.fe_exec + c.fe_cached << ", sub " << c.sfe_exec << "/" << c.sfe_exec + c.sfe_cached << ", back "
            << c.be_exec << "/" << c.be_exec + c.be_cached << " executed\n";
  return kOk;
}

int cmd_run(const std::string& program, const std::string& strategy, const std::string& input,
            const std::vector<std::string>& libs, std::size_t max_depth) {
  std::vector<fs::path> lib_paths(libs.begin(), libs.end());
  std::ifstream in(input, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read input " << input << "\n";
    return kUsage;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  std::optional<Term> subject;
  try {
    subject = parse_term(ss.str());
  } catch (const ParseError& e) {
    std::cerr << "error: input term: " << e.what() << "\n";
    return kUsage;
  }
  runtime::Program p;
  try {
    p = runtime::load_program(program, lib_paths);
  } catch (const runtime::LoadError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  syntax::StrategyKey key{strategy, 0, 0};
  if (!p.units.count(key)) {
    std::cerr << "error: program has no strategy " << key.text() << "\n";
    return kUsage;
  }
  runtime::Options opts;
  opts.max_depth = max_depth;
  opts.debug = &std::cerr;
  runtime::Interpreter interp(p, opts);
  try {
    auto r = interp.apply(key, *subject);
    if (!r) {
      std::cout << "failure\n";
      return kFailed;
    }
    std::cout << print_term(*r) << "\n";
    return kOk;
  } catch (const runtime::RuntimeError& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kInternal;
  }
}

int cmd_bench(const CompileFlags& f, const std::string& script_dir, const std::string& csv, int repeat, int warmup,
              bool verify) {
  bench::BenchOptions o;
  o.main = f.main;
  o.config = make_config(f);
  o.store = store_path(f, o.config);
  o.repeat = repeat;
  o.warmup = warmup;
  o.verify = verify;
  bench::EditScript script;
  try {
    script = bench::load_script(script_dir);
  } catch (const bench::ScriptError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  auto rows = bench::run_bench(o, script, &std::cerr);
  std::ostringstream text;
  text << bench::csv_header() << "\n";
  bool bad = false;
  for (const auto& r : rows) {
    text << bench::csv_row(r) << "\n";
    bad = bad || r.errors || r.verify == "fail";
  }
  if (csv.empty()) {
    std::cout << text.str();
  } else {
    std::ofstream out(csv);
    out << text.str();
    if (!out) throw std::runtime_error("cannot write " + csv);
  }
  return bad ? kFailed : kOk;
}

int cmd_stats(const CompileFlags& f) {
  auto collected = pipeline::collect(f.main, make_config(f));
  if (!collected.errors.empty()) {
    for (const auto& e : collected.errors) std::cerr << render(e) << "\n";
    return kFailed;
  }
  std::cout << pipeline::render_stats(pipeline::compute_stats(collected));
  return kOk;
}

int cmd_clean(const std::string& out_dir, const std::string& store) {
  fs::path out = fs::absolute(out_dir);
  fs::path s = store.empty() ? out / ".store" : fs::absolute(store);
  pipeline::remove_outputs(out);
  fs::remove(s);
  fs::remove(s.string() + ".lock");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental compiler and interpreter for Strata rewriting programs"};
  app.require_subcommand(1);

  CompileFlags cf;
  bool clean = false;
  std::string trace_file;
  auto* compile = app.add_subcommand("compile", "Compile a program incrementally");
  add_compile_flags(compile, cf);
  compile->add_flag("--clean", clean, "Discard the store and previous outputs first");
  compile->add_option("--trace", trace_file, "Write the execution trace to this file");

  std::string program, strategy, input;
  std::vector<std::string> run_libs;
  std::size_t max_depth = 100000;
  auto* run = app.add_subcommand("run", "Apply a compiled strategy to a term");
  run->add_option("--program", program, "Compiled output directory")->required();
  run->add_option("--strategy", strategy, "Strategy name (arity 0-0)")->required();
  run->add_option("--input", input, "File holding the subject term")->required();
  run->add_option("--lib", run_libs, "Library directory (repeatable)");
  run->add_option("--max-depth", max_depth, "Nested call limit");

  CompileFlags bf;
  std::string script, csv;
  int repeat = 1, warmup = 0;
  bool verify = false;
  auto* benchc = app.add_subcommand("bench", "Replay an edit script and time each step");
  add_compile_flags(benchc, bf);
  benchc->add_option("--script", script, "Edit script directory")->required();
  benchc->add_option("--csv", csv, "Write rows here instead of stdout");
  benchc->add_option("--repeat", repeat, "Passes over the script")->check(CLI::PositiveNumber);
  benchc->add_option("--warmup", warmup, "Leading steps applied without a row")->check(CLI::NonNegativeNumber);
  benchc->add_flag("--verify", verify, "Compare every step with a clean build");

  CompileFlags sf;
  auto* stats = app.add_subcommand("stats", "Print code metrics of a program");
  add_compile_flags(stats, sf, false);

  std::string clean_out, clean_store;
  auto* cleanc = app.add_subcommand("clean", "Remove outputs and the build store");
  cleanc->add_option("--out", clean_out, "Output directory")->required();
  cleanc->add_option("--store", clean_store, "Build store file (default <out>/.store)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return kUsage;
  }

  try {
    if (*compile) return cmd_compile(cf, clean, trace_file);
    if (*run) return cmd_run(program, strategy, input, run_libs, max_depth);
    if (*benchc) return cmd_bench(bf, script, csv, repeat, warmup, verify);
    if (*stats) return cmd_stats(sf);
    if (*cleanc) return cmd_clean(clean_out, clean_store);
  } catch (const build::StoreLocked& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
