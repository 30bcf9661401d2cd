#include "strata/bench.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "strata/backend.hpp"

namespace strata::bench {

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ScriptError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw ScriptError("cannot write " + p.string());
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) {
    while (!l.empty() && (l.back() == '\r' || l.back() == ' ' || l.back() == '\t')) l.pop_back();
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

bool safe_relative(const fs::path& p) {
  if (p.empty() || p.is_absolute()) return false;
  for (const auto& part : p)
    if (part == "..") return false;
  return true;
}

/// Scratch directory removed on scope exit.
struct Scratch {
  fs::path path;
  explicit Scratch(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("strata-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void copy_tree(const fs::path& from, const fs::path& to) {
  fs::remove_all(to);
  fs::create_directories(to);
  fs::copy(from, to, fs::copy_options::recursive);
}

bool is_output(const fs::path& p) {
  return p.extension() == ".unit" || p.filename() == backend::kManifestFile;
}

std::string fmt_ms(double ms) { return std::to_string(static_cast<long long>(ms + 0.5)); }

}  // namespace

EditScript load_script(const fs::path& dir) {
  if (!fs::is_regular_file(dir / "steps.list")) throw ScriptError("no steps.list in " + dir.string());
  EditScript script;
  for (const auto& name : lines(slurp(dir / "steps.list"))) {
    fs::path sd = dir / name;
    if (!safe_relative(name) || !fs::is_directory(sd)) throw ScriptError("step directory missing: " + name);
    EditStep step;
    step.name = name;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(sd))
      if (e.is_regular_file() && e.path() != sd / "deleted.list") files.push_back(fs::relative(e.path(), sd));
    std::sort(files.begin(), files.end());
    for (const auto& f : files) step.files.emplace_back(f, slurp(sd / f));
    if (fs::exists(sd / "deleted.list"))
      for (const auto& d : lines(slurp(sd / "deleted.list"))) {
        if (!safe_relative(d)) throw ScriptError("bad path in " + name + "/deleted.list: " + d);
        step.deleted.emplace_back(d);
      }
    script.steps.push_back(std::move(step));
  }
  return script;
}

void write_script(const fs::path& dir, const EditScript& script) {
  fs::create_directories(dir);
  std::string list;
  for (const auto& s : script.steps) {
    list += s.name + "\n";
    fs::path sd = dir / s.name;
    fs::create_directories(sd);
    for (const auto& [rel, text] : s.files) spit(sd / rel, text);
    if (!s.deleted.empty()) {
      std::string del;
      for (const auto& d : s.deleted) del += d.generic_string() + "\n";
      spit(sd / "deleted.list", del);
    }
  }
  spit(dir / "steps.list", list);
}

void apply_step(const fs::path& src_root, const EditStep& step) {
  for (const auto& d : step.deleted) fs::remove(src_root / d);
  for (const auto& [rel, text] : step.files) spit(src_root / rel, text);
}

std::vector<std::string> compare_outputs(const fs::path& a, const fs::path& b) {
  std::map<std::string, std::string> fa, fb;
  auto scan = [](const fs::path& dir, std::map<std::string, std::string>& into) {
    if (!fs::is_directory(dir)) return;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && is_output(e.path())) into[e.path().filename().string()] = slurp(e.path());
  };
  scan(a, fa);
  scan(b, fb);
  std::vector<std::string> diff;
  for (const auto& [n, bytes] : fa) {
    auto it = fb.find(n);
    if (it == fb.end()) diff.push_back(n + " (only incremental)");
    else if (it->second != bytes) diff.push_back(n + " (content differs)");
  }
  for (const auto& [n, _] : fb)
    if (!fa.count(n)) diff.push_back(n + " (only clean)");
  return diff;
}

std::string csv_header() {
  return "step,files_changed,fe_exec,fe_cached,sfe_exec,sfe_cached,be_exec,be_cached,fe_ms,static_ms,be_ms,orch_ms,"
         "total_ms,verify";
}

std::string csv_row(const BenchRow& r) {
  const auto& c = r.counts;
  const auto& t = r.times;
  std::string out = r.step + "," + std::to_string(r.files_changed);
  for (int v : {c.fe_exec, c.fe_cached, c.sfe_exec, c.sfe_cached, c.be_exec, c.be_cached}) out += "," + std::to_string(v);
  for (double v : {t.fe_ms, t.static_ms, t.be_ms, t.orch_ms, t.total_ms}) out += "," + fmt_ms(v);
  return out + "," + r.verify;
}

std::vector<BenchRow> run_bench(const BenchOptions& opts, const EditScript& script, std::ostream* log) {
  if (opts.warmup < 0 || opts.warmup > static_cast<int>(script.steps.size()))
    throw ScriptError("--warmup exceeds the number of steps");
  Scratch work("bench");
  const fs::path src = work.path / "src";

  pipeline::CompileOptions co;
  co.main = opts.main;
  co.config = opts.config;
  co.config.src = src;
  co.store = opts.store;

  auto verify = [&](BenchRow& row, const pipeline::CompileResult& inc) {
    Scratch clean("verify");
    pipeline::CompileOptions vo = co;
    vo.config.out = clean.path / "out";
    vo.store = clean.path / "store";
    vo.clean = true;
    auto ref = pipeline::compile(vo);
    if (inc.report.errors != ref.report.errors) {
      row.mismatches.push_back("error reports differ");
    } else if (inc.report.errors.empty()) {
      row.mismatches = compare_outputs(co.config.out, vo.config.out);
    }
    row.verify = row.mismatches.empty() ? "ok" : "fail";
    if (log)
      for (const auto& m : row.mismatches) *log << "verify " << row.step << ": " << m << "\n";
  };

  auto record = [&](const std::string& step, int changed, const pipeline::CompileResult& res) {
    BenchRow row;
    row.step = step;
    row.files_changed = changed;
    row.counts = pipeline::count_tasks(res.trace);
    row.times = res.times;
    row.errors = !res.report.errors.empty();
    if (log && row.errors)
      for (const auto& e : res.report.errors) *log << step << ": " << render(e) << "\n";
    return row;
  };

  std::vector<BenchRow> rows;
  for (int pass = 0; pass < std::max(1, opts.repeat); ++pass) {
    copy_tree(opts.config.src, src);
    co.clean = true;
    rows.push_back(record("CLEAN", 0, pipeline::compile(co)));
    co.clean = false;
    for (std::size_t i = 0; i < script.steps.size(); ++i) {
      const auto& step = script.steps[i];
      apply_step(src, step);
      auto res = pipeline::compile(co);
      if (static_cast<int>(i) < opts.warmup) continue;
      BenchRow row = record(step.name, static_cast<int>(step.files.size() + step.deleted.size()), res);
      if (opts.verify) verify(row, res);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace strata::bench
