#include "strata/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <deque>

#include "strata/backend.hpp"

#ifndef STRATA_STDLIB_DIR
#define STRATA_STDLIB_DIR "stdlib"
#endif

namespace strata::pipeline {

using namespace syntax;
using build::Context;
using build::TaskKey;

namespace {

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Term paths_to_term(const std::vector<fs::path>& ps) {
  std::vector<Term> out;
  for (const auto& p : ps) out.push_back(Term::string(p.string()));
  return Term::list(std::move(out));
}

FrontInfo error_fragment(StaticError e) {
  FrontInfo fi;
  fi.errors.push_back(std::move(e));
  return fi;
}

// ---- subFrontEnd ----

Term sub_front_end(Context&, const Term& in) {
  expect_appl(in, "Sub", 5);
  const ModuleId mod = expect_str(in[0]);
  const DefKind kind = def_kind_from_name(expect_str(in[1]));
  const std::string name = expect_str(in[2]);
  const int index = static_cast<int>(expect_int(in[3]));
  const std::string where = name + " #" + std::to_string(index);

  FrontInfo fi;
  Def def;
  try {
    def = parse_definition(expect_str(in[4]), kind, &fi.warnings);
  } catch (const ParseError& e) {
    return to_term(error_fragment({"ParseError", name, mod, where + ": " + e.what()}));
  }
  if (const auto* sig = std::get_if<SigDef>(&def)) {
    fi.def_cons.insert(sig->constructors.begin(), sig->constructors.end());
    return to_term(fi);
  }
  FreshNames fresh;
  std::variant<CoreDef, OverlayDef> core;
  try {
    core = desugar_to_core(def, fresh);
  } catch (const DesugarError& e) {
    return to_term(error_fragment({"DesugarError", name, mod, where + ": " + e.what()}));
  }
  if (const auto* o = std::get_if<OverlayDef>(&core)) {
    fi.olay_asts[o->key()].push_back(*o);
    UsageInfo u;
    collect_pattern_usage(o->body, u);
    fi.used_cons = u.used_cons;
    return to_term(fi);
  }
  const auto& cd = std::get<CoreDef>(core);
  UsageInfo u = collect_usage(cd.body, std::set<std::string>(cd.sparams.begin(), cd.sparams.end()));
  fi.def_strs.insert(cd.key);
  fi.str_asts[cd.key].push_back(StrDef{index, cd});
  fi.used_strs = u.used_strs;
  fi.used_cons = u.used_cons;
  if (!u.used_cons.empty()) fi.str_used_cons[cd.key] = u.used_cons;
  fi.dyn_rules = u.uses_dr;
  if (!u.amb_sites.empty()) fi.amb_sites[cd.key] = u.amb_sites;
  return to_term(fi);
}

// ---- frontEnd ----

Term front_end(Context& ctx, const Term& in) {
  expect_appl(in, "Front", 3);
  const ModuleId mod = expect_str(in[0]);
  const fs::path rel = mod + ".str";
  auto file = ctx.require_file(fs::path(expect_str(in[1])) / rel);
  if (!file.bytes) file = ctx.require_file(fs::path(expect_str(in[2])) / rel);
  if (!file.bytes) return Term::appl("Missing");

  ModuleAST ast;
  try {
    ast = parse_module(*file.bytes, mod);
  } catch (const ParseError& e) {
    return to_term(error_fragment({"ParseError", mod, mod, e.what()}));
  }
  SplitModule split = split_module(ast);
  FrontInfo fi;
  fi.imps.insert(split.imports.begin(), split.imports.end());
  fi.warnings = ast.warnings;
  for (const auto& u : split.units) {
    Term frag = ctx.require_task({kSubFrontEnd, Term::appl("Sub", {Term::string(mod),
                                                                   Term::string(std::string(def_kind_name(u.kind))),
                                                                   Term::string(u.name), Term::integer(u.index),
                                                                   Term::string(u.text)})});
    merge_fragment(fi, front_info_from_term(frag));
  }
  return to_term(fi);
}

// ---- frontEndLib ----

Term front_end_lib(Context& ctx, const Term& in) {
  expect_appl(in, "LibDir", 1);
  const fs::path dir = expect_str(in[0]);
  auto file = ctx.require_file(dir / "lib.manifest");
  if (!file.bytes) return Term::appl("LibError", {Term::string("no lib.manifest in " + dir.string())});
  try {
    return to_term(parse_lib_manifest(*file.bytes, dir.string()));
  } catch (const std::exception& e) {
    return Term::appl("LibError", {Term::string(std::string("malformed lib.manifest: ") + e.what())});
  }
}

// ---- back ends ----

Term unit_output(Context& ctx, const fs::path& out, const StrategyKey& key, const Strategy& body) {
  std::string file = backend::unit_file_name(key);
  ctx.provide_file(out / file, backend::unit_text(key, body));
  return Term::string(file);
}

Term back_end(Context& ctx, const Term& in) {
  expect_appl(in, "Back", 2);
  auto be = backend::back_end_input_from_term(in[1]);
  return unit_output(ctx, expect_str(in[0]), be.key, backend::compile_strategy(be));
}

Term back_end_cong(Context& ctx, const Term& in) {
  expect_appl(in, "Cong", 2);
  auto c = constructor_key_from_term(in[1]);
  return unit_output(ctx, expect_str(in[0]), StrategyKey{c.name, c.arity, 0}, backend::gen_congruence(c));
}

Term back_end_dr(Context& ctx, const Term& in) {
  expect_appl(in, "DynRule", 2);
  const std::string name = expect_str(in[1]);
  return unit_output(ctx, expect_str(in[0]), StrategyKey{name, 0, 0}, backend::gen_dynrule_support(name));
}

// ---- worklist shared by main and stats ----

struct Gathered {
  StaticInfo si;
  std::vector<StaticError> errors;
  std::vector<ModuleId> order;
};

std::string importer_chain(const ModuleId& m, const std::map<ModuleId, ModuleId>& parent) {
  std::vector<ModuleId> chain{m};
  for (auto it = parent.find(m); it != parent.end(); it = parent.find(it->second)) chain.push_back(it->second);
  std::string out;
  for (auto i = chain.rbegin(); i != chain.rend(); ++i) out += (out.empty() ? "" : " -> ") + *i;
  return out;
}

Gathered gather(Context& ctx, const ModuleId& main, const Config& cfg) {
  Gathered g;
  std::deque<ModuleId> work{main};
  std::set<ModuleId> seen{main};
  std::map<ModuleId, ModuleId> parent;
  const std::set<ModuleId> default_imps{kStdModule};
  while (!work.empty()) {
    ModuleId mod = work.front();
    work.pop_front();
    g.order.push_back(mod);
    const ModuleId& importer = parent.count(mod) ? parent[mod] : mod;

    std::optional<fs::path> lib_dir;
    for (const auto& l : cfg.libs) {
      fs::path dir = l / mod;
      if (ctx.require_file(dir / "lib.manifest").bytes) {
        lib_dir = dir;
        break;
      }
    }
    if (lib_dir) {
      Term li = ctx.require_task({kFrontEndLib, Term::appl("LibDir", {Term::string(lib_dir->string())})});
      if (li.is_appl("LibError", 1))
        g.errors.push_back({"LibraryError", mod, importer, expect_str(li[0])});
      else
        combine_info_lib(g.si, mod, lib_info_from_term(li));
      continue;
    }

    Term fi_term = ctx.require_task({kFrontEnd, Term::appl("Front", {Term::string(mod), Term::string(cfg.src.string()),
                                                                     Term::string(cfg.std_root.string())})});
    if (fi_term.is_appl("Missing", 0)) {
      g.errors.push_back({"ModuleNotFound", mod, importer, "imported via " + importer_chain(mod, parent)});
      continue;
    }
    FrontInfo fi = front_info_from_term(fi_term);
    g.errors.insert(g.errors.end(), fi.errors.begin(), fi.errors.end());
    combine_info(g.si, mod, fi, default_imps);
    for (const auto& i : g.si.imps[mod]) {
      if (seen.insert(i).second) {
        parent[i] = mod;
        work.push_back(i);
      }
    }
  }
  return g;
}

std::vector<OverlayDef> overlay_closure(const StaticInfo& si, const std::set<ConstructorKey>& used) {
  std::vector<OverlayDef> out;
  std::set<ConstructorKey> done;
  std::vector<ConstructorKey> todo(used.begin(), used.end());
  while (!todo.empty()) {
    ConstructorKey c = todo.back();
    todo.pop_back();
    auto it = si.olay_asts.find(c);
    if (it == si.olay_asts.end() || it->second.empty() || !done.insert(c).second) continue;
    // Duplicates are a static error, so the first one is the only one here.
    const OverlayDef& o = it->second.front().second;
    out.push_back(o);
    for (const auto& n : analysis::pattern_constructors(o.body)) todo.push_back(n);
  }
  std::sort(out.begin(), out.end(), [](const OverlayDef& a, const OverlayDef& b) { return a.key() < b.key(); });
  return out;
}

Term main_task(Context& ctx, const Term& in, Telemetry* telemetry) {
  expect_appl(in, "Main", 2);
  const ModuleId main = expect_str(in[0]);
  const Config cfg = config_from_term(in[1]);

  Gathered g = gather(ctx, main, cfg);
  Report rep;
  rep.warnings = g.si.warnings;
  if (!g.errors.empty()) {
    sort_errors(g.errors);
    rep.errors = std::move(g.errors);
    return to_term(rep);
  }

  auto t0 = Clock::now();
  analysis::AnalysisResult r = analysis::static_checks(main, g.si);
  if (telemetry) telemetry->static_ms += millis_since(t0);
  if (!r.errors.empty()) {
    rep.errors = std::move(r.errors);
    return to_term(rep);
  }

  const Term out = Term::string(cfg.out.string());
  backend::Manifest manifest;
  std::set<StrategyKey> keys;
  for (const auto& [m, ks] : g.si.def_strs)
    if (!g.si.lib_modules.count(m)) keys.insert(ks.begin(), ks.end());

  for (const auto& key : keys) {
    backend::BackEndInput be;
    be.key = key;
    const std::vector<ModDef>& defs = g.si.str_asts.at(key);
    for (const auto& d : defs) {
      backend::BackEndDef bd{d.module, d.index, d.def, {}};
      if (auto it = g.si.amb_sites.find({d.module, key}); it != g.si.amb_sites.end())
        for (const auto& name : it->second) bd.resolutions[name] = r.resolutions.at({d.module, key, name});
      be.defs.push_back(std::move(bd));
    }
    std::set<ConstructorKey> used;
    if (auto it = g.si.str_used_cons.find(key); it != g.si.str_used_cons.end()) used = it->second;
    be.overlays = overlay_closure(g.si, used);
    Term file = ctx.require_task({kBackEnd, Term::appl("Back", {out, backend::to_term(be)})});
    manifest.units[key] = expect_str(file);

    bool extends = std::any_of(defs.begin(), defs.end(), [](const ModDef& d) { return d.def.modifier == Modifier::Extend; });
    if (extends)
      manifest.externals.push_back({StrategyKey{key.name + std::string(kOriginalSuffix), key.sarity, key.tarity},
                                    g.si.external_dirs.at(key)});
  }
  for (const auto& c : r.congruences) {
    Term file = ctx.require_task({kBackEndCong, Term::appl("Cong", {out, syntax::to_term(c)})});
    manifest.units[StrategyKey{c.name, c.arity, 0}] = expect_str(file);
  }
  for (const auto& n : g.si.dyn_rules) {
    Term file = ctx.require_task({kBackEndDR, Term::appl("DynRule", {out, Term::string(n)})});
    manifest.units[StrategyKey{n, 0, 0}] = expect_str(file);
  }
  for (const auto& [m, cs] : g.si.def_cons) manifest.constructors.insert(cs.begin(), cs.end());
  manifest.dyn_rules = g.si.dyn_rules;
  for (const auto& [k, dir] : g.si.external_dirs)
    if (!manifest.units.count(k)) manifest.externals.push_back({k, dir});
  ctx.provide_file(cfg.out / std::string(backend::kManifestFile), backend::manifest_text(manifest));
  rep.units = static_cast<int>(manifest.units.size());
  return to_term(rep);
}

bool is_front_kind(const std::string& k) { return k == kFrontEnd || k == kFrontEndLib; }
bool is_back_kind(const std::string& k) { return k == kBackEnd || k == kBackEndCong || k == kBackEndDR; }

}  // namespace

Term to_term(const Config& c) {
  return Term::appl("Config", {Term::string(c.src.string()), paths_to_term(c.libs), Term::string(c.out.string()),
                               Term::string(c.std_root.string())});
}

Config config_from_term(const Term& t) {
  expect_appl(t, "Config", 4);
  Config c;
  c.src = expect_str(t[0]);
  for (const auto& l : expect_list(t[1])) c.libs.push_back(expect_str(l));
  c.out = expect_str(t[2]);
  c.std_root = expect_str(t[3]);
  return c;
}

fs::path default_std_root() { return STRATA_STDLIB_DIR; }

build::Registry make_registry(Telemetry* telemetry) {
  build::Registry reg;
  reg.add(kFrontEnd, front_end);
  reg.add(kSubFrontEnd, sub_front_end);
  reg.add(kFrontEndLib, front_end_lib);
  reg.add(kMain, [telemetry](Context& ctx, const Term& in) { return main_task(ctx, in, telemetry); });
  reg.add(kBackEnd, back_end);
  reg.add(kBackEndCong, back_end_cong);
  reg.add(kBackEndDR, back_end_dr);
  return reg;
}

TaskKey main_key(const ModuleId& main, const Config& cfg) {
  return {kMain, Term::appl("Main", {Term::string(main), to_term(cfg)})};
}

Term to_term(const Report& r) {
  std::vector<Term> errs, warns;
  for (const auto& e : r.errors) errs.push_back(to_term(e));
  for (const auto& w : r.warnings) warns.push_back(Term::string(w));
  return Term::appl("Report", {Term::list(std::move(errs)), Term::integer(r.units), Term::list(std::move(warns))});
}

Report report_from_term(const Term& t) {
  expect_appl(t, "Report", 3);
  Report r;
  for (const auto& e : expect_list(t[0])) r.errors.push_back(static_error_from_term(e));
  r.units = static_cast<int>(expect_int(t[1]));
  for (const auto& w : expect_list(t[2])) r.warnings.push_back(expect_str(w));
  return r;
}

TaskCounts count_tasks(const build::ExecTrace& trace) {
  TaskCounts c;
  for (const auto& e : trace) {
    bool exec = e.outcome == build::Outcome::Executed;
    const auto& k = e.kind;
    if (is_front_kind(k)) (exec ? c.fe_exec : c.fe_cached)++;
    else if (k == kSubFrontEnd) (exec ? c.sfe_exec : c.sfe_cached)++;
    else if (is_back_kind(k)) (exec ? c.be_exec : c.be_cached)++;
  }
  return c;
}

std::string describe(const TaskKey& key) {
  const Term& in = key.input;
  std::string what;
  if (key.kind == kFrontEnd || key.kind == kMain || key.kind == kFrontEndLib) {
    what = expect_str(in[0]);
  } else if (key.kind == kSubFrontEnd) {
    what = expect_str(in[0]) + ":" + expect_str(in[2]) + "#" + std::to_string(expect_int(in[3]));
  } else if (key.kind == kBackEnd) {
    what = strategy_key_from_term(in[1][0]).text();
  } else if (key.kind == kBackEndCong) {
    what = constructor_key_from_term(in[1]).text();
  } else if (key.kind == kBackEndDR) {
    what = expect_str(in[1]);
  } else {
    what = print_term(in);
  }
  return key.kind + " " + what;
}

void remove_outputs(const fs::path& out) {
  std::error_code ec;
  if (!fs::is_directory(out, ec)) return;
  std::vector<fs::path> doomed;
  for (const auto& e : fs::directory_iterator(out, ec)) {
    auto name = e.path().filename().string();
    if (e.is_regular_file() && (e.path().extension() == ".unit" || name == backend::kManifestFile))
      doomed.push_back(e.path());
  }
  for (const auto& p : doomed) fs::remove(p, ec);
}

CompileResult compile(const CompileOptions& opts) {
  auto t0 = Clock::now();
  if (!opts.store.parent_path().empty()) fs::create_directories(opts.store.parent_path());
  build::StoreLock lock(opts.store);
  build::Store store;
  if (opts.clean) {
    remove_outputs(opts.config.out);
  } else {
    store = build::Store::open(opts.store);
  }
  Telemetry tel;
  build::Registry reg = make_registry(&tel);
  build::Session session(store, reg);
  Term out = session.require(main_key(opts.main, opts.config));

  CompileResult res;
  res.report = report_from_term(out);
  res.trace = session.trace();
  if (res.report.errors.empty()) res.deleted = session.collect_garbage();
  store.persist(opts.store);

  auto km = session.kind_millis();
  auto sum = [&](std::initializer_list<const char*> kinds) {
    double s = 0;
    for (auto k : kinds)
      if (auto it = km.find(k); it != km.end()) s += it->second;
    return s;
  };
  res.times.total_ms = millis_since(t0);
  res.times.fe_ms = sum({kFrontEnd, kSubFrontEnd, kFrontEndLib});
  res.times.be_ms = sum({kBackEnd, kBackEndCong, kBackEndDR});
  res.times.static_ms = tel.static_ms;
  res.times.orch_ms = std::max(0.0, res.times.total_ms - res.times.fe_ms - res.times.be_ms - res.times.static_ms);
  return res;
}

// ---- stats ----

Collected collect(const ModuleId& main, const Config& cfg) {
  Collected c;
  build::Registry reg = make_registry();
  reg.add("collect", [&](Context& ctx, const Term&) {
    Gathered g = gather(ctx, main, cfg);
    c.info = std::move(g.si);
    c.errors = std::move(g.errors);
    c.modules = std::move(g.order);
    return Term::appl("Done");
  });
  build::Store store;
  build::build(store, {"collect", Term::appl("Collect", {Term::string(main), to_term(cfg)})}, reg);
  if (c.errors.empty()) {
    c.analysis = analysis::static_checks(main, c.info);
    c.errors = c.analysis.errors;
  }
  sort_errors(c.errors);
  return c;
}

ProgramStats compute_stats(const Collected& c) {
  const StaticInfo& si = c.info;
  ProgramStats s;
  s.modules = static_cast<int>(c.modules.size());
  s.libraries = static_cast<int>(si.lib_modules.size());
  s.congruences = static_cast<int>(c.analysis.congruences.size());

  std::map<std::string, int> contributions;
  for (const auto& n : si.dyn_rules) contributions[n] = 0;
  std::map<StrategyKey, std::set<ModuleId>> definers;
  for (const auto& [key, defs] : si.str_asts) {
    for (const auto& d : defs) {
      definers[key].insert(d.module);
      UsageInfo u = collect_usage(d.def.body);
      s.ambiguous_sites += u.amb_uses;
      for (const auto& n : u.defines_dr) ++contributions[n];
    }
  }
  s.strategy_keys = static_cast<int>(definers.size());
  for (const auto& [k, ms] : definers) ++s.modules_per_strategy[static_cast<int>(ms.size())];
  s.dyn_rule_names = static_cast<int>(contributions.size());
  for (const auto& [n, k] : contributions) ++s.dyn_rule_contributions[k];

  for (const auto& [key, defs] : si.olay_asts) {
    if (defs.empty()) continue;
    ++s.overlays;
    int users = 0;
    for (const auto& [m, cs] : si.used_cons)
      if (cs.count(key)) ++users;
    ++s.overlay_users[users];
  }
  return s;
}

std::string render_stats(const ProgramStats& s) {
  std::string out;
  auto line = [&](const std::string& label, int v) { out += label + ": " + std::to_string(v) + "\n"; };
  auto hist = [&](const std::string& title, const std::map<int, int>& h, const std::string& unit) {
    out += title + ":\n";
    for (const auto& [bucket, n] : h) out += "  " + std::to_string(bucket) + " " + unit + ": " + std::to_string(n) + "\n";
  };
  line("modules", s.modules);
  line("libraries", s.libraries);
  line("strategy keys", s.strategy_keys);
  line("congruences in use", s.congruences);
  line("dynamic rule names", s.dyn_rule_names);
  hist("contributions per dynamic rule name", s.dyn_rule_contributions, "contributions");
  hist("modules defining each strategy", s.modules_per_strategy, "modules");
  line("possibly ambiguous use sites", s.ambiguous_sites);
  line("overlays", s.overlays);
  hist("modules using each overlay", s.overlay_users, "modules");
  return out;
}

}  // namespace strata::pipeline
