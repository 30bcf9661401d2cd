#include "strata/info.hpp"

#include <algorithm>

namespace strata {

using namespace syntax;

std::string render(const StaticError& e) {
  return "error: " + e.kind + ": " + e.subject + " in " + e.module + " — " + e.detail;
}

void sort_errors(std::vector<StaticError>& errors) {
  std::sort(errors.begin(), errors.end(), [](const StaticError& a, const StaticError& b) {
    return std::tie(a.module, a.kind, a.subject, a.detail) < std::tie(b.module, b.kind, b.subject, b.detail);
  });
  errors.erase(std::unique(errors.begin(), errors.end()), errors.end());
}

Term to_term(const StaticError& e) {
  return Term::appl("Err", {Term::string(e.kind), Term::string(e.subject), Term::string(e.module), Term::string(e.detail)});
}

StaticError static_error_from_term(const Term& t) {
  expect_appl(t, "Err", 4);
  return {expect_str(t[0]), expect_str(t[1]), expect_str(t[2]), expect_str(t[3])};
}

// ---- generic encodings ----

Term keys_to_term(const std::set<StrategyKey>& ks) {
  std::vector<Term> out;
  for (const auto& k : ks) out.push_back(syntax::to_term(k));
  return Term::list(std::move(out));
}

Term cons_to_term(const std::set<ConstructorKey>& cs) {
  std::vector<Term> out;
  for (const auto& c : cs) out.push_back(syntax::to_term(c));
  return Term::list(std::move(out));
}

Term strings_to_term(const std::set<std::string>& ss) {
  std::vector<Term> out;
  for (const auto& s : ss) out.push_back(Term::string(s));
  return Term::list(std::move(out));
}

std::set<StrategyKey> keys_from_term(const Term& t) {
  std::set<StrategyKey> out;
  for (const auto& k : expect_list(t)) out.insert(strategy_key_from_term(k));
  return out;
}

std::set<ConstructorKey> cons_from_term(const Term& t) {
  std::set<ConstructorKey> out;
  for (const auto& c : expect_list(t)) out.insert(constructor_key_from_term(c));
  return out;
}

std::set<std::string> strings_from_term(const Term& t) {
  std::set<std::string> out;
  for (const auto& s : expect_list(t)) out.insert(expect_str(s));
  return out;
}

namespace {

Term names_to_term(const std::vector<std::string>& ns) {
  std::vector<Term> out;
  for (const auto& n : ns) out.push_back(Term::string(n));
  return Term::list(std::move(out));
}

std::vector<std::string> names_from_term(const Term& t) {
  std::vector<std::string> out;
  for (const auto& s : expect_list(t)) out.push_back(expect_str(s));
  return out;
}

}  // namespace

Term to_term(const CoreDef& d) {
  return Term::appl("Def", {syntax::to_term(d.key), names_to_term(d.sparams), names_to_term(d.tparams),
                            syntax::to_term(d.body), Term::string(std::string(modifier_name(d.modifier)))});
}

CoreDef core_def_from_term(const Term& t) {
  expect_appl(t, "Def", 5);
  return CoreDef{strategy_key_from_term(t[0]), names_from_term(t[1]), names_from_term(t[2]),
                 strategy_from_term(t[3]), modifier_from_name(expect_str(t[4]))};
}

// ---- FrontInfo ----

void merge_fragment(FrontInfo& into, const FrontInfo& f) {
  into.imps.insert(f.imps.begin(), f.imps.end());
  into.def_strs.insert(f.def_strs.begin(), f.def_strs.end());
  into.def_cons.insert(f.def_cons.begin(), f.def_cons.end());
  into.used_strs.insert(f.used_strs.begin(), f.used_strs.end());
  into.used_cons.insert(f.used_cons.begin(), f.used_cons.end());
  for (const auto& [k, cs] : f.str_used_cons) into.str_used_cons[k].insert(cs.begin(), cs.end());
  for (const auto& [k, defs] : f.str_asts) {
    auto& dst = into.str_asts[k];
    dst.insert(dst.end(), defs.begin(), defs.end());
    std::stable_sort(dst.begin(), dst.end(), [](const StrDef& a, const StrDef& b) { return a.index < b.index; });
  }
  for (const auto& [k, os] : f.olay_asts) {
    auto& dst = into.olay_asts[k];
    dst.insert(dst.end(), os.begin(), os.end());
  }
  into.dyn_rules.insert(f.dyn_rules.begin(), f.dyn_rules.end());
  for (const auto& [k, ns] : f.amb_sites) into.amb_sites[k].insert(ns.begin(), ns.end());
  into.errors.insert(into.errors.end(), f.errors.begin(), f.errors.end());
  into.warnings.insert(into.warnings.end(), f.warnings.begin(), f.warnings.end());
}

Term to_term(const FrontInfo& fi) {
  std::vector<Term> suc, asts, olays, amb, errs;
  for (const auto& [k, cs] : fi.str_used_cons) suc.push_back(Term::tuple({syntax::to_term(k), cons_to_term(cs)}));
  for (const auto& [k, defs] : fi.str_asts) {
    std::vector<Term> ds;
    for (const auto& d : defs) ds.push_back(Term::tuple({Term::integer(d.index), to_term(d.def)}));
    asts.push_back(Term::tuple({syntax::to_term(k), Term::list(std::move(ds))}));
  }
  for (const auto& [k, os] : fi.olay_asts) {
    std::vector<Term> ts;
    for (const auto& o : os) ts.push_back(syntax::to_term(o));
    olays.push_back(Term::tuple({syntax::to_term(k), Term::list(std::move(ts))}));
  }
  for (const auto& [k, ns] : fi.amb_sites) amb.push_back(Term::tuple({syntax::to_term(k), strings_to_term(ns)}));
  for (const auto& e : fi.errors) errs.push_back(to_term(e));
  std::vector<Term> warns;
  for (const auto& w : fi.warnings) warns.push_back(Term::string(w));
  return Term::appl("FI", {strings_to_term(fi.imps), keys_to_term(fi.def_strs), cons_to_term(fi.def_cons),
                           keys_to_term(fi.used_strs), cons_to_term(fi.used_cons), Term::list(std::move(suc)),
                           Term::list(std::move(asts)), Term::list(std::move(olays)), strings_to_term(fi.dyn_rules),
                           Term::list(std::move(amb)), Term::list(std::move(errs)), Term::list(std::move(warns))});
}

FrontInfo front_info_from_term(const Term& t) {
  expect_appl(t, "FI", 12);
  FrontInfo fi;
  fi.imps = strings_from_term(t[0]);
  fi.def_strs = keys_from_term(t[1]);
  fi.def_cons = cons_from_term(t[2]);
  fi.used_strs = keys_from_term(t[3]);
  fi.used_cons = cons_from_term(t[4]);
  for (const auto& e : expect_list(t[5])) fi.str_used_cons[strategy_key_from_term(e[0])] = cons_from_term(e[1]);
  for (const auto& e : expect_list(t[6])) {
    auto& dst = fi.str_asts[strategy_key_from_term(e[0])];
    for (const auto& d : expect_list(e[1]))
      dst.push_back(StrDef{static_cast<int>(expect_int(d[0])), core_def_from_term(d[1])});
  }
  for (const auto& e : expect_list(t[7])) {
    auto& dst = fi.olay_asts[constructor_key_from_term(e[0])];
    for (const auto& o : expect_list(e[1])) dst.push_back(overlay_from_term(o));
  }
  fi.dyn_rules = strings_from_term(t[8]);
  for (const auto& e : expect_list(t[9])) fi.amb_sites[strategy_key_from_term(e[0])] = strings_from_term(e[1]);
  for (const auto& e : expect_list(t[10])) fi.errors.push_back(static_error_from_term(e));
  for (const auto& w : expect_list(t[11])) fi.warnings.push_back(expect_str(w));
  return fi;
}

// ---- LibInfo ----

Term to_term(const LibInfo& li) {
  return Term::appl("LI", {keys_to_term(li.def_strs), cons_to_term(li.def_cons), Term::string(li.unit_dir)});
}

LibInfo lib_info_from_term(const Term& t) {
  expect_appl(t, "LI", 3);
  return LibInfo{keys_from_term(t[0]), cons_from_term(t[1]), expect_str(t[2])};
}

LibInfo parse_lib_manifest(std::string_view text, const std::string& unit_dir) {
  Term t = parse_term(text);
  expect_appl(t, "Library", 2);
  LibInfo li;
  li.unit_dir = unit_dir;
  for (const auto& e : expect_list(t[0])) {
    expect_appl(e, "Ext", 3);
    li.def_strs.insert(StrategyKey{expect_str(e[0]), static_cast<int>(expect_int(e[1])),
                                   static_cast<int>(expect_int(e[2]))});
  }
  for (const auto& c : expect_list(t[1])) {
    expect_appl(c, "Con", 2);
    li.def_cons.insert(ConstructorKey{expect_str(c[0]), static_cast<int>(expect_int(c[1]))});
  }
  return li;
}

// ---- StaticInfo ----

void combine_info(StaticInfo& si, const ModuleId& mod, const FrontInfo& fi, const std::set<ModuleId>& default_imps) {
  auto& imps = si.imps[mod];
  imps = fi.imps;
  imps.insert(default_imps.begin(), default_imps.end());
  imps.erase(mod);
  si.def_strs[mod] = fi.def_strs;
  si.def_cons[mod] = fi.def_cons;
  si.used_strs[mod] = fi.used_strs;
  si.used_cons[mod] = fi.used_cons;
  for (const auto& [k, cs] : fi.str_used_cons) si.str_used_cons[k].insert(cs.begin(), cs.end());
  for (const auto& [k, defs] : fi.str_asts) {
    auto& dst = si.str_asts[k];
    for (const auto& d : defs) {
      ModDef md{mod, d.index, d.def};
      if (std::find(dst.begin(), dst.end(), md) == dst.end()) dst.push_back(std::move(md));
    }
    std::sort(dst.begin(), dst.end(), [](const ModDef& a, const ModDef& b) {
      return std::tie(a.module, a.index) < std::tie(b.module, b.index);
    });
  }
  for (const auto& [k, os] : fi.olay_asts) {
    auto& dst = si.olay_asts[k];
    for (const auto& o : os) {
      std::pair<ModuleId, OverlayDef> e{mod, o};
      if (std::find(dst.begin(), dst.end(), e) == dst.end()) dst.push_back(std::move(e));
    }
  }
  si.dyn_rules.insert(fi.dyn_rules.begin(), fi.dyn_rules.end());
  for (const auto& [k, ns] : fi.amb_sites) si.amb_sites[{mod, k}].insert(ns.begin(), ns.end());
  for (const auto& w : fi.warnings) si.warnings.push_back(mod + ": " + w);
}

void combine_info_lib(StaticInfo& si, const ModuleId& mod, const LibInfo& li) {
  si.imps[mod] = {};
  si.def_strs[mod] = li.def_strs;
  si.def_cons[mod] = li.def_cons;
  si.used_strs[mod] = {};
  si.used_cons[mod] = {};
  si.externals.insert(li.def_strs.begin(), li.def_strs.end());
  for (const auto& k : li.def_strs) si.external_dirs.try_emplace(k, li.unit_dir);
  si.lib_modules.insert(mod);
}

}  // namespace strata
