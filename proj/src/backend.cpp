#include "strata/backend.hpp"

#include <algorithm>

namespace strata::backend {

using namespace syntax;

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

/// Structural rewrite of every pattern and every strategy node; `fs` maps a
/// strategy node after its children have been rewritten.
struct Rewriter {
  std::function<Pattern(const Pattern&)> pattern;
  std::function<std::optional<Strategy>(const Strategy&)> before;

  Strategy operator()(const Strategy& s) const {
    if (before)
      if (auto r = before(s)) return *r;
    auto& self = *this;
    return std::visit(
        overloaded{
            [&](const Match& m) { return Strategy{Match{pattern(m.pattern)}}; },
            [&](const Build& b) { return Strategy{Build{pattern(b.pattern)}}; },
            [&](const Seq& x) { return seq(self(*x.first), self(*x.second)); },
            [&](const LChoice& x) { return lchoice(self(*x.left), self(*x.right)); },
            [&](const Scope& x) { return scope(x.vars, self(*x.body)); },
            [&](const Call& c) {
              std::vector<Strategy> sargs;
              for (const auto& a : c.sargs) sargs.push_back(self(a));
              std::vector<Pattern> targs;
              for (const auto& a : c.targs) targs.push_back(pattern(a));
              return call(c.key, std::move(sargs), std::move(targs));
            },
            [&](const CallPrim& p) {
              std::vector<Pattern> targs;
              for (const auto& a : p.targs) targs.push_back(pattern(a));
              return Strategy{CallPrim{p.name, std::move(targs)}};
            },
            [&](const All& a) { return Strategy{All{self(*a.body)}}; },
            [&](const CongApply& c) {
              std::vector<Strategy> sargs;
              for (const auto& a : c.sargs) sargs.push_back(self(a));
              return Strategy{CongApply{c.ctor, std::move(sargs)}};
            },
            [&](const DefineDR& d) { return Strategy{DefineDR{d.rule, pattern(d.lhs), pattern(d.rhs)}}; },
            [&](const UndefineDR& d) { return Strategy{UndefineDR{d.rule, pattern(d.key)}}; },
            [&](const ScopeDR& d) { return Strategy{ScopeDR{d.rule, self(*d.body)}}; },
            [&](const auto&) { return s; },
        },
        s.node);
  }
};

Pattern map_pattern(const Pattern& p, const std::function<std::optional<Pattern>(const Pattern&)>& f) {
  if (auto r = f(p)) return *r;
  auto rec = [&](const Pattern& x) { return map_pattern(x, f); };
  return std::visit(overloaded{
                        [&](const PAppl& a) {
                          std::vector<Pattern> args;
                          for (const auto& c : a.args) args.push_back(rec(c));
                          return pappl(a.ctor, std::move(args));
                        },
                        [&](const PList& l) {
                          PList out;
                          for (const auto& c : l.items) out.items.push_back(rec(c));
                          if (l.tail) out.tail = rec(**l.tail);
                          return Pattern{std::move(out)};
                        },
                        [&](const PTuple& t) {
                          PTuple out;
                          for (const auto& c : t.items) out.items.push_back(rec(c));
                          return Pattern{std::move(out)};
                        },
                        [&](const PAs& a) { return Pattern{PAs{a.name, rec(*a.pattern)}}; },
                        [&](const PGeneric& g) { return Pattern{PGeneric{rec(*g.fun), rec(*g.args)}}; },
                        [&](const auto&) { return p; },
                    },
                    p.node);
}

Pattern rename_vars(const Pattern& p, const std::map<std::string, std::string>& names) {
  return map_pattern(p, [&](const Pattern& x) -> std::optional<Pattern> {
    if (const auto* v = std::get_if<PVar>(&x.node)) {
      auto it = names.find(v->name);
      return it == names.end() ? x : pvar(it->second);
    }
    if (const auto* a = std::get_if<PAs>(&x.node)) {
      auto it = names.find(a->name);
      if (it != names.end()) return Pattern{PAs{it->second, rename_vars(*a->pattern, names)}};
    }
    return std::nullopt;
  });
}

Strategy rename(const Strategy& s, const std::map<std::string, std::string>& sp,
                const std::map<std::string, std::string>& tp) {
  Rewriter rw;
  rw.pattern = [&](const Pattern& p) { return rename_vars(p, tp); };
  rw.before = [&](const Strategy& x) -> std::optional<Strategy> {
    if (const auto* c = std::get_if<Call>(&x.node)) {
      if (c->key.sarity == 0 && c->key.tarity == 0 && c->sargs.empty() && c->targs.empty()) {
        auto it = sp.find(c->key.name);
        if (it != sp.end()) return call({it->second, 0, 0});
      }
    }
    if (const auto* sc = std::get_if<Scope>(&x.node)) {
      std::map<std::string, std::string> inner = tp;
      for (const auto& v : sc->vars) inner.erase(v);
      if (inner.size() != tp.size()) return scope(sc->vars, rename(*sc->body, sp, inner));
    }
    return std::nullopt;
  };
  return rw(s);
}

bool has_ambref(const Strategy& s) {
  bool found = false;
  Rewriter rw;
  rw.pattern = [](const Pattern& p) { return p; };
  rw.before = [&](const Strategy& x) -> std::optional<Strategy> {
    if (std::holds_alternative<AmbRef>(x.node)) found = true;
    return std::nullopt;
  };
  rw(s);
  return found;
}

}  // namespace

std::string sparam_name(int i) { return "$s" + std::to_string(i); }
std::string tparam_name(int i) { return "$t" + std::to_string(i); }

std::string unit_file_name(const StrategyKey& key) {
  return key.name + "." + std::to_string(key.sarity) + "." + std::to_string(key.tarity) + ".unit";
}

Strategy resolve_refs(const Strategy& body, const std::map<std::string, StrategyKey>& resolutions,
                      const StrategyKey& enclosing) {
  Rewriter rw;
  rw.pattern = [](const Pattern& p) { return p; };
  rw.before = [&](const Strategy& x) -> std::optional<Strategy> {
    if (const auto* a = std::get_if<AmbRef>(&x.node)) {
      auto it = resolutions.find(a->name);
      if (it == resolutions.end())
        throw BackendError("no resolution for bare name '" + a->name + "' in " + enclosing.text());
      return call(it->second);
    }
    return std::nullopt;
  };
  return rw(body);
}

Strategy canonical_body(const CoreDef& d) {
  std::map<std::string, std::string> sp, tp;
  for (std::size_t i = 0; i < d.sparams.size(); ++i) sp[d.sparams[i]] = sparam_name(static_cast<int>(i));
  for (std::size_t i = 0; i < d.tparams.size(); ++i) tp[d.tparams[i]] = tparam_name(static_cast<int>(i));
  return rename(d.body, sp, tp);
}

Strategy merge_definitions(const StrategyKey& key, std::vector<ModDef> defs) {
  if (defs.empty()) throw BackendError("no definitions for " + key.text());
  std::sort(defs.begin(), defs.end(),
            [](const ModDef& a, const ModDef& b) { return std::tie(a.module, a.index) < std::tie(b.module, b.index); });
  Strategy out = canonical_body(defs.back().def);
  for (std::size_t i = defs.size() - 1; i-- > 0;) out = lchoice(canonical_body(defs[i].def), std::move(out));
  return out;
}

Pattern expand_overlays(const Pattern& p, const std::map<ConstructorKey, OverlayDef>& overlays) {
  if (overlays.empty()) return p;
  return map_pattern(p, [&](const Pattern& x) -> std::optional<Pattern> {
    const auto* a = std::get_if<PAppl>(&x.node);
    if (!a) return std::nullopt;
    std::vector<Pattern> args;
    for (const auto& c : a->args) args.push_back(expand_overlays(c, overlays));
    auto it = overlays.find(ConstructorKey{a->ctor, static_cast<int>(a->args.size())});
    if (it == overlays.end()) return pappl(a->ctor, std::move(args));
    std::map<std::string, Pattern> subst;
    for (std::size_t i = 0; i < args.size(); ++i) subst.emplace(it->second.params[i], args[i]);
    Pattern body = map_pattern(it->second.body, [&](const Pattern& y) -> std::optional<Pattern> {
      if (const auto* v = std::get_if<PVar>(&y.node))
        if (auto s = subst.find(v->name); s != subst.end()) return s->second;
      return std::nullopt;
    });
    // The instantiated body may itself mention overlays.
    return expand_overlays(body, overlays);
  });
}

Strategy expand_overlays(const Strategy& body, const std::map<ConstructorKey, OverlayDef>& overlays) {
  if (overlays.empty()) return body;
  Rewriter rw;
  rw.pattern = [&](const Pattern& p) { return expand_overlays(p, overlays); };
  rw.before = [&](const Strategy& x) -> std::optional<Strategy> {
    if (const auto* c = std::get_if<CongApply>(&x.node))
      if (overlays.count(c->ctor)) throw BackendError("overlay " + c->ctor.text() + " used as a strategy");
    return std::nullopt;
  };
  return rw(body);
}

Strategy gen_congruence(const ConstructorKey& c) {
  std::vector<Strategy> sargs;
  for (int i = 0; i < c.arity; ++i) sargs.push_back(call({sparam_name(i), 0, 0}));
  return Strategy{CongApply{c, std::move(sargs)}};
}

Strategy gen_dynrule_support(const std::string& name) {
  return Strategy{CallPrim{"dr-apply", {Pattern{PStr{name}}}}};
}

std::string unit_text(const StrategyKey& key, const Strategy& body) {
  std::string out = print_term(Term::appl("Unit", {syntax::to_term(key), syntax::to_term(body)}));
  out += '\n';
  return out;
}

// ---- back-end input ----

Term to_term(const BackEndInput& in) {
  std::vector<Term> defs, olays;
  for (const auto& d : in.defs) {
    std::vector<Term> res;
    for (const auto& [n, k] : d.resolutions) res.push_back(Term::appl("Res", {Term::string(n), syntax::to_term(k)}));
    defs.push_back(Term::appl("Src", {Term::string(d.module), Term::integer(d.index), strata::to_term(d.def),
                                      Term::list(std::move(res))}));
  }
  for (const auto& o : in.overlays) olays.push_back(syntax::to_term(o));
  return Term::appl("BE", {syntax::to_term(in.key), Term::list(std::move(defs)), Term::list(std::move(olays))});
}

BackEndInput back_end_input_from_term(const Term& t) {
  expect_appl(t, "BE", 3);
  BackEndInput in;
  in.key = strategy_key_from_term(t[0]);
  for (const auto& d : expect_list(t[1])) {
    expect_appl(d, "Src", 4);
    BackEndDef bd{expect_str(d[0]), static_cast<int>(expect_int(d[1])), core_def_from_term(d[2]), {}};
    for (const auto& r : expect_list(d[3])) {
      expect_appl(r, "Res", 2);
      bd.resolutions[expect_str(r[0])] = strategy_key_from_term(r[1]);
    }
    in.defs.push_back(std::move(bd));
  }
  for (const auto& o : expect_list(t[2])) in.overlays.push_back(overlay_from_term(o));
  return in;
}

Strategy compile_strategy(const BackEndInput& in) {
  std::vector<ModDef> defs;
  for (const auto& d : in.defs) {
    CoreDef resolved = d.def;
    resolved.body = resolve_refs(d.def.body, d.resolutions, in.key);
    defs.push_back(ModDef{d.module, d.index, std::move(resolved)});
  }
  std::map<ConstructorKey, OverlayDef> overlays;
  for (const auto& o : in.overlays) overlays.emplace(o.key(), o);
  Strategy out = expand_overlays(merge_definitions(in.key, std::move(defs)), overlays);
  if (has_ambref(out)) throw BackendError("unresolved reference left in " + in.key.text());
  return out;
}

// ---- manifest ----

Term to_term(const Manifest& m) {
  auto by_text = [](const StrategyKey& a, const StrategyKey& b) { return a.text() < b.text(); };
  std::vector<std::pair<StrategyKey, std::string>> units(m.units.begin(), m.units.end());
  std::sort(units.begin(), units.end(), [&](const auto& a, const auto& b) { return by_text(a.first, b.first); });
  std::vector<Term> us, cs, ds, es;
  for (const auto& [k, f] : units) us.push_back(Term::appl("U", {syntax::to_term(k), Term::string(f)}));
  std::vector<ConstructorKey> cons(m.constructors.begin(), m.constructors.end());
  std::sort(cons.begin(), cons.end(), [](const auto& a, const auto& b) { return a.text() < b.text(); });
  for (const auto& c : cons) cs.push_back(syntax::to_term(c));
  for (const auto& d : m.dyn_rules) ds.push_back(Term::appl("DR", {Term::string(d)}));
  auto ext = m.externals;
  std::sort(ext.begin(), ext.end(), [&](const auto& a, const auto& b) { return by_text(a.key, b.key); });
  for (const auto& e : ext)
    es.push_back(Term::appl("ExtLib", {Term::string(e.key.name), Term::integer(e.key.sarity),
                                       Term::integer(e.key.tarity), Term::string(e.dir)}));
  return Term::appl("Program", {Term::list(std::move(us)), Term::list(std::move(cs)), Term::list(std::move(ds)),
                                Term::list(std::move(es))});
}

Manifest manifest_from_term(const Term& t) {
  expect_appl(t, "Program", 4);
  Manifest m;
  for (const auto& u : expect_list(t[0])) {
    expect_appl(u, "U", 2);
    m.units[strategy_key_from_term(u[0])] = expect_str(u[1]);
  }
  for (const auto& c : expect_list(t[1])) m.constructors.insert(constructor_key_from_term(c));
  for (const auto& d : expect_list(t[2])) m.dyn_rules.insert(expect_str(expect_appl(d, "DR", 1)[0]));
  for (const auto& e : expect_list(t[3])) {
    expect_appl(e, "ExtLib", 4);
    m.externals.push_back({StrategyKey{expect_str(e[0]), static_cast<int>(expect_int(e[1])),
                                       static_cast<int>(expect_int(e[2]))},
                           expect_str(e[3])});
  }
  return m;
}

std::string manifest_text(const Manifest& m) {
  std::string out = print_term(to_term(m));
  out += '\n';
  return out;
}

}  // namespace strata::backend
