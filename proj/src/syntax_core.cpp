#include <algorithm>

#include "strata/syntax.hpp"

namespace strata::syntax {

std::string StrategyKey::text() const {
  return name + "/" + std::to_string(sarity) + "-" + std::to_string(tarity);
}

std::string ConstructorKey::text() const { return name + "/" + std::to_string(arity); }

bool PAppl::operator==(const PAppl& o) const { return ctor == o.ctor && args == o.args; }
bool PList::operator==(const PList& o) const { return items == o.items && tail == o.tail; }
bool PTuple::operator==(const PTuple& o) const { return items == o.items; }
bool PAs::operator==(const PAs& o) const { return name == o.name && pattern == o.pattern; }
bool PGeneric::operator==(const PGeneric& o) const { return fun == o.fun && args == o.args; }
bool PApply::operator==(const PApply& o) const { return strategy == o.strategy && pattern == o.pattern; }
bool Pattern::operator==(const Pattern& o) const { return node == o.node; }
bool Call::operator==(const Call& o) const {
  return key == o.key && sargs == o.sargs && targs == o.targs;
}
bool CongApply::operator==(const CongApply& o) const { return ctor == o.ctor && sargs == o.sargs; }
bool Strategy::operator==(const Strategy& o) const { return node == o.node; }

Pattern pvar(std::string name) { return Pattern{PVar{std::move(name)}}; }
Pattern pappl(std::string ctor, std::vector<Pattern> args) {
  return Pattern{PAppl{std::move(ctor), std::move(args)}};
}
Strategy seq(Strategy a, Strategy b) { return Strategy{Seq{std::move(a), std::move(b)}}; }
Strategy lchoice(Strategy a, Strategy b) { return Strategy{LChoice{std::move(a), std::move(b)}}; }
Strategy scope(std::vector<std::string> vars, Strategy body) {
  return Strategy{Scope{std::move(vars), std::move(body)}};
}
Strategy call(StrategyKey key, std::vector<Strategy> sargs, std::vector<Pattern> targs) {
  return Strategy{Call{std::move(key), std::move(sargs), std::move(targs)}};
}

std::string_view modifier_name(Modifier m) {
  switch (m) {
    case Modifier::Plain: return "plain";
    case Modifier::Extend: return "extend";
    case Modifier::Override: return "override";
  }
  return "plain";
}

Modifier modifier_from_name(std::string_view s) {
  if (s == "extend") return Modifier::Extend;
  if (s == "override") return Modifier::Override;
  if (s == "plain") return Modifier::Plain;
  throw TermShapeError("unknown modifier " + std::string(s));
}

std::string_view def_kind_name(DefKind k) {
  switch (k) {
    case DefKind::Signature: return "signature";
    case DefKind::Overlay: return "overlay";
    case DefKind::Strategy: return "strategy";
  }
  return "strategy";
}

DefKind def_kind_from_name(std::string_view s) {
  if (s == "signature") return DefKind::Signature;
  if (s == "overlay") return DefKind::Overlay;
  if (s == "strategy") return DefKind::Strategy;
  throw TermShapeError("unknown definition kind " + std::string(s));
}

DefKind def_kind(const Def& d) {
  if (std::holds_alternative<SigDef>(d)) return DefKind::Signature;
  if (std::holds_alternative<OverlayDef>(d)) return DefKind::Overlay;
  return DefKind::Strategy;
}

std::string def_name(const Def& d) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SigDef>) {
          return "signature";
        } else if constexpr (std::is_same_v<T, OverlayDef>) {
          return x.key().text();
        } else {
          return x.key.text();
        }
      },
      d);
}

SplitModule split_module(const ModuleAST& m) {
  SplitModule out;
  out.imports = m.imports;
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < m.defs.size(); ++i) {
    std::string name = def_name(m.defs[i]);
    int index = seen[name]++;
    out.units.push_back(DefUnit{m.id, name, index, def_kind(m.defs[i]),
                                i < m.def_texts.size() ? m.def_texts[i] : std::string(), m.defs[i]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Traversals

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

void strategy_usage(const Strategy& s, const std::set<std::string>& bound, UsageInfo& out);

void pattern_usage(const Pattern& p, const std::set<std::string>& bound, UsageInfo& out) {
  std::visit(overloaded{
                 [&](const PAppl& a) {
                   out.used_cons.insert({a.ctor, static_cast<int>(a.args.size())});
                   for (const auto& c : a.args) pattern_usage(c, bound, out);
                 },
                 [&](const PList& l) {
                   for (const auto& c : l.items) pattern_usage(c, bound, out);
                   if (l.tail) pattern_usage(**l.tail, bound, out);
                 },
                 [&](const PTuple& t) {
                   for (const auto& c : t.items) pattern_usage(c, bound, out);
                 },
                 [&](const PAs& a) { pattern_usage(*a.pattern, bound, out); },
                 [&](const PGeneric& g) {
                   pattern_usage(*g.fun, bound, out);
                   pattern_usage(*g.args, bound, out);
                 },
                 [&](const PApply& a) {
                   strategy_usage(*a.strategy, bound, out);
                   pattern_usage(*a.pattern, bound, out);
                 },
                 [](const auto&) {},
             },
             p.node);
}

bool generated(std::string_view name) { return name.find(kGeneratedPrefix) != std::string_view::npos; }

void strategy_usage(const Strategy& s, const std::set<std::string>& bound, UsageInfo& out) {
  std::visit(overloaded{
                 [&](const Match& m) { pattern_usage(m.pattern, bound, out); },
                 [&](const Build& b) { pattern_usage(b.pattern, bound, out); },
                 [&](const Seq& x) {
                   strategy_usage(*x.first, bound, out);
                   strategy_usage(*x.second, bound, out);
                 },
                 [&](const LChoice& x) {
                   strategy_usage(*x.left, bound, out);
                   strategy_usage(*x.right, bound, out);
                 },
                 [&](const Scope& x) { strategy_usage(*x.body, bound, out); },
                 [&](const Call& c) {
                   if (!bound.count(c.key.name) && !generated(c.key.name)) out.used_strs.insert(c.key);
                   for (const auto& a : c.sargs) strategy_usage(a, bound, out);
                   for (const auto& a : c.targs) pattern_usage(a, bound, out);
                 },
                 [&](const AmbRef& a) {
                   out.amb_sites.insert(a.name);
                   ++out.amb_uses;
                 },
                 [&](const CallPrim& p) {
                   for (const auto& a : p.targs) pattern_usage(a, bound, out);
                 },
                 [&](const All& a) { strategy_usage(*a.body, bound, out); },
                 [&](const CongApply& c) {
                   out.used_cons.insert(c.ctor);
                   for (const auto& a : c.sargs) strategy_usage(a, bound, out);
                 },
                 [&](const DefineDR& d) {
                   out.uses_dr.insert(d.rule);
                   out.defines_dr.insert(d.rule);
                   pattern_usage(d.lhs, bound, out);
                   pattern_usage(d.rhs, bound, out);
                 },
                 [&](const UndefineDR& d) {
                   out.uses_dr.insert(d.rule);
                   pattern_usage(d.key, bound, out);
                 },
                 [&](const ScopeDR& d) {
                   out.uses_dr.insert(d.rule);
                   strategy_usage(*d.body, bound, out);
                 },
                 [&](const Where& w) { strategy_usage(*w.body, bound, out); },
                 [&](const ApplyTo& a) {
                   strategy_usage(*a.strategy, bound, out);
                   pattern_usage(a.pattern, bound, out);
                 },
                 [&](const BindTo& b) {
                   strategy_usage(*b.strategy, bound, out);
                   pattern_usage(b.pattern, bound, out);
                 },
                 [&](const Lambda& l) {
                   pattern_usage(l.lhs, bound, out);
                   pattern_usage(l.rhs, bound, out);
                   if (l.where) strategy_usage(**l.where, bound, out);
                 },
                 [](const auto&) {},
             },
             s.node);
}

void add_unique(std::vector<std::string>& out, const std::string& v) {
  if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
}

void free_vars_rec(const Strategy& s, const std::set<std::string>& declared, std::vector<std::string>& out);

void pattern_free(const Pattern& p, const std::set<std::string>& declared, std::vector<std::string>& out) {
  std::vector<std::string> vars;
  pattern_vars(p, vars);
  for (auto& v : vars)
    if (!declared.count(v)) add_unique(out, v);
}

void free_vars_rec(const Strategy& s, const std::set<std::string>& declared, std::vector<std::string>& out) {
  std::visit(overloaded{
                 [&](const Match& m) { pattern_free(m.pattern, declared, out); },
                 [&](const Build& b) { pattern_free(b.pattern, declared, out); },
                 [&](const Seq& x) {
                   free_vars_rec(*x.first, declared, out);
                   free_vars_rec(*x.second, declared, out);
                 },
                 [&](const LChoice& x) {
                   free_vars_rec(*x.left, declared, out);
                   free_vars_rec(*x.right, declared, out);
                 },
                 [&](const Scope& x) {
                   std::set<std::string> inner = declared;
                   inner.insert(x.vars.begin(), x.vars.end());
                   free_vars_rec(*x.body, inner, out);
                 },
                 [&](const Call& c) {
                   for (const auto& a : c.sargs) free_vars_rec(a, declared, out);
                   for (const auto& a : c.targs) pattern_free(a, declared, out);
                 },
                 [&](const CallPrim& p) {
                   for (const auto& a : p.targs) pattern_free(a, declared, out);
                 },
                 [&](const All& a) { free_vars_rec(*a.body, declared, out); },
                 [&](const CongApply& c) {
                   for (const auto& a : c.sargs) free_vars_rec(a, declared, out);
                 },
                 [&](const DefineDR& d) {
                   pattern_free(d.lhs, declared, out);
                   pattern_free(d.rhs, declared, out);
                 },
                 [&](const UndefineDR& d) { pattern_free(d.key, declared, out); },
                 [&](const ScopeDR& d) { free_vars_rec(*d.body, declared, out); },
                 [&](const Where& w) { free_vars_rec(*w.body, declared, out); },
                 [&](const ApplyTo& a) {
                   free_vars_rec(*a.strategy, declared, out);
                   pattern_free(a.pattern, declared, out);
                 },
                 [&](const BindTo& b) {
                   free_vars_rec(*b.strategy, declared, out);
                   pattern_free(b.pattern, declared, out);
                 },
                 [](const auto&) {},
             },
             s.node);
}

}  // namespace

UsageInfo collect_usage(const Strategy& core, const std::set<std::string>& bound_sparams) {
  UsageInfo out;
  strategy_usage(core, bound_sparams, out);
  return out;
}

void collect_pattern_usage(const Pattern& p, UsageInfo& out) { pattern_usage(p, {}, out); }

void pattern_vars(const Pattern& p, std::vector<std::string>& out) {
  std::visit(overloaded{
                 [&](const PVar& v) { add_unique(out, v.name); },
                 [&](const PAppl& a) {
                   for (const auto& c : a.args) pattern_vars(c, out);
                 },
                 [&](const PList& l) {
                   for (const auto& c : l.items) pattern_vars(c, out);
                   if (l.tail) pattern_vars(**l.tail, out);
                 },
                 [&](const PTuple& t) {
                   for (const auto& c : t.items) pattern_vars(c, out);
                 },
                 [&](const PAs& a) {
                   add_unique(out, a.name);
                   pattern_vars(*a.pattern, out);
                 },
                 [&](const PGeneric& g) {
                   pattern_vars(*g.fun, out);
                   pattern_vars(*g.args, out);
                 },
                 [&](const PApply& a) { pattern_vars(*a.pattern, out); },
                 [](const auto&) {},
             },
             p.node);
}

std::vector<std::string> free_vars(const Strategy& s) {
  std::vector<std::string> out;
  free_vars_rec(s, {}, out);
  return out;
}

bool is_core(const Pattern& p) {
  return std::visit(overloaded{
                        [](const PAppl& a) {
                          return std::all_of(a.args.begin(), a.args.end(),
                                             [](const Pattern& c) { return is_core(c); });
                        },
                        [](const PList& l) {
                          return std::all_of(l.items.begin(), l.items.end(),
                                             [](const Pattern& c) { return is_core(c); }) &&
                                 (!l.tail || is_core(**l.tail));
                        },
                        [](const PTuple& t) {
                          return std::all_of(t.items.begin(), t.items.end(),
                                             [](const Pattern& c) { return is_core(c); });
                        },
                        [](const PAs& a) { return is_core(*a.pattern); },
                        [](const PGeneric& g) { return is_core(*g.fun) && is_core(*g.args); },
                        [](const PApply&) { return false; },
                        [](const auto&) { return true; },
                    },
                    p.node);
}

bool is_core(const Strategy& s) {
  auto all_core = [](const std::vector<Strategy>& xs) {
    return std::all_of(xs.begin(), xs.end(), [](const Strategy& c) { return is_core(c); });
  };
  auto all_pat = [](const std::vector<Pattern>& xs) {
    return std::all_of(xs.begin(), xs.end(), [](const Pattern& c) { return is_core(c); });
  };
  return std::visit(overloaded{
                        [](const Match& m) { return is_core(m.pattern); },
                        [](const Build& b) { return is_core(b.pattern); },
                        [](const Seq& x) { return is_core(*x.first) && is_core(*x.second); },
                        [](const LChoice& x) { return is_core(*x.left) && is_core(*x.right); },
                        [](const Scope& x) { return is_core(*x.body); },
                        [&](const Call& c) { return all_core(c.sargs) && all_pat(c.targs); },
                        [&](const CallPrim& p) { return all_pat(p.targs); },
                        [](const All& a) { return is_core(*a.body); },
                        [&](const CongApply& c) { return all_core(c.sargs); },
                        [](const DefineDR& d) { return is_core(d.lhs) && is_core(d.rhs); },
                        [](const UndefineDR& d) { return is_core(d.key); },
                        [](const ScopeDR& d) { return is_core(*d.body); },
                        [](const Where&) { return false; },
                        [](const ApplyTo&) { return false; },
                        [](const BindTo&) { return false; },
                        [](const Lambda&) { return false; },
                        [](const Proceed&) { return false; },
                        [](const auto&) { return true; },
                    },
                    s.node);
}

// ---------------------------------------------------------------------------
// Term encodings

namespace {

Term strs(const std::vector<std::string>& xs) {
  std::vector<Term> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(Term::string(x));
  return Term::list(std::move(out));
}

std::vector<std::string> strs_from(const Term& t) {
  std::vector<std::string> out;
  for (const auto& x : expect_list(t)) out.push_back(expect_str(x));
  return out;
}

Term pats(const std::vector<Pattern>& xs) {
  std::vector<Term> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(to_term(x));
  return Term::list(std::move(out));
}

Term strats(const std::vector<Strategy>& xs) {
  std::vector<Term> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(to_term(x));
  return Term::list(std::move(out));
}

std::vector<Pattern> pats_from(const Term& t) {
  std::vector<Pattern> out;
  for (const auto& x : expect_list(t)) out.push_back(pattern_from_term(x));
  return out;
}

std::vector<Strategy> strats_from(const Term& t) {
  std::vector<Strategy> out;
  for (const auto& x : expect_list(t)) out.push_back(strategy_from_term(x));
  return out;
}

int small_int(const Term& t) {
  auto v = expect_int(t);
  if (v < 0 || v > 1'000'000) throw TermShapeError("arity out of range");
  return static_cast<int>(v);
}

}  // namespace

Term to_term(const StrategyKey& k) {
  return Term::appl("Key", {Term::string(k.name), Term::integer(k.sarity), Term::integer(k.tarity)});
}

Term to_term(const ConstructorKey& k) {
  return Term::appl("Con", {Term::string(k.name), Term::integer(k.arity)});
}

StrategyKey strategy_key_from_term(const Term& t) {
  expect_appl(t, "Key", 3);
  return {expect_str(t[0]), small_int(t[1]), small_int(t[2])};
}

ConstructorKey constructor_key_from_term(const Term& t) {
  expect_appl(t, "Con", 2);
  return {expect_str(t[0]), small_int(t[1])};
}

Term to_term(const Pattern& p) {
  return std::visit(
      overloaded{
          [](const PVar& v) { return Term::appl("Var", {Term::string(v.name)}); },
          [](const PWild&) { return Term::appl("Wld"); },
          [](const PAppl& a) { return Term::appl("Op", {Term::string(a.ctor), pats(a.args)}); },
          [](const PInt& i) { return Term::appl("Int", {Term::integer(i.value)}); },
          [](const PStr& s) { return Term::appl("Str", {Term::string(s.value)}); },
          [](const PList& l) {
            return Term::appl("List", {pats(l.items), l.tail ? Term::appl("Some", {to_term(**l.tail)})
                                                             : Term::appl("None")});
          },
          [](const PTuple& t) { return Term::appl("Tup", {pats(t.items)}); },
          [](const PAs& a) { return Term::appl("As", {Term::string(a.name), to_term(*a.pattern)}); },
          [](const PGeneric& g) { return Term::appl("Gen", {to_term(*g.fun), to_term(*g.args)}); },
          [](const PApply&) -> Term {
            throw TermShapeError("strategy application inside pattern has no core encoding");
          },
      },
      p.node);
}

Pattern pattern_from_term(const Term& t) {
  if (!t.is_appl()) throw TermShapeError("pattern expected, got " + print_term(t).substr(0, 60));
  const auto& c = t.name();
  if (c == "Var" && t.size() == 1) return pvar(expect_str(t[0]));
  if (c == "Wld" && t.size() == 0) return Pattern{PWild{}};
  if (c == "Op" && t.size() == 2) return pappl(expect_str(t[0]), pats_from(t[1]));
  if (c == "Int" && t.size() == 1) return Pattern{PInt{expect_int(t[0])}};
  if (c == "Str" && t.size() == 1) return Pattern{PStr{expect_str(t[0])}};
  if (c == "List" && t.size() == 2) {
    PList l{pats_from(t[0]), std::nullopt};
    if (t[1].is_appl("Some", 1)) {
      l.tail = pattern_from_term(t[1][0]);
    } else {
      expect_appl(t[1], "None", 0);
    }
    return Pattern{std::move(l)};
  }
  if (c == "Tup" && t.size() == 1) return Pattern{PTuple{pats_from(t[0])}};
  if (c == "As" && t.size() == 2) return Pattern{PAs{expect_str(t[0]), pattern_from_term(t[1])}};
  if (c == "Gen" && t.size() == 2) return Pattern{PGeneric{pattern_from_term(t[0]), pattern_from_term(t[1])}};
  throw TermShapeError("unknown pattern form " + print_term(t).substr(0, 60));
}

Term to_term(const Strategy& s) {
  return std::visit(
      overloaded{
          [](const Id&) { return Term::appl("Id"); },
          [](const Fail&) { return Term::appl("Fail"); },
          [](const Match& m) { return Term::appl("Match", {to_term(m.pattern)}); },
          [](const Build& b) { return Term::appl("Build", {to_term(b.pattern)}); },
          [](const Seq& x) { return Term::appl("Seq", {to_term(*x.first), to_term(*x.second)}); },
          [](const LChoice& x) { return Term::appl("Choice", {to_term(*x.left), to_term(*x.right)}); },
          [](const Scope& x) { return Term::appl("Scope", {strs(x.vars), to_term(*x.body)}); },
          [](const Call& c) { return Term::appl("Call", {to_term(c.key), strats(c.sargs), pats(c.targs)}); },
          [](const AmbRef& a) { return Term::appl("AmbRef", {Term::string(a.name)}); },
          [](const CallPrim& p) { return Term::appl("Prim", {Term::string(p.name), pats(p.targs)}); },
          [](const All& a) { return Term::appl("All", {to_term(*a.body)}); },
          [](const CongApply& c) { return Term::appl("Cong", {to_term(c.ctor), strats(c.sargs)}); },
          [](const DefineDR& d) {
            return Term::appl("DefDR", {Term::string(d.rule), to_term(d.lhs), to_term(d.rhs)});
          },
          [](const UndefineDR& d) { return Term::appl("UndefDR", {Term::string(d.rule), to_term(d.key)}); },
          [](const ScopeDR& d) { return Term::appl("ScopeDR", {Term::string(d.rule), to_term(*d.body)}); },
          [](const auto&) -> Term { throw TermShapeError("sugar form has no core encoding"); },
      },
      s.node);
}

Strategy strategy_from_term(const Term& t) {
  if (!t.is_appl()) throw TermShapeError("strategy expected, got " + print_term(t).substr(0, 60));
  const auto& c = t.name();
  auto n = t.size();
  if (c == "Id" && n == 0) return Strategy{Id{}};
  if (c == "Fail" && n == 0) return Strategy{Fail{}};
  if (c == "Match" && n == 1) return Strategy{Match{pattern_from_term(t[0])}};
  if (c == "Build" && n == 1) return Strategy{Build{pattern_from_term(t[0])}};
  if (c == "Seq" && n == 2) return seq(strategy_from_term(t[0]), strategy_from_term(t[1]));
  if (c == "Choice" && n == 2) return lchoice(strategy_from_term(t[0]), strategy_from_term(t[1]));
  if (c == "Scope" && n == 2) return scope(strs_from(t[0]), strategy_from_term(t[1]));
  if (c == "Call" && n == 3) return call(strategy_key_from_term(t[0]), strats_from(t[1]), pats_from(t[2]));
  if (c == "AmbRef" && n == 1) return Strategy{AmbRef{expect_str(t[0])}};
  if (c == "Prim" && n == 2) return Strategy{CallPrim{expect_str(t[0]), pats_from(t[1])}};
  if (c == "All" && n == 1) return Strategy{All{strategy_from_term(t[0])}};
  if (c == "Cong" && n == 2) return Strategy{CongApply{constructor_key_from_term(t[0]), strats_from(t[1])}};
  if (c == "DefDR" && n == 3)
    return Strategy{DefineDR{expect_str(t[0]), pattern_from_term(t[1]), pattern_from_term(t[2])}};
  if (c == "UndefDR" && n == 2) return Strategy{UndefineDR{expect_str(t[0]), pattern_from_term(t[1])}};
  if (c == "ScopeDR" && n == 2) return Strategy{ScopeDR{expect_str(t[0]), strategy_from_term(t[1])}};
  throw TermShapeError("unknown strategy form " + print_term(t).substr(0, 60));
}

Term to_term(const OverlayDef& o) {
  return Term::appl("Overlay", {Term::string(o.name), strs(o.params), to_term(o.body)});
}

OverlayDef overlay_from_term(const Term& t) {
  expect_appl(t, "Overlay", 3);
  return {expect_str(t[0]), strs_from(t[1]), pattern_from_term(t[2])};
}

// ---------------------------------------------------------------------------
// Diagnostics rendering

namespace {

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& f, std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += f(xs[i]);
  }
  return out;
}

}  // namespace

std::string show(const Pattern& p) {
  return std::visit(
      overloaded{
          [](const PVar& v) { return v.name; },
          [](const PWild&) { return std::string("_"); },
          [](const PAppl& a) {
            return a.ctor + "(" + join(a.args, [](const Pattern& x) { return show(x); }) + ")";
          },
          [](const PInt& i) { return std::to_string(i.value); },
          [](const PStr& s) {
            std::string out;
            append_escaped(out, s.value);
            return out;
          },
          [](const PList& l) {
            std::string out = "[" + join(l.items, [](const Pattern& x) { return show(x); });
            if (l.tail) out += "|" + show(**l.tail);
            return out + "]";
          },
          [](const PTuple& t) { return "(" + join(t.items, [](const Pattern& x) { return show(x); }) + ")"; },
          [](const PAs& a) { return a.name + "@" + show(*a.pattern); },
          [](const PGeneric& g) { return show(*g.fun) + "#(" + show(*g.args) + ")"; },
          [](const PApply& a) { return "<" + show(*a.strategy) + "> " + show(*a.pattern); },
      },
      p.node);
}

std::string show(const Strategy& s) {
  auto sh = [](const Strategy& x) { return show(x); };
  auto shp = [](const Pattern& x) { return show(x); };
  return std::visit(
      overloaded{
          [](const Id&) { return std::string("id"); },
          [](const Fail&) { return std::string("fail"); },
          [](const Match& m) { return "?" + show(m.pattern); },
          [](const Build& b) { return "!" + show(b.pattern); },
          [](const Seq& x) { return "(" + show(*x.first) + "; " + show(*x.second) + ")"; },
          [](const LChoice& x) { return "(" + show(*x.left) + " <+ " + show(*x.right) + ")"; },
          [](const Scope& x) {
            return "{" + join(x.vars, [](const std::string& v) { return v; }) + ": " + show(*x.body) + "}";
          },
          [&](const Call& c) {
            if (c.sargs.empty() && c.targs.empty()) return c.key.name;
            return c.key.name + "(" + join(c.sargs, sh) + "|" + join(c.targs, shp) + ")";
          },
          [](const AmbRef& a) { return a.name; },
          [&](const CallPrim& p) {
            std::string out = "prim(\"" + p.name + "\"";
            for (const auto& a : p.targs) out += ", " + show(a);
            return out + ")";
          },
          [](const All& a) { return "all(" + show(*a.body) + ")"; },
          [&](const CongApply& c) { return c.ctor.name + "^(" + join(c.sargs, sh) + ")"; },
          [](const DefineDR& d) { return "rules(" + d.rule + ": " + show(d.lhs) + " -> " + show(d.rhs) + ")"; },
          [](const UndefineDR& d) { return "rules(" + d.rule + " :- " + show(d.key) + ")"; },
          [](const ScopeDR& d) { return "{| " + d.rule + ": " + show(*d.body) + " |}"; },
          [](const Where& w) { return "where(" + show(*w.body) + ")"; },
          [](const ApplyTo& a) { return "<" + show(*a.strategy) + "> " + show(a.pattern); },
          [](const BindTo& b) { return show(*b.strategy) + " => " + show(b.pattern); },
          [](const Lambda& l) {
            std::string out = "\\" + show(l.lhs) + " -> " + show(l.rhs);
            if (l.where) out += " where " + show(**l.where);
            return out + "\\";
          },
          [](const Proceed&) { return std::string("proceed"); },
      },
      s.node);
}

}  // namespace strata::syntax
