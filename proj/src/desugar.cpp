#include <algorithm>

#include "strata/syntax.hpp"

namespace strata::syntax {

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

Strategy seq_chain(std::vector<Strategy> parts) {
  if (parts.empty()) return Strategy{Id{}};
  Strategy out = std::move(parts.back());
  for (std::size_t i = parts.size() - 1; i-- > 0;) out = seq(std::move(parts[i]), std::move(out));
  return out;
}

/// Pattern variables occurring outside any lambda in a sugared strategy.
void outer_vars(const Strategy& s, std::vector<std::string>& out);

void outer_pattern_vars(const Pattern& p, std::vector<std::string>& out) {
  std::visit(overloaded{
                 [&](const PApply& a) {
                   outer_vars(*a.strategy, out);
                   outer_pattern_vars(*a.pattern, out);
                 },
                 [&](const PAppl& a) {
                   for (const auto& c : a.args) outer_pattern_vars(c, out);
                 },
                 [&](const PList& l) {
                   for (const auto& c : l.items) outer_pattern_vars(c, out);
                   if (l.tail) outer_pattern_vars(**l.tail, out);
                 },
                 [&](const PTuple& t) {
                   for (const auto& c : t.items) outer_pattern_vars(c, out);
                 },
                 [&](const PAs& a) {
                   out.push_back(a.name);
                   outer_pattern_vars(*a.pattern, out);
                 },
                 [&](const PGeneric& g) {
                   outer_pattern_vars(*g.fun, out);
                   outer_pattern_vars(*g.args, out);
                 },
                 [&](const PVar& v) { out.push_back(v.name); },
                 [](const auto&) {},
             },
             p.node);
}

void outer_vars(const Strategy& s, std::vector<std::string>& out) {
  std::visit(overloaded{
                 [&](const Match& m) { outer_pattern_vars(m.pattern, out); },
                 [&](const Build& b) { outer_pattern_vars(b.pattern, out); },
                 [&](const Seq& x) {
                   outer_vars(*x.first, out);
                   outer_vars(*x.second, out);
                 },
                 [&](const LChoice& x) {
                   outer_vars(*x.left, out);
                   outer_vars(*x.right, out);
                 },
                 [&](const Scope& x) { outer_vars(*x.body, out); },
                 [&](const Call& c) {
                   for (const auto& a : c.sargs) outer_vars(a, out);
                   for (const auto& a : c.targs) outer_pattern_vars(a, out);
                 },
                 [&](const CallPrim& p) {
                   for (const auto& a : p.targs) outer_pattern_vars(a, out);
                 },
                 [&](const All& a) { outer_vars(*a.body, out); },
                 [&](const CongApply& c) {
                   for (const auto& a : c.sargs) outer_vars(a, out);
                 },
                 [&](const DefineDR& d) {
                   outer_pattern_vars(d.lhs, out);
                   outer_pattern_vars(d.rhs, out);
                 },
                 [&](const UndefineDR& d) { outer_pattern_vars(d.key, out); },
                 [&](const ScopeDR& d) { outer_vars(*d.body, out); },
                 [&](const Where& w) { outer_vars(*w.body, out); },
                 [&](const ApplyTo& a) {
                   outer_vars(*a.strategy, out);
                   outer_pattern_vars(a.pattern, out);
                 },
                 [&](const BindTo& b) {
                   outer_vars(*b.strategy, out);
                   outer_pattern_vars(b.pattern, out);
                 },
                 [](const auto&) {},
             },
             s.node);
}

class Desugarer {
 public:
  Desugarer(const StrategyKey& key, const std::vector<std::string>& sparams,
            const std::vector<std::string>& tparams, Modifier modifier, FreshNames& fresh)
      : key_(key),
        sparam_list_(sparams),
        tparam_list_(tparams),
        sparams_(sparams.begin(), sparams.end()),
        tparams_(tparams.begin(), tparams.end()),
        modifier_(modifier),
        fresh_(fresh) {
    std::set<std::string> seen;
    for (const auto& p : sparams)
      if (!seen.insert(p).second) throw DesugarError("duplicate parameter '" + p + "' in " + key.text());
    for (const auto& p : tparams)
      if (!seen.insert(p).second) throw DesugarError("duplicate parameter '" + p + "' in " + key.text());
  }

  void note_outer(const std::vector<std::string>& vars) { outer_.insert(vars.begin(), vars.end()); }

  Strategy strategy(const Strategy& s) {
    return std::visit(
        overloaded{
            [&](const Id&) { return s; },
            [&](const Fail&) { return s; },
            [&](const Match& m) {
              check_apply_free(m.pattern, "match pattern");
              return s;
            },
            [&](const Build& b) { return build(b.pattern); },
            [&](const Seq& x) { return seq(strategy(*x.first), strategy(*x.second)); },
            [&](const LChoice& x) { return lchoice(strategy(*x.left), strategy(*x.right)); },
            [&](const Scope& x) { return scope(x.vars, strategy(*x.body)); },
            [&](const Call& c) {
              if (sparams_.count(c.key.name) && (!c.sargs.empty() || !c.targs.empty()))
                throw DesugarError("strategy parameter '" + c.key.name + "' called with arguments in " +
                                   key_.text());
              std::vector<Strategy> sargs;
              for (const auto& a : c.sargs) sargs.push_back(strategy(a));
              std::vector<Strategy> pre;
              std::vector<std::string> lifted;
              std::vector<Pattern> targs;
              for (const auto& a : c.targs) targs.push_back(lift(a, pre, lifted));
              return with_lifts(std::move(pre), std::move(lifted),
                                call(c.key, std::move(sargs), std::move(targs)));
            },
            [&](const AmbRef& a) {
              if (sparams_.count(a.name)) return call({a.name, 0, 0});
              return s;
            },
            [&](const CallPrim& p) {
              std::vector<Strategy> pre;
              std::vector<std::string> lifted;
              std::vector<Pattern> targs;
              for (const auto& a : p.targs) targs.push_back(lift(a, pre, lifted));
              return with_lifts(std::move(pre), std::move(lifted), Strategy{CallPrim{p.name, std::move(targs)}});
            },
            [&](const All& a) { return Strategy{All{strategy(*a.body)}}; },
            [&](const CongApply& c) {
              std::vector<Strategy> sargs;
              for (const auto& a : c.sargs) sargs.push_back(strategy(a));
              return Strategy{CongApply{c.ctor, std::move(sargs)}};
            },
            [&](const DefineDR& d) {
              check_apply_free(d.lhs, "dynamic rule");
              check_apply_free(d.rhs, "dynamic rule");
              return s;
            },
            [&](const UndefineDR& d) {
              check_apply_free(d.key, "dynamic rule");
              return s;
            },
            [&](const ScopeDR& d) { return Strategy{ScopeDR{d.rule, strategy(*d.body)}}; },
            [&](const Where& w) { return where_core(strategy(*w.body)); },
            [&](const ApplyTo& a) {
              std::vector<Strategy> pre;
              std::vector<std::string> lifted;
              Pattern p = lift(a.pattern, pre, lifted);
              pre.push_back(Strategy{Build{std::move(p)}});
              pre.push_back(strategy(*a.strategy));
              return with_lifts({}, std::move(lifted), seq_chain(std::move(pre)));
            },
            [&](const BindTo& b) {
              check_apply_free(b.pattern, "match pattern");
              return seq(strategy(*b.strategy), Strategy{Match{b.pattern}});
            },
            [&](const Lambda& l) {
              Strategy body = rule_body(l.lhs, l.rhs, l.where ? &**l.where : nullptr);
              std::vector<std::string> local;
              for (auto& v : free_vars(body))
                if (!tparams_.count(v) && !outer_.count(v)) local.push_back(v);
              return local.empty() ? body : scope(std::move(local), std::move(body));
            },
            [&](const Proceed&) {
              if (modifier_ != Modifier::Extend)
                throw DesugarError("'proceed' outside an extend definition in " + key_.text());
              std::vector<Strategy> sargs;
              for (const auto& p : sparam_list_) sargs.push_back(call({p, 0, 0}));
              std::vector<Pattern> targs;
              for (const auto& p : tparam_list_) targs.push_back(pvar(p));
              return call({key_.name + std::string(kOriginalSuffix), key_.sarity, key_.tarity}, std::move(sargs),
                          std::move(targs));
            },
        },
        s.node);
  }

  /// `?lhs; where(s); !rhs` with nested applications lifted before the build.
  Strategy rule_body(const Pattern& lhs, const Pattern& rhs, const Strategy* where) {
    check_apply_free(lhs, "match pattern");
    std::vector<Strategy> parts;
    parts.push_back(Strategy{Match{lhs}});
    if (where) parts.push_back(where_core(strategy(*where)));
    std::vector<std::string> lifted;
    if (const auto* root = std::get_if<PApply>(&rhs.node)) {
      Pattern p = lift(*root->pattern, parts, lifted);
      parts.push_back(Strategy{Build{std::move(p)}});
      parts.push_back(strategy(*root->strategy));
    } else {
      Pattern p = lift(rhs, parts, lifted);
      parts.push_back(Strategy{Build{std::move(p)}});
    }
    return seq_chain(std::move(parts));
  }

  Strategy close_over(Strategy body) {
    std::vector<std::string> vars;
    for (auto& v : free_vars(body))
      if (!tparams_.count(v)) vars.push_back(v);
    return vars.empty() ? body : scope(std::move(vars), std::move(body));
  }

 private:
  Strategy where_core(Strategy body) {
    std::string w = fresh_.next("$w");
    return scope({w}, seq(Strategy{Match{pvar(w)}}, seq(std::move(body), Strategy{Build{pvar(w)}})));
  }

  Strategy build(const Pattern& p) {
    std::vector<Strategy> pre;
    std::vector<std::string> lifted;
    Pattern q = lift(p, pre, lifted);
    return with_lifts(std::move(pre), std::move(lifted), Strategy{Build{std::move(q)}});
  }

  Strategy with_lifts(std::vector<Strategy> pre, std::vector<std::string> lifted, Strategy last) {
    if (pre.empty() && lifted.empty()) return last;
    pre.push_back(std::move(last));
    Strategy body = seq_chain(std::move(pre));
    return lifted.empty() ? body : scope(std::move(lifted), std::move(body));
  }

  /// Replaces each nested `<s> p` by a fresh variable bound beforehand via
  /// `where(<s> p => v)`; innermost applications are lifted first.
  Pattern lift(const Pattern& p, std::vector<Strategy>& pre, std::vector<std::string>& lifted) {
    return std::visit(
        overloaded{
            [&](const PApply& a) {
              Pattern inner = lift(*a.pattern, pre, lifted);
              std::string v = fresh_.next("$v");
              lifted.push_back(v);
              Strategy applied = seq(seq(Strategy{Build{std::move(inner)}}, strategy(*a.strategy)),
                                     Strategy{Match{pvar(v)}});
              pre.push_back(where_core(std::move(applied)));
              return pvar(v);
            },
            [&](const PAppl& a) {
              std::vector<Pattern> args;
              for (const auto& c : a.args) args.push_back(lift(c, pre, lifted));
              return pappl(a.ctor, std::move(args));
            },
            [&](const PList& l) {
              PList out;
              for (const auto& c : l.items) out.items.push_back(lift(c, pre, lifted));
              if (l.tail) out.tail = lift(**l.tail, pre, lifted);
              return Pattern{std::move(out)};
            },
            [&](const PTuple& t) {
              PTuple out;
              for (const auto& c : t.items) out.items.push_back(lift(c, pre, lifted));
              return Pattern{std::move(out)};
            },
            [&](const PAs& a) { return Pattern{PAs{a.name, lift(*a.pattern, pre, lifted)}}; },
            [&](const PGeneric& g) {
              Pattern f = lift(*g.fun, pre, lifted);
              return Pattern{PGeneric{std::move(f), lift(*g.args, pre, lifted)}};
            },
            [&](const auto&) { return p; },
        },
        p.node);
  }

  void check_apply_free(const Pattern& p, std::string_view where) const {
    if (!is_core(p))
      throw DesugarError("strategy application not allowed in " + std::string(where) + " in " + key_.text());
  }

  StrategyKey key_;
  std::vector<std::string> sparam_list_;
  std::vector<std::string> tparam_list_;
  std::set<std::string> sparams_;
  std::set<std::string> tparams_;
  std::set<std::string> outer_;
  Modifier modifier_;
  FreshNames& fresh_;
};

}  // namespace

std::variant<CoreDef, OverlayDef> desugar_to_core(const Def& d, FreshNames& fresh) {
  return std::visit(
      overloaded{
          [](const SigDef&) -> std::variant<CoreDef, OverlayDef> {
            throw DesugarError("signature has no core form");
          },
          [](const OverlayDef& o) -> std::variant<CoreDef, OverlayDef> {
            std::set<std::string> seen;
            for (const auto& p : o.params)
              if (!seen.insert(p).second)
                throw DesugarError("duplicate parameter '" + p + "' in overlay " + o.key().text());
            if (!is_core(o.body)) throw DesugarError("strategy application in overlay " + o.key().text());
            return o;
          },
          [&](const StrategyDef& s) -> std::variant<CoreDef, OverlayDef> {
            Desugarer ds(s.key, s.sparams, s.tparams, s.modifier, fresh);
            std::vector<std::string> outer;
            outer_vars(s.body, outer);
            ds.note_outer(outer);
            return CoreDef{s.key, s.sparams, s.tparams, ds.close_over(ds.strategy(s.body)), s.modifier};
          },
          [&](const RuleDef& r) -> std::variant<CoreDef, OverlayDef> {
            Desugarer ds(r.key, r.sparams, r.tparams, r.modifier, fresh);
            std::vector<std::string> outer;
            outer_pattern_vars(r.lhs, outer);
            outer_pattern_vars(r.rhs, outer);
            if (r.where) outer_vars(*r.where, outer);
            ds.note_outer(outer);
            Strategy body = ds.rule_body(r.lhs, r.rhs, r.where ? &*r.where : nullptr);
            return CoreDef{r.key, r.sparams, r.tparams, ds.close_over(std::move(body)), r.modifier};
          },
      },
      d);
}

}  // namespace strata::syntax
