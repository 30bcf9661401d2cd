#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "strata/term.hpp"

namespace strata::syntax {

/// Path-like module name, e.g. `desugar/core`; maps to `<id>.str`.
using ModuleId = std::string;
bool is_module_id(std::string_view s);

struct StrategyKey {
  std::string name;
  int sarity = 0;
  int tarity = 0;

  /// `name/s-t`
  std::string text() const;
  auto operator<=>(const StrategyKey&) const = default;
};

struct ConstructorKey {
  std::string name;
  int arity = 0;

  /// `name/n`
  std::string text() const;
  auto operator<=>(const ConstructorKey&) const = default;
};

/// Immutable shared box giving recursive variants value semantics.
template <class T>
class Rc {
 public:
  Rc(T value) : ptr_(std::make_shared<const T>(std::move(value))) {}
  const T& operator*() const { return *ptr_; }
  const T* operator->() const { return ptr_.get(); }
  const T& get() const { return *ptr_; }
  friend bool operator==(const Rc& a, const Rc& b) { return a.ptr_ == b.ptr_ || *a.ptr_ == *b.ptr_; }

 private:
  std::shared_ptr<const T> ptr_;
};

struct Pattern;
struct Strategy;

struct PVar {
  std::string name;
  bool operator==(const PVar&) const = default;
};
struct PWild {
  bool operator==(const PWild&) const = default;
};
struct PAppl {
  std::string ctor;
  std::vector<Pattern> args;
  bool operator==(const PAppl&) const;
};
struct PInt {
  std::int64_t value;
  bool operator==(const PInt&) const = default;
};
struct PStr {
  std::string value;
  bool operator==(const PStr&) const = default;
};
struct PList {
  std::vector<Pattern> items;
  std::optional<Rc<Pattern>> tail;
  bool operator==(const PList&) const;
};
struct PTuple {
  std::vector<Pattern> items;
  bool operator==(const PTuple&) const;
};
/// `x@p`
struct PAs {
  std::string name;
  Rc<Pattern> pattern;
  bool operator==(const PAs&) const;
};
/// `f#(ts)`: `fun` is the constructor name as a string, `args` the child list.
struct PGeneric {
  Rc<Pattern> fun;
  Rc<Pattern> args;
  bool operator==(const PGeneric&) const;
};
/// `<s> p` inside a build. Sugar; never present after desugaring.
struct PApply {
  Rc<Strategy> strategy;
  Rc<Pattern> pattern;
  bool operator==(const PApply&) const;
};

struct Pattern {
  std::variant<PVar, PWild, PAppl, PInt, PStr, PList, PTuple, PAs, PGeneric, PApply> node;
  bool operator==(const Pattern&) const;
};

// Core strategy forms.
struct Id {
  bool operator==(const Id&) const = default;
};
struct Fail {
  bool operator==(const Fail&) const = default;
};
struct Match {
  Pattern pattern;
  bool operator==(const Match&) const = default;
};
struct Build {
  Pattern pattern;
  bool operator==(const Build&) const = default;
};
struct Seq {
  Rc<Strategy> first, second;
  bool operator==(const Seq&) const = default;
};
struct LChoice {
  Rc<Strategy> left, right;
  bool operator==(const LChoice&) const = default;
};
struct Scope {
  std::vector<std::string> vars;
  Rc<Strategy> body;
  bool operator==(const Scope&) const = default;
};
struct Call {
  StrategyKey key;
  std::vector<Strategy> sargs;
  std::vector<Pattern> targs;
  bool operator==(const Call&) const;
};
/// Bare name in strategy-argument position, arity not yet known.
struct AmbRef {
  std::string name;
  bool operator==(const AmbRef&) const = default;
};
struct CallPrim {
  std::string name;
  std::vector<Pattern> targs;
  bool operator==(const CallPrim&) const = default;
};
struct All {
  Rc<Strategy> body;
  bool operator==(const All&) const = default;
};
struct CongApply {
  ConstructorKey ctor;
  std::vector<Strategy> sargs;
  bool operator==(const CongApply&) const;
};
struct DefineDR {
  std::string rule;
  Pattern lhs;
  Pattern rhs;
  bool operator==(const DefineDR&) const = default;
};
struct UndefineDR {
  std::string rule;
  Pattern key;
  bool operator==(const UndefineDR&) const = default;
};
struct ScopeDR {
  std::string rule;
  Rc<Strategy> body;
  bool operator==(const ScopeDR&) const = default;
};

// Sugar forms, eliminated by desugar_to_core.
struct Where {
  Rc<Strategy> body;
  bool operator==(const Where&) const = default;
};
/// `<s> p`
struct ApplyTo {
  Rc<Strategy> strategy;
  Pattern pattern;
  bool operator==(const ApplyTo&) const = default;
};
/// `s => p`
struct BindTo {
  Rc<Strategy> strategy;
  Pattern pattern;
  bool operator==(const BindTo&) const = default;
};
/// `\p1 -> p2 where s\`
struct Lambda {
  Pattern lhs;
  Pattern rhs;
  std::optional<Rc<Strategy>> where;
  bool operator==(const Lambda&) const = default;
};
struct Proceed {
  bool operator==(const Proceed&) const = default;
};

struct Strategy {
  std::variant<Id, Fail, Match, Build, Seq, LChoice, Scope, Call, AmbRef, CallPrim, All, CongApply,
               DefineDR, UndefineDR, ScopeDR, Where, ApplyTo, BindTo, Lambda, Proceed>
      node;
  bool operator==(const Strategy&) const;
};

// Convenience constructors.
Pattern pvar(std::string name);
Pattern pappl(std::string ctor, std::vector<Pattern> args = {});
Strategy seq(Strategy a, Strategy b);
Strategy lchoice(Strategy a, Strategy b);
Strategy scope(std::vector<std::string> vars, Strategy body);
Strategy call(StrategyKey key, std::vector<Strategy> sargs = {}, std::vector<Pattern> targs = {});

enum class Modifier { Plain, Extend, Override };
std::string_view modifier_name(Modifier m);
Modifier modifier_from_name(std::string_view s);

struct SigDef {
  std::vector<ConstructorKey> constructors;
  bool operator==(const SigDef&) const = default;
};
struct OverlayDef {
  std::string name;
  std::vector<std::string> params;
  Pattern body;
  ConstructorKey key() const { return {name, static_cast<int>(params.size())}; }
  bool operator==(const OverlayDef&) const = default;
};
struct StrategyDef {
  StrategyKey key;
  std::vector<std::string> sparams;
  std::vector<std::string> tparams;
  Strategy body;
  Modifier modifier = Modifier::Plain;
  bool operator==(const StrategyDef&) const = default;
};
struct RuleDef {
  StrategyKey key;
  std::vector<std::string> sparams;
  std::vector<std::string> tparams;
  Pattern lhs;
  Pattern rhs;
  std::optional<Strategy> where;
  Modifier modifier = Modifier::Plain;
  bool operator==(const RuleDef&) const = default;
};
using Def = std::variant<SigDef, OverlayDef, StrategyDef, RuleDef>;

/// Which section grammar a definition's text is parsed with.
enum class DefKind { Signature, Overlay, Strategy };
std::string_view def_kind_name(DefKind k);
DefKind def_kind_from_name(std::string_view s);
DefKind def_kind(const Def& d);

/// Identity of a definition among its module's units: strategy key text,
/// overlay constructor key text, or `signature`.
std::string def_name(const Def& d);

struct ModuleAST {
  ModuleId id;
  std::vector<ModuleId> imports;
  std::vector<Def> defs;
  /// Exact source text of each def, parallel to `defs`.
  std::vector<std::string> def_texts;
  std::vector<std::string> warnings;
};

struct DefUnit {
  ModuleId module;
  std::string name;
  int index = 0;
  DefKind kind = DefKind::Strategy;
  std::string text;
  Def def;
};

struct SplitModule {
  std::vector<ModuleId> imports;
  std::vector<DefUnit> units;
};

/// Throws ParseError. No error recovery: any error rejects the whole module.
ModuleAST parse_module(std::string_view text, const ModuleId& expected_id);

/// Parses one definition in isolation, as sliced out by split_module.
Def parse_definition(std::string_view text, DefKind kind, std::vector<std::string>* warnings = nullptr);

/// Strategy-expression and pattern entry points (used by tests and tools).
Strategy parse_strategy(std::string_view text);
Pattern parse_pattern(std::string_view text);

SplitModule split_module(const ModuleAST& m);

class DesugarError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Desugared strategy or rule definition.
struct CoreDef {
  StrategyKey key;
  std::vector<std::string> sparams;
  std::vector<std::string> tparams;
  Strategy body;
  Modifier modifier = Modifier::Plain;
  bool operator==(const CoreDef&) const = default;
};

/// Reserved prefix for compiler-generated variables; not writable in source.
inline constexpr char kGeneratedPrefix = '$';
/// Suffix of the key that `proceed` calls in an Extend definition.
inline constexpr std::string_view kOriginalSuffix = "$orig";

/// Strategy/Rule defs become CoreDef; OverlayDef passes through. Throws
/// DesugarError on duplicate parameters or misplaced `proceed`.
std::variant<CoreDef, OverlayDef> desugar_to_core(const Def& d, FreshNames& fresh);

bool is_core(const Strategy& s);
bool is_core(const Pattern& p);

struct UsageInfo {
  std::set<StrategyKey> used_strs;
  std::set<ConstructorKey> used_cons;
  std::set<std::string> amb_sites;
  std::set<std::string> uses_dr;
  /// Names with a `rules(N: ...)` definition site.
  std::set<std::string> defines_dr;
  /// Number of AmbRef occurrences (not distinct names).
  int amb_uses = 0;
};

/// Calls to `bound_sparams` and compiler-generated names are not recorded.
UsageInfo collect_usage(const Strategy& core, const std::set<std::string>& bound_sparams = {});
void collect_pattern_usage(const Pattern& p, UsageInfo& out);

/// Variables of a pattern, first-occurrence order.
void pattern_vars(const Pattern& p, std::vector<std::string>& out);
/// Free variables of a core strategy (not declared by an inner Scope),
/// first-occurrence order.
std::vector<std::string> free_vars(const Strategy& s);

// Canonical term encodings for core forms.
Term to_term(const Pattern& p);
Term to_term(const Strategy& s);
Term to_term(const StrategyKey& k);
Term to_term(const ConstructorKey& k);
Term to_term(const OverlayDef& o);
Pattern pattern_from_term(const Term& t);
Strategy strategy_from_term(const Term& t);
StrategyKey strategy_key_from_term(const Term& t);
ConstructorKey constructor_key_from_term(const Term& t);
OverlayDef overlay_from_term(const Term& t);

/// Human-readable rendering of core forms for diagnostics.
std::string show(const Pattern& p);
std::string show(const Strategy& s);

}  // namespace strata::syntax
