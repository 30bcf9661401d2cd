#include "strata/runtime.hpp"

#include <pthread.h>

#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "strata/backend.hpp"

namespace strata::runtime {

using namespace syntax;

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

std::optional<std::string> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_param_name(const std::string& n) { return n.size() > 2 && n[0] == '$' && n[1] == 's'; }

void collect_calls(const Strategy& s, std::set<StrategyKey>& out) {
  std::visit(overloaded{
                 [&](const Seq& x) {
                   collect_calls(*x.first, out);
                   collect_calls(*x.second, out);
                 },
                 [&](const LChoice& x) {
                   collect_calls(*x.left, out);
                   collect_calls(*x.right, out);
                 },
                 [&](const Scope& x) { collect_calls(*x.body, out); },
                 [&](const Call& c) {
                   if (!is_param_name(c.key.name)) out.insert(c.key);
                   for (const auto& a : c.sargs) collect_calls(a, out);
                 },
                 [&](const All& a) { collect_calls(*a.body, out); },
                 [&](const CongApply& c) {
                   for (const auto& a : c.sargs) collect_calls(a, out);
                 },
                 [&](const ScopeDR& d) { collect_calls(*d.body, out); },
                 [](const auto&) {},
             },
             s.node);
}

StrategyKey original_of(const StrategyKey& k) {
  const std::string suffix(kOriginalSuffix);
  if (k.name.size() > suffix.size() && k.name.compare(k.name.size() - suffix.size(), suffix.size(), suffix) == 0)
    return {k.name.substr(0, k.name.size() - suffix.size()), k.sarity, k.tarity};
  return k;
}

}  // namespace

std::pair<StrategyKey, Strategy> parse_unit(std::string_view text) {
  Term t = parse_term(text);
  expect_appl(t, "Unit", 2);
  return {strategy_key_from_term(t[0]), strategy_from_term(t[1])};
}

Program load_program(const fs::path& out, const std::vector<fs::path>& libs) {
  auto manifest_bytes = slurp(out / std::string(backend::kManifestFile));
  if (!manifest_bytes) throw LoadError("no program manifest in " + out.string());
  backend::Manifest m;
  try {
    m = backend::manifest_from_term(parse_term(*manifest_bytes));
  } catch (const std::exception& e) {
    throw LoadError(std::string("malformed manifest: ") + e.what());
  }

  Program p;
  p.constructors = m.constructors;
  p.dyn_rules = m.dyn_rules;

  // Loads `file` and installs its body under `as` (differs for `$orig` keys).
  auto load = [&](const fs::path& file, const StrategyKey& expect, const StrategyKey& as) {
    auto bytes = slurp(file);
    if (!bytes) throw LoadError("MissingUnit: " + file.string());
    std::pair<StrategyKey, Strategy> u;
    try {
      u = parse_unit(*bytes);
    } catch (const std::exception& e) {
      throw LoadError("malformed unit " + file.string() + ": " + e.what());
    }
    if (u.first != expect) throw LoadError("unit " + file.string() + " defines " + u.first.text());
    p.units.insert_or_assign(as, std::move(u.second));
  };

  for (const auto& [key, file] : m.units) load(out / file, key, key);
  std::vector<fs::path> search;
  for (const auto& e : m.externals) {
    if (p.units.count(e.key)) continue;
    fs::path dir = e.dir;
    if (!fs::is_directory(dir)) throw LoadError("library directory missing: " + e.dir + " (for " + e.key.text() + ")");
    StrategyKey orig = original_of(e.key);
    load(dir / backend::unit_file_name(orig), orig, e.key);
    search.push_back(dir);
  }
  search.insert(search.end(), libs.begin(), libs.end());

  // Library units may call helpers of their own library that no manifest lists.
  std::vector<StrategyKey> todo;
  for (const auto& [k, _] : p.units) todo.push_back(k);
  while (!todo.empty()) {
    StrategyKey k = todo.back();
    todo.pop_back();
    std::set<StrategyKey> calls;
    collect_calls(p.units.at(k), calls);
    for (const auto& c : calls) {
      if (p.units.count(c)) continue;
      bool found = false;
      for (const auto& dir : search) {
        fs::path f = dir / backend::unit_file_name(c);
        if (fs::exists(f)) {
          load(f, c, c);
          found = true;
          break;
        }
      }
      if (!found) throw LoadError("dangling call to " + c.text() + " from " + k.text());
      todo.push_back(c);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Interpreter

namespace {

struct Frame;
using FramePtr = std::shared_ptr<Frame>;

struct Closure {
  const Strategy* body = nullptr;
  FramePtr env;
};

struct Frame {
  std::unordered_map<std::string, Term> vars;
  std::unordered_map<std::string, Closure> sparams;
};

struct DrEntry {
  Term key;
  Pattern rhs;
  std::map<std::string, Term> captured;
};

struct TrailEntry {
  FramePtr frame;
  std::string name;
  std::optional<Term> old;
};

constexpr std::size_t kBigStack = std::size_t{1} << 30;

/// Runs `fn` on a thread with a large stack so deep recursion in the
/// evaluator hits the logical depth limit before the native one.
void on_big_stack(const std::function<void()>& fn) {
  struct Job {
    const std::function<void()>* fn;
    std::exception_ptr error;
  } job{&fn, nullptr};
  pthread_attr_t attr;
  pthread_attr_init(&attr);
  pthread_attr_setstacksize(&attr, kBigStack);
  pthread_t th;
  auto entry = [](void* arg) -> void* {
    auto* j = static_cast<Job*>(arg);
    try {
      (*j->fn)();
    } catch (...) {
      j->error = std::current_exception();
    }
    return nullptr;
  };
  int rc = pthread_create(&th, &attr, entry, &job);
  pthread_attr_destroy(&attr);
  if (rc != 0) {
    fn();  // fall back to the current stack
    return;
  }
  pthread_join(th, nullptr);
  if (job.error) std::rethrow_exception(job.error);
}

std::string brief(const Term& t) {
  std::string s = print_term(t);
  return s.size() > 80 ? s.substr(0, 77) + "..." : s;
}

}  // namespace

struct Interpreter::Impl {
  const Program& program;
  Options opts;
  std::map<std::string, std::vector<DrEntry>> dr;  // newest last
  std::vector<TrailEntry> trail;
  FreshNames fresh;
  std::size_t depth = 0;
  /// Open choice points and matches; bindings need a trail only while one is.
  int marks = 0;

  Impl(const Program& p, Options o) : program(p), opts(o) {}

  // ---- bindings ----

  const Term* lookup(const Frame& f, const std::string& name) const {
    auto it = f.vars.find(name);
    return it == f.vars.end() ? nullptr : &it->second;
  }

  void set_var(const FramePtr& f, const std::string& name, std::optional<Term> value) {
    auto it = f->vars.find(name);
    if (marks > 0) {
      std::optional<Term> old;
      if (it != f->vars.end()) old = it->second;
      trail.push_back({f, name, std::move(old)});
    }
    if (value)
      f->vars.insert_or_assign(name, std::move(*value));
    else if (it != f->vars.end())
      f->vars.erase(it);
  }

  void undo(std::size_t mark) {
    while (trail.size() > mark) {
      auto& e = trail.back();
      if (e.old)
        e.frame->vars.insert_or_assign(e.name, std::move(*e.old));
      else
        e.frame->vars.erase(e.name);
      trail.pop_back();
    }
  }

  // ---- patterns ----

  bool match(const Pattern& p, const Term& t, const FramePtr& f) {
    return std::visit(
        overloaded{
            [&](const PVar& v) {
              if (const Term* b = lookup(*f, v.name)) return *b == t;
              set_var(f, v.name, t);
              return true;
            },
            [&](const PWild&) { return true; },
            [&](const PAppl& a) {
              if (!t.is_appl() || t.name() != a.ctor || t.size() != a.args.size()) return false;
              for (std::size_t i = 0; i < a.args.size(); ++i)
                if (!match(a.args[i], t[i], f)) return false;
              return true;
            },
            [&](const PInt& i) { return t.is_int() && t.int_value() == i.value; },
            [&](const PStr& s) { return t.is_str() && t.name() == s.value; },
            [&](const PList& l) {
              if (!t.is_list()) return false;
              const auto& items = t.children();
              if (items.size() < l.items.size() || (!l.tail && items.size() != l.items.size())) return false;
              for (std::size_t i = 0; i < l.items.size(); ++i)
                if (!match(l.items[i], items[i], f)) return false;
              if (!l.tail) return true;
              return match(**l.tail, Term::list({items.begin() + static_cast<std::ptrdiff_t>(l.items.size()), items.end()}), f);
            },
            [&](const PTuple& tp) {
              if (!t.is_tuple() || t.size() != tp.items.size()) return false;
              for (std::size_t i = 0; i < tp.items.size(); ++i)
                if (!match(tp.items[i], t[i], f)) return false;
              return true;
            },
            [&](const PAs& a) {
              if (!match(*a.pattern, t, f)) return false;
              if (const Term* b = lookup(*f, a.name)) return *b == t;
              set_var(f, a.name, t);
              return true;
            },
            [&](const PGeneric& g) {
              std::string ctor;
              if (t.is_appl()) ctor = t.name();
              else if (!t.is_tuple()) return false;
              return match(*g.fun, Term::string(ctor), f) && match(*g.args, Term::list(t.children()), f);
            },
            [&](const PApply&) -> bool { throw RuntimeError("sugar form in compiled code"); },
        },
        p.node);
  }

  bool match_atomic(const Pattern& p, const Term& t, const FramePtr& f) {
    std::size_t mark = trail.size();
    ++marks;
    bool ok = match(p, t, f);
    --marks;
    if (!ok) undo(mark);
    return ok;
  }

  Term build(const Pattern& p, const std::function<const Term*(const std::string&)>& var) {
    auto rec = [&](const Pattern& x) { return build(x, var); };
    return std::visit(
        overloaded{
            [&](const PVar& v) -> Term {
              if (const Term* b = var(v.name)) return *b;
              throw RuntimeError("build of unbound variable " + v.name);
            },
            [&](const PWild&) -> Term { throw RuntimeError("build of wildcard"); },
            [&](const PAppl& a) {
              std::vector<Term> kids;
              kids.reserve(a.args.size());
              for (const auto& c : a.args) kids.push_back(rec(c));
              return Term::appl(a.ctor, std::move(kids));
            },
            [&](const PInt& i) { return Term::integer(i.value); },
            [&](const PStr& s) { return Term::string(s.value); },
            [&](const PList& l) {
              std::vector<Term> items;
              for (const auto& c : l.items) items.push_back(rec(c));
              if (l.tail) {
                Term tail = rec(**l.tail);
                if (!tail.is_list()) throw RuntimeError("list tail is not a list: " + brief(tail));
                items.insert(items.end(), tail.children().begin(), tail.children().end());
              }
              return Term::list(std::move(items));
            },
            [&](const PTuple& tp) {
              std::vector<Term> items;
              for (const auto& c : tp.items) items.push_back(rec(c));
              return Term::tuple(std::move(items));
            },
            [&](const PAs& a) -> Term {
              if (const Term* b = var(a.name)) return *b;
              return rec(*a.pattern);
            },
            [&](const PGeneric& g) -> Term {
              Term fun = rec(*g.fun);
              Term args = rec(*g.args);
              if (!fun.is_str() || !args.is_list()) throw RuntimeError("malformed generic build");
              if (fun.name().empty()) return Term::tuple(args.children());
              if (!is_identifier(fun.name())) throw RuntimeError("not a constructor name: " + fun.name());
              return Term::appl(fun.name(), args.children());
            },
            [&](const PApply&) -> Term { throw RuntimeError("sugar form in compiled code"); },
        },
        p.node);
  }

  Term build_in(const Pattern& p, const Frame& f) {
    return build(p, [&](const std::string& n) { return lookup(f, n); });
  }

  // ---- strategies ----

  struct DepthGuard {
    Impl& impl;
    explicit DepthGuard(Impl& i) : impl(i) {
      if (++impl.depth > impl.opts.max_depth) {
        --impl.depth;
        throw RuntimeError("StackOverflow: more than " + std::to_string(impl.opts.max_depth) + " nested calls");
      }
    }
    ~DepthGuard() { --impl.depth; }
  };

  bool run_closure(const Closure& c, Term& t) {
    DepthGuard g(*this);
    return eval(*c.body, t, c.env);
  }

  Closure make_closure(const Strategy& s, const FramePtr& f) {
    // A bare parameter passed on is its own closure; avoids chains.
    if (const auto* c = std::get_if<Call>(&s.node))
      if (c->sargs.empty() && c->targs.empty())
        if (auto it = f->sparams.find(c->key.name); it != f->sparams.end()) return it->second;
    return Closure{&s, f};
  }

  bool call_unit(const StrategyKey& key, const Strategy& body, std::vector<Closure> sargs, std::vector<Term> targs,
                 Term& t) {
    DepthGuard g(*this);
    auto frame = std::make_shared<Frame>();
    for (std::size_t i = 0; i < sargs.size(); ++i) frame->sparams.emplace(backend::sparam_name(static_cast<int>(i)), std::move(sargs[i]));
    for (std::size_t i = 0; i < targs.size(); ++i) frame->vars.emplace(backend::tparam_name(static_cast<int>(i)), std::move(targs[i]));
    (void)key;
    return eval(body, t, frame);
  }

  bool eval(const Strategy& s, Term& t, const FramePtr& f) {
    return std::visit(
        overloaded{
            [&](const Id&) { return true; },
            [&](const Fail&) { return false; },
            [&](const Match& m) { return match_atomic(m.pattern, t, f); },
            [&](const Build& b) {
              t = build_in(b.pattern, *f);
              return true;
            },
            [&](const Seq& x) { return eval(*x.first, t, f) && eval(*x.second, t, f); },
            [&](const LChoice& x) {
              std::size_t mark = trail.size();
              Term saved = t;
              ++marks;
              bool ok = eval(*x.left, t, f);
              --marks;
              if (ok) return true;
              undo(mark);
              t = std::move(saved);
              return eval(*x.right, t, f);
            },
            [&](const Scope& x) {
              std::vector<std::optional<Term>> old;
              for (const auto& v : x.vars) {
                const Term* b = lookup(*f, v);
                old.push_back(b ? std::optional<Term>(*b) : std::nullopt);
                if (b) set_var(f, v, std::nullopt);
              }
              bool ok = eval(*x.body, t, f);
              for (std::size_t i = 0; i < x.vars.size(); ++i) {
                const Term* now = lookup(*f, x.vars[i]);
                if (now || old[i]) set_var(f, x.vars[i], old[i]);
              }
              return ok;
            },
            [&](const Call& c) { return eval_call(c, t, f); },
            [&](const AmbRef& a) -> bool { throw RuntimeError("unresolved reference " + a.name); },
            [&](const CallPrim& p) { return primitive(p, t, f); },
            [&](const All& a) {
              if (t.is_int() || t.is_str() || t.size() == 0) return true;
              std::vector<Term> kids = t.children();
              for (auto& k : kids)
                if (!eval(*a.body, k, f)) return false;
              t = rebuild(t, std::move(kids));
              return true;
            },
            [&](const CongApply& c) {
              if (!t.is_appl() || t.name() != c.ctor.name || t.size() != static_cast<std::size_t>(c.ctor.arity) ||
                  c.sargs.size() != t.size())
                return false;
              std::vector<Term> kids = t.children();
              for (std::size_t i = 0; i < kids.size(); ++i)
                if (!eval(c.sargs[i], kids[i], f)) return false;
              t = Term::appl(c.ctor.name, std::move(kids));
              return true;
            },
            [&](const DefineDR& d) {
              Term key = build_in(d.lhs, *f);
              std::vector<std::string> vars;
              pattern_vars(d.rhs, vars);
              std::map<std::string, Term> captured;
              for (const auto& v : vars)
                if (const Term* b = lookup(*f, v)) captured.emplace(v, *b);
              dr[d.rule].push_back({std::move(key), d.rhs, std::move(captured)});
              return true;
            },
            [&](const UndefineDR& d) {
              Term key = build_in(d.key, *f);
              auto& entries = dr[d.rule];
              std::erase_if(entries, [&](const DrEntry& e) { return e.key == key; });
              return true;
            },
            [&](const ScopeDR& d) {
              auto saved = dr[d.rule];
              bool ok;
              try {
                ok = eval(*d.body, t, f);
              } catch (...) {
                dr[d.rule] = std::move(saved);
                throw;
              }
              dr[d.rule] = std::move(saved);
              return ok;
            },
            [&](const auto&) -> bool { throw RuntimeError("sugar form in compiled code"); },
        },
        s.node);
  }

  static Term rebuild(const Term& like, std::vector<Term> kids) {
    if (like.is_appl()) return Term::appl(like.name(), std::move(kids));
    if (like.is_list()) return Term::list(std::move(kids));
    return Term::tuple(std::move(kids));
  }

  bool eval_call(const Call& c, Term& t, const FramePtr& f) {
    if (c.sargs.empty() && c.targs.empty()) {
      if (auto it = f->sparams.find(c.key.name); it != f->sparams.end()) return run_closure(it->second, t);
    }
    auto u = program.units.find(c.key);
    if (u == program.units.end()) throw RuntimeError("call to unknown strategy " + c.key.text());
    std::vector<Closure> sargs;
    sargs.reserve(c.sargs.size());
    for (const auto& a : c.sargs) sargs.push_back(make_closure(a, f));
    std::vector<Term> targs;
    targs.reserve(c.targs.size());
    for (const auto& a : c.targs) targs.push_back(build_in(a, *f));
    return call_unit(c.key, u->second, std::move(sargs), std::move(targs), t);
  }

  static std::pair<std::int64_t, std::int64_t> int_pair(const std::string& prim, const Term& t) {
    if (!t.is_tuple() || t.size() != 2 || !t[0].is_int() || !t[1].is_int())
      throw RuntimeError(prim + " expects a pair of integers, got " + brief(t));
    return {t[0].int_value(), t[1].int_value()};
  }

  bool primitive(const CallPrim& p, Term& t, const FramePtr& f) {
    const std::string& n = p.name;
    if (n == "addi" || n == "subti" || n == "muli") {
      auto [a, b] = int_pair(n, t);
      std::int64_t r;
      bool overflow = n == "addi" ? __builtin_add_overflow(a, b, &r)
                      : n == "subti" ? __builtin_sub_overflow(a, b, &r)
                                     : __builtin_mul_overflow(a, b, &r);
      if (overflow) throw RuntimeError(n + ": integer overflow on " + brief(t));
      t = Term::integer(r);
      return true;
    }
    if (n == "lti" || n == "gti" || n == "eqi") {
      auto [a, b] = int_pair(n, t);
      return n == "lti" ? a < b : n == "gti" ? a > b : a == b;
    }
    if (n == "new") {
      t = Term::string(fresh.next("v_"));
      return true;
    }
    if (n == "debug") {
      if (opts.debug) *opts.debug << print_term(t) << '\n';
      return true;
    }
    if (n == "dr-apply") {
      if (p.targs.size() != 1) throw RuntimeError("dr-apply expects the rule name");
      Term name = build_in(p.targs[0], *f);
      if (!name.is_str()) throw RuntimeError("dr-apply expects the rule name as a string");
      auto it = dr.find(name.name());
      if (it == dr.end()) return false;
      for (auto e = it->second.rbegin(); e != it->second.rend(); ++e) {
        if (e->key != t) continue;
        const auto& cap = e->captured;
        t = build(e->rhs, [&](const std::string& v) -> const Term* {
          auto c = cap.find(v);
          return c == cap.end() ? nullptr : &c->second;
        });
        return true;
      }
      return false;
    }
    throw RuntimeError("unknown primitive " + n);
  }
};

Interpreter::Interpreter(const Program& program, Options opts) : impl_(std::make_unique<Impl>(program, opts)) {}
Interpreter::~Interpreter() = default;

std::optional<Term> Interpreter::apply(const StrategyKey& key, const Term& subject, const std::vector<Strategy>& sargs,
                                       const std::vector<Term>& targs) {
  auto u = impl_->program.units.find(key);
  if (u == impl_->program.units.end()) throw RuntimeError("no strategy " + key.text());
  if (sargs.size() != static_cast<std::size_t>(key.sarity) || targs.size() != static_cast<std::size_t>(key.tarity))
    throw RuntimeError("argument count does not match " + key.text());
  std::optional<Term> result;
  on_big_stack([&] {
    auto top = std::make_shared<Frame>();
    std::vector<Closure> closures;
    for (const auto& s : sargs) closures.push_back(Closure{&s, top});
    Term t = subject;
    impl_->trail.clear();
    impl_->marks = 0;
    if (impl_->call_unit(key, u->second, std::move(closures), targs, t)) result = std::move(t);
    impl_->trail.clear();
  });
  return result;
}

std::optional<Term> Interpreter::eval(const Strategy& s, const Term& subject) {
  std::optional<Term> result;
  on_big_stack([&] {
    auto top = std::make_shared<Frame>();
    Term t = subject;
    impl_->trail.clear();
    impl_->marks = 0;
    if (impl_->eval(s, t, top)) result = std::move(t);
    impl_->trail.clear();
  });
  return result;
}

std::vector<std::pair<Term, Term>> Interpreter::dynamic_rule(const std::string& name) const {
  std::vector<std::pair<Term, Term>> out;
  auto it = impl_->dr.find(name);
  if (it == impl_->dr.end()) return out;
  for (auto e = it->second.rbegin(); e != it->second.rend(); ++e) {
    const auto& cap = e->captured;
    out.emplace_back(e->key, impl_->build(e->rhs, [&](const std::string& v) -> const Term* {
      auto c = cap.find(v);
      return c == cap.end() ? nullptr : &c->second;
    }));
  }
  return out;
}

}  // namespace strata::runtime
