#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "strata/syntax.hpp"
#include "strata/term.hpp"

namespace strata::runtime {

namespace fs = std::filesystem;
using syntax::ConstructorKey;
using syntax::Strategy;
using syntax::StrategyKey;

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Distinct from strategy failure: something went wrong while evaluating.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Program {
  std::map<StrategyKey, Strategy> units;
  std::set<ConstructorKey> constructors;
  std::set<std::string> dyn_rules;
};

/// Reads `<out>/program.manifest`, its units, the library units it names and
/// any library helper they call (looked up in `libs`). Checks call closure.
Program load_program(const fs::path& out, const std::vector<fs::path>& libs = {});

/// Parses one unit file; returns its key and body.
std::pair<StrategyKey, Strategy> parse_unit(std::string_view text);

struct Options {
  /// Nested strategy calls before StackOverflow.
  std::size_t max_depth = 100000;
  std::ostream* debug = nullptr;
};

/// One execution state over an immutable program: bindings, the dynamic-rule
/// store and the fresh-name counter.
class Interpreter {
 public:
  explicit Interpreter(const Program& program, Options opts = {});
  ~Interpreter();
  Interpreter(const Interpreter&) = delete;
  Interpreter& operator=(const Interpreter&) = delete;

  /// nullopt is strategy failure. `sargs` are closed strategies evaluated in
  /// an empty environment.
  std::optional<Term> apply(const StrategyKey& key, const Term& subject, const std::vector<Strategy>& sargs = {},
                            const std::vector<Term>& targs = {});

  /// Evaluates a closed core strategy against the program.
  std::optional<Term> eval(const Strategy& s, const Term& subject);

  /// Current entries of a dynamic rule, newest first.
  std::vector<std::pair<Term, Term>> dynamic_rule(const std::string& name) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace strata::runtime
