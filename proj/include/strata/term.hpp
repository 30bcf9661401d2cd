#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace strata {

/// Immutable tree value shared by source fragments, compiled units, manifests
/// and the build store. Copies are cheap (shared node).
class Term {
 public:
  enum class Kind : std::uint8_t { Appl, Int, Str, List, Tuple };

  static Term appl(std::string ctor, std::vector<Term> children = {});
  static Term integer(std::int64_t value);
  static Term string(std::string value);
  static Term list(std::vector<Term> items);
  static Term tuple(std::vector<Term> items);

  Kind kind() const { return node_->kind; }
  bool is_appl() const { return kind() == Kind::Appl; }
  bool is_int() const { return kind() == Kind::Int; }
  bool is_str() const { return kind() == Kind::Str; }
  bool is_list() const { return kind() == Kind::List; }
  bool is_tuple() const { return kind() == Kind::Tuple; }
  bool is_appl(std::string_view ctor, std::size_t arity) const;

  /// Constructor name of an Appl, or the value of a Str.
  const std::string& name() const { return node_->text; }
  std::int64_t int_value() const { return node_->value; }
  /// Appl children, or List/Tuple items.
  const std::vector<Term>& children() const { return node_->kids; }
  std::size_t size() const { return node_->kids.size(); }
  const Term& operator[](std::size_t i) const { return node_->kids.at(i); }

  std::size_t hash() const { return node_->hash; }

  friend bool operator==(const Term& a, const Term& b);
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }

 private:
  struct Node {
    Kind kind;
    std::int64_t value = 0;
    std::string text;
    std::vector<Term> kids;
    std::size_t hash = 0;
  };
  explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Term make(Node n);

  std::shared_ptr<const Node> node_;
};

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash(); }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, std::string expected, std::string context = {});
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& expected() const { return expected_; }

 private:
  int line_;
  int column_;
  std::string expected_;
};

/// Canonical text: no whitespace between tokens, so equal terms print to
/// equal bytes.
std::string print_term(const Term& t);
void print_term(std::string& out, const Term& t);

/// Parses the whole input (surrounding whitespace allowed).
Term parse_term(std::string_view text);

bool is_identifier(std::string_view s);
void append_escaped(std::string& out, std::string_view s);

/// Program-wide source of fresh names; single owner.
class FreshNames {
 public:
  explicit FreshNames(std::uint64_t start = 0) : next_(start) {}
  std::uint64_t peek() const { return next_; }
  std::string next(std::string_view prefix);

 private:
  std::uint64_t next_;
};

inline std::string fresh_name(FreshNames& counter, std::string_view prefix) {
  return counter.next(prefix);
}

// Small helpers for reading structured terms.
const Term& expect_appl(const Term& t, std::string_view ctor, std::size_t arity);
const std::string& expect_str(const Term& t);
std::int64_t expect_int(const Term& t);
const std::vector<Term>& expect_list(const Term& t);

class TermShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace strata
