#include "strata/term.hpp"

#include <charconv>
#include <functional>

namespace strata {

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

bool ident_start(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}

bool ident_char(char c) {
  return ident_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '\'';
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

}  // namespace

Term Term::make(Node n) {
  std::size_t h = std::hash<int>{}(static_cast<int>(n.kind));
  h = mix(h, std::hash<std::int64_t>{}(n.value));
  h = mix(h, std::hash<std::string>{}(n.text));
  for (const auto& k : n.kids) h = mix(h, k.hash());
  n.hash = h;
  return Term(std::make_shared<const Node>(std::move(n)));
}

Term Term::appl(std::string ctor, std::vector<Term> children) {
  return make(Node{Kind::Appl, 0, std::move(ctor), std::move(children)});
}
Term Term::integer(std::int64_t value) { return make(Node{Kind::Int, value, {}, {}}); }
Term Term::string(std::string value) { return make(Node{Kind::Str, 0, std::move(value), {}}); }
Term Term::list(std::vector<Term> items) { return make(Node{Kind::List, 0, {}, std::move(items)}); }
Term Term::tuple(std::vector<Term> items) { return make(Node{Kind::Tuple, 0, {}, std::move(items)}); }

bool Term::is_appl(std::string_view ctor, std::size_t arity) const {
  return is_appl() && size() == arity && name() == ctor;
}

bool operator==(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.hash != y.hash || x.kind != y.kind || x.value != y.value || x.text != y.text ||
      x.kids.size() != y.kids.size())
    return false;
  for (std::size_t i = 0; i < x.kids.size(); ++i)
    if (x.kids[i] != y.kids[i]) return false;
  return true;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !ident_start(s[0])) return false;
  for (char c : s.substr(1))
    if (!ident_char(c)) return false;
  return true;
}

void append_escaped(std::string& out, std::string_view s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
}

namespace {

void print_items(std::string& out, const std::vector<Term>& items) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    print_term(out, items[i]);
  }
}

}  // namespace

void print_term(std::string& out, const Term& t) {
  switch (t.kind()) {
    case Term::Kind::Appl:
      out += t.name();
      out += '(';
      print_items(out, t.children());
      out += ')';
      break;
    case Term::Kind::Int: {
      char buf[24];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, t.int_value());
      out.append(buf, end);
      break;
    }
    case Term::Kind::Str:
      append_escaped(out, t.name());
      break;
    case Term::Kind::List:
      out += '[';
      print_items(out, t.children());
      out += ']';
      break;
    case Term::Kind::Tuple:
      out += '(';
      print_items(out, t.children());
      out += ')';
      break;
  }
}

std::string print_term(const Term& t) {
  std::string out;
  print_term(out, t);
  return out;
}

ParseError::ParseError(int line, int column, std::string expected, std::string context)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": expected " +
                         expected + (context.empty() ? "" : " (" + context + ")")),
      line_(line),
      column_(column),
      expected_(std::move(expected)) {}

namespace {

class TermParser {
 public:
  explicit TermParser(std::string_view text) : text_(text) {}

  Term parse_all() {
    Term t = parse();
    skip_ws();
    if (pos_ != text_.size()) fail("end of input");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& expected) const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(line, col, expected);
  }

  void skip_ws() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("'") + c + "'");
    ++pos_;
  }

  std::vector<Term> items(char close) {
    std::vector<Term> out;
    if (peek(close)) {
      ++pos_;
      return out;
    }
    for (;;) {
      out.push_back(parse());
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (pos_ < text_.size() && text_[pos_] == close) {
        ++pos_;
        return out;
      }
      fail(std::string("',' or '") + close + "'");
    }
  }

  Term parse() {
    if (++depth_ > kMaxDepth) fail("shallower nesting");
    Term result = parse_node();
    --depth_;
    return result;
  }

  Term parse_node() {
    skip_ws();
    if (pos_ >= text_.size()) fail("term");
    char c = text_[pos_];
    if (c == '[') {
      ++pos_;
      return Term::list(items(']'));
    }
    if (c == '(') {
      ++pos_;
      auto xs = items(')');
      if (xs.empty()) fail("term");
      return Term::tuple(std::move(xs));
    }
    if (c == '"') return Term::string(parse_string());
    if (c == '-' || (c >= '0' && c <= '9')) return Term::integer(parse_int());
    if (!ident_start(c)) fail("term");
    std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      return Term::appl(std::move(name), items(')'));
    }
    return Term::appl(std::move(name));
  }

  std::int64_t parse_int() {
    std::size_t start = pos_;
    if (text_[pos_] == '-') ++pos_;
    std::size_t digits = pos_;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
    if (pos_ == digits) fail("digit");
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc()) {
      pos_ = start;
      fail("integer in signed 64-bit range");
    }
    return v;
  }

  std::string parse_string() {
    ++pos_;
    std::string out;
    while (pos_ < text_.size()) {
      char c = text_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos_ >= text_.size()) break;
      char e = text_[pos_++];
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default:
          --pos_;
          fail("escape sequence");
      }
    }
    fail("closing '\"'");
  }

  static constexpr int kMaxDepth = 10000;
  std::string_view text_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

Term parse_term(std::string_view text) { return TermParser(text).parse_all(); }

std::string FreshNames::next(std::string_view prefix) {
  return std::string(prefix) + std::to_string(next_++);
}

const Term& expect_appl(const Term& t, std::string_view ctor, std::size_t arity) {
  if (!t.is_appl(ctor, arity))
    throw TermShapeError("expected " + std::string(ctor) + "/" + std::to_string(arity) +
                         ", got " + print_term(t).substr(0, 80));
  return t;
}

const std::string& expect_str(const Term& t) {
  if (!t.is_str()) throw TermShapeError("expected string, got " + print_term(t).substr(0, 80));
  return t.name();
}

std::int64_t expect_int(const Term& t) {
  if (!t.is_int()) throw TermShapeError("expected integer, got " + print_term(t).substr(0, 80));
  return t.int_value();
}

const std::vector<Term>& expect_list(const Term& t) {
  if (!t.is_list()) throw TermShapeError("expected list, got " + print_term(t).substr(0, 80));
  return t.children();
}

}  // namespace strata
