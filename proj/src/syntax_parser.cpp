#include <array>
#include <charconv>
#include <set>

#include "strata/syntax.hpp"

namespace strata::syntax {

namespace {

enum class Tok { Ident, Int, Str, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t value = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  int line = 1;
  int column = 1;
};

bool ident_start(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}
bool alnum(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

constexpr std::array<std::string_view, 6> kMultiPunct = {"<+", "=>", "->", "{|", "|}", ":-"};
constexpr std::string_view kSinglePunct = "()[]{},;|:=?!<>\\@#/.+";

const std::set<std::string, std::less<>> kKeywords = {
    "module", "imports", "signature", "constructors", "overlays", "strategies", "rules",
    "where",  "extend",  "override",  "id",           "fail",     "all",        "prim",
    "proceed"};

const std::set<std::string, std::less<>> kSectionKeywords = {
    "imports", "signature", "constructors", "overlays", "strategies", "rules"};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_trivia();
      Token t;
      t.begin = pos_;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        t.end = pos_;
        out.push_back(std::move(t));
        return out;
      }
      char c = src_[pos_];
      if (ident_start(c)) {
        std::size_t start = pos_;
        advance();
        while (pos_ < src_.size()) {
          char d = src_[pos_];
          if (alnum(d) || d == '\'') {
            advance();
          } else if (d == '-' && pos_ + 1 < src_.size() && alnum(src_[pos_ + 1])) {
            advance();
          } else {
            break;
          }
        }
        t.kind = Tok::Ident;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else if (is_digit(c) || (c == '-' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
        std::size_t start = pos_;
        advance();
        while (pos_ < src_.size() && is_digit(src_[pos_])) advance();
        t.kind = Tok::Int;
        t.text = std::string(src_.substr(start, pos_ - start));
        auto [p, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, t.value);
        if (ec != std::errc()) throw ParseError(t.line, t.column, "integer in signed 64-bit range");
      } else if (c == '"') {
        t.kind = Tok::Str;
        t.text = lex_string(t);
      } else {
        t.kind = Tok::Punct;
        bool matched = false;
        for (auto m : kMultiPunct) {
          if (src_.substr(pos_, m.size()) == m) {
            t.text = std::string(m);
            for (std::size_t i = 0; i < m.size(); ++i) advance();
            matched = true;
            break;
          }
        }
        if (!matched) {
          if (kSinglePunct.find(c) == std::string_view::npos)
            throw ParseError(t.line, t.column, "token", std::string("unexpected character '") + c + "'");
          t.text = std::string(1, c);
          advance();
        }
      }
      t.end = pos_;
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else if (src_.substr(pos_, 2) == "//") {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (src_.substr(pos_, 2) == "/*") {
        int line = line_, col = col_;
        advance();
        advance();
        while (pos_ < src_.size() && src_.substr(pos_, 2) != "*/") advance();
        if (pos_ >= src_.size()) throw ParseError(line, col, "'*/' closing comment");
        advance();
        advance();
      } else {
        break;
      }
    }
  }

  std::string lex_string(const Token& t) {
    advance();
    std::string out;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      advance();
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos_ >= src_.size()) break;
      char e = src_[pos_];
      advance();
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: throw ParseError(line_, col_ - 1, "escape sequence");
      }
    }
    throw ParseError(t.line, t.column, "closing '\"'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

Strategy make(auto node) { return Strategy{std::move(node)}; }

class Parser {
 public:
  Parser(std::string_view src, std::vector<std::string>* warnings)
      : src_(src), toks_(Lexer(src).run()), warnings_(warnings) {}

  ModuleAST module(const ModuleId& expected) {
    ModuleAST m;
    expect_keyword("module");
    const Token& at = cur();
    m.id = module_id();
    if (m.id != expected)
      throw ParseError(at.line, at.column, "module " + expected, "header mismatch: found " + m.id);
    while (!at_end()) {
      if (is_keyword("imports")) {
        next();
        while (cur().kind == Tok::Ident && !kKeywords.count(cur().text)) m.imports.push_back(module_id());
      } else if (is_keyword("signature")) {
        next();
        if (!is_keyword("constructors")) fail("'constructors'");
        while (is_keyword("constructors")) add_def(m, [&] { return Def{signature_block()}; });
      } else if (is_keyword("constructors")) {
        add_def(m, [&] { return Def{signature_block()}; });
      } else if (is_keyword("overlays")) {
        next();
        while (starts_def()) add_def(m, [&] { return Def{overlay_def()}; });
      } else if (is_keyword("strategies") || is_keyword("rules")) {
        next();
        while (starts_def()) add_def(m, [&] { return strategy_or_rule_def(); });
      } else {
        fail("section keyword (imports, signature, overlays, strategies, rules)");
      }
    }
    return m;
  }

  Def definition(DefKind kind) {
    Def d = [&]() -> Def {
      switch (kind) {
        case DefKind::Signature: return signature_block();
        case DefKind::Overlay: return overlay_def();
        case DefKind::Strategy: return strategy_or_rule_def();
      }
      return SigDef{};
    }();
    if (!at_end()) fail("end of definition");
    return d;
  }

  Strategy whole_strategy() {
    Strategy s = strategy();
    if (!at_end()) fail("end of input");
    return s;
  }

  Pattern whole_pattern() {
    Pattern p = pattern(true);
    if (!at_end()) fail("end of input");
    return p;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& peek_tok(std::size_t k = 1) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at_end() const { return cur().kind == Tok::End; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  [[noreturn]] void fail(const std::string& expected) const {
    const Token& t = cur();
    std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw ParseError(t.line, t.column, expected, "found " + found);
  }

  bool is_punct(std::string_view p) const { return cur().kind == Tok::Punct && cur().text == p; }
  bool is_keyword(std::string_view k) const { return cur().kind == Tok::Ident && cur().text == k; }

  void expect_punct(std::string_view p) {
    if (!is_punct(p)) fail("'" + std::string(p) + "'");
    next();
  }
  void expect_keyword(std::string_view k) {
    if (!is_keyword(k)) fail("'" + std::string(k) + "'");
    next();
  }

  std::string ident() {
    if (cur().kind != Tok::Ident || kKeywords.count(cur().text)) fail("identifier");
    return next().text;
  }

  ModuleId module_id() {
    std::string id = ident();
    while (is_punct("/")) {
      next();
      id += "/";
      id += ident();
    }
    return id;
  }

  bool starts_def() const {
    if (cur().kind != Tok::Ident) return false;
    if (cur().text == "extend" || cur().text == "override") return true;
    return !kKeywords.count(cur().text);
  }

  template <class F>
  void add_def(ModuleAST& m, F&& parse_one) {
    std::size_t begin = cur().begin;
    m.defs.push_back(parse_one());
    std::size_t end = toks_[pos_ - 1].end;
    m.def_texts.emplace_back(src_.substr(begin, end - begin));
  }

  SigDef signature_block() {
    expect_keyword("constructors");
    SigDef sig;
    while (cur().kind == Tok::Ident && !kKeywords.count(cur().text) && peek_tok().kind == Tok::Punct &&
           peek_tok().text == ":") {
      std::string name = ident();
      next();
      if (cur().kind != Tok::Int || cur().value < 0) fail("constructor arity");
      sig.constructors.push_back({name, static_cast<int>(next().value)});
    }
    return sig;
  }

  std::vector<std::string> ident_list(std::string_view close1, std::string_view close2 = {}) {
    std::vector<std::string> out;
    if (is_punct(close1) || (!close2.empty() && is_punct(close2))) return out;
    out.push_back(ident());
    while (is_punct(",")) {
      next();
      out.push_back(ident());
    }
    return out;
  }

  OverlayDef overlay_def() {
    OverlayDef o;
    o.name = ident();
    expect_punct("(");
    o.params = ident_list(")");
    expect_punct(")");
    expect_punct("=");
    o.body = pattern(false);
    return o;
  }

  Def strategy_or_rule_def() {
    Modifier mod = Modifier::Plain;
    if (is_keyword("extend")) {
      next();
      mod = Modifier::Extend;
    } else if (is_keyword("override")) {
      next();
      mod = Modifier::Override;
    }
    std::string name = ident();
    std::vector<std::string> sparams, tparams;
    if (is_punct("(")) {
      next();
      sparams = ident_list(")", "|");
      if (is_punct("|")) {
        next();
        tparams = ident_list(")");
      }
      expect_punct(")");
    }
    StrategyKey key{name, static_cast<int>(sparams.size()), static_cast<int>(tparams.size())};
    if (is_punct("=")) {
      next();
      return StrategyDef{key, sparams, tparams, strategy(), mod};
    }
    if (is_punct(":")) {
      next();
      RuleDef r{key, sparams, tparams, pattern(false), pvar(""), std::nullopt, mod};
      expect_punct("->");
      r.rhs = pattern(true);
      if (is_keyword("where")) {
        next();
        r.where = strategy();
      }
      return r;
    }
    fail("'=' or ':'");
  }

  // strategy := seq ("<+" strategy)?
  Strategy strategy() {
    Strategy left = sequence();
    if (is_punct("<+")) {
      next();
      return lchoice(std::move(left), strategy());
    }
    return left;
  }

  Strategy sequence() {
    Strategy s = postfix();
    while (is_punct(";")) {
      next();
      s = seq(std::move(s), postfix());
    }
    return s;
  }

  Strategy postfix() {
    Strategy s = primary();
    while (is_punct("=>")) {
      next();
      s = make(BindTo{std::move(s), pattern(false)});
    }
    return s;
  }

  /// Strategy argument: a lone bare name stays ambiguous in arity.
  Strategy strategy_arg() {
    if (cur().kind == Tok::Ident && !kKeywords.count(cur().text)) {
      const Token& after = peek_tok();
      bool bare = !(after.kind == Tok::Punct && after.text == "(");
      bool ends = after.kind == Tok::Punct && (after.text == "," || after.text == "|" || after.text == ")");
      if (bare && ends) return make(AmbRef{next().text});
    }
    return strategy();
  }

  Strategy primary() {
    const Token& t = cur();
    if (t.kind == Tok::Punct) {
      if (t.text == "?") {
        next();
        return make(Match{pattern(false)});
      }
      if (t.text == "!") {
        next();
        return make(Build{pattern(true)});
      }
      if (t.text == "<") {
        next();
        Strategy s = strategy();
        expect_punct(">");
        return make(ApplyTo{std::move(s), pattern(true)});
      }
      if (t.text == "(") {
        next();
        Strategy s = strategy();
        expect_punct(")");
        return s;
      }
      if (t.text == "{") {
        next();
        std::vector<std::string> vars = ident_list(":");
        expect_punct(":");
        Strategy body = strategy();
        expect_punct("}");
        return scope(std::move(vars), std::move(body));
      }
      if (t.text == "{|") {
        next();
        std::string rule = ident();
        expect_punct(":");
        Strategy body = strategy();
        expect_punct("|}");
        return make(ScopeDR{rule, std::move(body)});
      }
      if (t.text == "\\") {
        next();
        Lambda l{pattern(false), pvar(""), std::nullopt};
        expect_punct("->");
        l.rhs = pattern(true);
        if (is_keyword("where")) {
          next();
          l.where = strategy();
        }
        expect_punct("\\");
        return make(std::move(l));
      }
      fail("strategy");
    }
    if (t.kind != Tok::Ident) fail("strategy");
    if (t.text == "id") {
      next();
      return make(Id{});
    }
    if (t.text == "fail") {
      next();
      return make(Fail{});
    }
    if (t.text == "proceed") {
      next();
      return make(Proceed{});
    }
    if (t.text == "all") {
      next();
      expect_punct("(");
      Strategy s = strategy();
      expect_punct(")");
      return make(All{std::move(s)});
    }
    if (t.text == "where") {
      next();
      expect_punct("(");
      Strategy s = strategy();
      expect_punct(")");
      return make(Where{std::move(s)});
    }
    if (t.text == "prim") {
      next();
      expect_punct("(");
      if (cur().kind != Tok::Str) fail("primitive name string");
      CallPrim p{next().text, {}};
      while (is_punct(",")) {
        next();
        p.targs.push_back(pattern(true));
      }
      expect_punct(")");
      return make(std::move(p));
    }
    if (t.text == "rules") {
      next();
      expect_punct("(");
      Strategy s = dynamic_rule();
      while (is_punct(",")) {
        next();
        s = seq(std::move(s), dynamic_rule());
      }
      expect_punct(")");
      return s;
    }
    std::string name = ident();
    std::vector<Strategy> sargs;
    std::vector<Pattern> targs;
    if (is_punct("(")) {
      next();
      if (!is_punct(")") && !is_punct("|")) {
        sargs.push_back(strategy_arg());
        while (is_punct(",")) {
          next();
          sargs.push_back(strategy_arg());
        }
      }
      if (is_punct("|")) {
        next();
        if (!is_punct(")")) {
          targs.push_back(pattern(true));
          while (is_punct(",")) {
            next();
            targs.push_back(pattern(true));
          }
        }
      }
      expect_punct(")");
    }
    StrategyKey key{name, static_cast<int>(sargs.size()), static_cast<int>(targs.size())};
    return call(std::move(key), std::move(sargs), std::move(targs));
  }

  Strategy dynamic_rule() {
    const Token& at = cur();
    std::string rule = ident();
    if (is_punct(".") || is_punct("+")) {
      next();
      std::string label = ident();
      if (warnings_)
        warnings_->push_back(std::to_string(at.line) + ":" + std::to_string(at.column) +
                             ": dynamic rule label '" + label + "' on " + rule + " ignored");
    }
    if (is_punct(":-")) {
      next();
      return make(UndefineDR{rule, pattern(false)});
    }
    expect_punct(":");
    Pattern lhs = pattern(false);
    expect_punct("->");
    return make(DefineDR{rule, std::move(lhs), pattern(true)});
  }

  std::vector<Pattern> pattern_items(std::string_view close, bool build) {
    std::vector<Pattern> out;
    if (is_punct(close)) return out;
    out.push_back(pattern(build));
    while (is_punct(",")) {
      next();
      out.push_back(pattern(build));
    }
    return out;
  }

  Pattern generic_suffix(Pattern fun, bool build) {
    next();  // '#'
    expect_punct("(");
    Pattern args = pattern(build);
    expect_punct(")");
    return Pattern{PGeneric{std::move(fun), std::move(args)}};
  }

  Pattern pattern(bool build) {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::Int:
        return Pattern{PInt{next().value}};
      case Tok::Str: {
        Pattern p{PStr{next().text}};
        if (is_punct("#")) return generic_suffix(std::move(p), build);
        return p;
      }
      case Tok::Ident: {
        if (t.text == "_") {
          next();
          return Pattern{PWild{}};
        }
        std::string name = ident();
        if (is_punct("@")) {
          next();
          return Pattern{PAs{name, pattern(build)}};
        }
        if (is_punct("#")) return generic_suffix(pvar(name), build);
        if (is_punct("(")) {
          next();
          auto args = pattern_items(")", build);
          expect_punct(")");
          return pappl(std::move(name), std::move(args));
        }
        return pvar(std::move(name));
      }
      case Tok::Punct:
        if (t.text == "[") {
          next();
          PList l{pattern_items("]", build), std::nullopt};
          if (is_punct("|")) {
            if (l.items.empty()) fail("list element before '|'");
            next();
            l.tail = pattern(build);
          }
          expect_punct("]");
          return Pattern{std::move(l)};
        }
        if (t.text == "(") {
          next();
          auto items = pattern_items(")", build);
          if (items.empty()) fail("pattern");
          expect_punct(")");
          return Pattern{PTuple{std::move(items)}};
        }
        if (t.text == "<") {
          if (!build) fail("pattern (strategy application is only allowed in build position)");
          next();
          Strategy s = strategy();
          expect_punct(">");
          return Pattern{PApply{std::move(s), pattern(true)}};
        }
        break;
      default:
        break;
    }
    fail("pattern");
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<std::string>* warnings_;
};

}  // namespace

bool is_module_id(std::string_view s) {
  if (s.empty()) return false;
  std::size_t start = 0;
  for (;;) {
    std::size_t slash = s.find('/', start);
    std::string_view seg = s.substr(start, slash == std::string_view::npos ? s.npos : slash - start);
    if (!is_identifier(seg) || kKeywords.count(seg)) return false;
    if (slash == std::string_view::npos) return true;
    start = slash + 1;
  }
}

ModuleAST parse_module(std::string_view text, const ModuleId& expected_id) {
  std::vector<std::string> warnings;
  Parser p(text, &warnings);
  ModuleAST m = p.module(expected_id);
  m.warnings = std::move(warnings);
  return m;
}

Def parse_definition(std::string_view text, DefKind kind, std::vector<std::string>* warnings) {
  return Parser(text, warnings).definition(kind);
}

Strategy parse_strategy(std::string_view text) { return Parser(text, nullptr).whole_strategy(); }

Pattern parse_pattern(std::string_view text) { return Parser(text, nullptr).whole_pattern(); }

}  // namespace strata::syntax
