#include "biopepa/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <string>

namespace biopepa {

std::string_view severity_name(Severity severity) noexcept {
  return severity == Severity::Error ? "ERROR" : "WARNING";
}

namespace {

enum class Tok {
  Ident,
  Number,
  String,
  Semicolon,
  Colon,
  Comma,
  Assign,     // =
  Define,     // ::=
  LParen,
  RParen,
  LBracket,
  RBracket,
  At,
  Plus,
  Minus,
  Star,
  Slash,
  Reactant,   // <<
  Product,    // >>
  Activator,  // (+)
  Inhibitor,  // (-)
  Modifier,   // (.)
  Transport,  // ->
  BiTransport,  // <->
  Less,
  Greater,
  CoopAll,  // <*>
  Invalid,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  SourceSpan span;
  double number = 0.0;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::Ident: return "identifier '" + t.text + "'";
    case Tok::Number: return "number '" + t.text + "'";
    default: return "'" + t.text + "'";
  }
}

struct SyntaxError {
  std::string message;
  SourceSpan span;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run(std::vector<ParseDiagnostic>& diags) {
    std::vector<Token> out;
    while (true) {
      skip_trivia(diags);
      if (pos_ >= text_.size()) break;
      out.push_back(next());
    }
    out.push_back(Token{Tok::End, "", span_at(text_.size(), text_.size())});
    return out;
  }

 private:
  SourceSpan span_at(std::size_t begin, std::size_t end) const {
    int line = 1;
    std::size_t line_start = 0;
    auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), begin);
    line = static_cast<int>(it - line_starts_.begin()) + 1;
    if (it != line_starts_.begin()) line_start = *(it - 1);
    return SourceSpan{begin, end, line, static_cast<int>(begin - line_start) + 1};
  }

  void newline_at(std::size_t i) {
    if (line_starts_.empty() || line_starts_.back() < i + 1) line_starts_.push_back(i + 1);
  }

  char peek(std::size_t off = 0) const {
    return pos_ + off < text_.size() ? text_[pos_ + off] : '\0';
  }

  void skip_trivia(std::vector<ParseDiagnostic>& diags) {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        newline_at(pos_);
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (c == '/' && peek(1) == '*') {
        std::size_t start = pos_;
        pos_ += 2;
        bool closed = false;
        while (pos_ < text_.size()) {
          if (text_[pos_] == '\n') newline_at(pos_);
          if (text_[pos_] == '*' && peek(1) == '/') {
            pos_ += 2;
            closed = true;
            break;
          }
          ++pos_;
        }
        if (!closed) {
          diags.push_back({Severity::Error, "unterminated block comment",
                           span_at(start, text_.size())});
        }
      } else {
        break;
      }
    }
  }

  Token make(Tok kind, std::size_t len) {
    Token t{kind, std::string(text_.substr(pos_, len)), span_at(pos_, pos_ + len)};
    pos_ += len;
    return t;
  }

  bool lookahead(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

  Token next() {
    char c = peek();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t len = 1;
      while (pos_ + len < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_ + len])) ||
              text_[pos_ + len] == '_')) {
        ++len;
      }
      return make(Tok::Ident, len);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      return number();
    }
    if (c == '"') {
      std::size_t len = 1;
      while (pos_ + len < text_.size() && text_[pos_ + len] != '"' && text_[pos_ + len] != '\n') {
        ++len;
      }
      if (pos_ + len < text_.size() && text_[pos_ + len] == '"') {
        Token t = make(Tok::String, len + 1);
        t.text = t.text.substr(1, t.text.size() - 2);
        return t;
      }
      return make(Tok::Invalid, len);
    }
    if (lookahead("::=")) return make(Tok::Define, 3);
    if (lookahead("(+)")) return make(Tok::Activator, 3);
    if (lookahead("(-)")) return make(Tok::Inhibitor, 3);
    if (lookahead("(.)")) return make(Tok::Modifier, 3);
    if (lookahead("<->")) return make(Tok::BiTransport, 3);
    if (lookahead("<*>")) return make(Tok::CoopAll, 3);
    if (lookahead("<<")) return make(Tok::Reactant, 2);
    if (lookahead(">>")) return make(Tok::Product, 2);
    if (lookahead("->")) return make(Tok::Transport, 2);
    switch (c) {
      case ';': return make(Tok::Semicolon, 1);
      case ':': return make(Tok::Colon, 1);
      case ',': return make(Tok::Comma, 1);
      case '=': return make(Tok::Assign, 1);
      case '(': return make(Tok::LParen, 1);
      case ')': return make(Tok::RParen, 1);
      case '[': return make(Tok::LBracket, 1);
      case ']': return make(Tok::RBracket, 1);
      case '@': return make(Tok::At, 1);
      case '+': return make(Tok::Plus, 1);
      case '-': return make(Tok::Minus, 1);
      case '*': return make(Tok::Star, 1);
      case '/': return make(Tok::Slash, 1);
      case '<': return make(Tok::Less, 1);
      case '>': return make(Tok::Greater, 1);
      default: break;
    }
    // One UTF-8 sequence at a time so diagnostics name whole characters.
    std::size_t len = 1;
    while (pos_ + len < text_.size() &&
           (static_cast<unsigned char>(text_[pos_ + len]) & 0xC0) == 0x80) {
      ++len;
    }
    return make(Tok::Invalid, len);
  }

  Token number() {
    std::size_t len = 0;
    auto digit = [&](std::size_t i) {
      return pos_ + i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + i]));
    };
    while (digit(len)) ++len;
    if (pos_ + len < text_.size() && text_[pos_ + len] == '.') {
      ++len;
      while (digit(len)) ++len;
    }
    if (pos_ + len < text_.size() && (text_[pos_ + len] == 'e' || text_[pos_ + len] == 'E')) {
      std::size_t save = len;
      ++len;
      if (pos_ + len < text_.size() && (text_[pos_ + len] == '+' || text_[pos_ + len] == '-')) {
        ++len;
      }
      if (digit(len)) {
        while (digit(len)) ++len;
      } else {
        len = save;
      }
    }
    Token t = make(Tok::Number, len);
    double value = 0.0;
    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (res.ec != std::errc{} || !std::isfinite(value)) t.kind = Tok::Invalid;
    t.number = value;
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<std::size_t> line_starts_;
};

SourceSpan join(const SourceSpan& a, const SourceSpan& b) {
  return SourceSpan{a.begin, std::max(a.end, b.end), a.line, a.column};
}

/// Cursor over one statement's tokens; the slice always ends with a
/// sentinel End token carrying the statement end position.
class Cursor {
 public:
  explicit Cursor(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  const Token& peek(std::size_t off = 0) const {
    return toks_[std::min(pos_ + off, toks_.size() - 1)];
  }
  const Token& take() {
    const Token& t = toks_[std::min(pos_, toks_.size() - 1)];
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool at(Tok kind) const { return peek().kind == kind; }
  bool accept(Tok kind) {
    if (!at(kind)) return false;
    take();
    return true;
  }
  const Token& expect(Tok kind, std::string_view what) {
    if (!at(kind)) fail("expected " + std::string(what) + " but found " + describe(peek()));
    return take();
  }
  [[noreturn]] void fail(const std::string& message) const {
    throw SyntaxError{message, peek().span};
  }
  bool contains(std::initializer_list<Tok> kinds) const {
    return std::any_of(toks_.begin(), toks_.end(), [&](const Token& t) {
      return std::find(kinds.begin(), kinds.end(), t.kind) != kinds.end();
    });
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// Expression grammar: sum := product (('+'|'-') product)*,
// product := unary (('*'|'/') unary)*, unary := '-' unary | atom.
Expression parse_sum(Cursor& c);

Expression parse_atom(Cursor& c) {
  const Token& t = c.peek();
  switch (t.kind) {
    case Tok::Number: {
      c.take();
      return Expression::number(t.number, t.span);
    }
    case Tok::Ident: {
      Token name = c.take();
      if (name.text == "fMA" || name.text == "fMM") {
        throw SyntaxError{name.text + " is a kinetic law constructor, not a function",
                          name.span};
      }
      if (c.at(Tok::LParen)) c.fail("function calls are not supported in expressions");
      if (c.accept(Tok::At)) {
        const Token& loc = c.expect(Tok::Ident, "a location name after '@'");
        return Expression::ref(name.text, loc.text, RefKind::SpeciesAmount,
                               join(name.span, loc.span));
      }
      return Expression::ref(name.text, {}, RefKind::Unresolved, name.span);
    }
    case Tok::LParen: {
      Token open = c.take();
      Expression inner = parse_sum(c);
      if (!c.at(Tok::RParen)) {
        throw SyntaxError{"unbalanced parenthesis: expected ')' but found " + describe(c.peek()),
                          open.span};
      }
      c.take();
      return inner;
    }
    case Tok::End: c.fail("expected an expression but found end of statement");
    default: c.fail("expected an expression but found " + describe(t));
  }
}

Expression parse_unary(Cursor& c) {
  if (c.at(Tok::Minus)) {
    Token minus = c.take();
    Expression operand = parse_unary(c);
    return Expression::negate(operand, join(minus.span, operand.span()));
  }
  return parse_atom(c);
}

Expression parse_product(Cursor& c) {
  Expression lhs = parse_unary(c);
  while (c.at(Tok::Star) || c.at(Tok::Slash)) {
    BinaryOp op = c.take().kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
    Expression rhs = parse_unary(c);
    lhs = Expression::binary(op, lhs, rhs, join(lhs.span(), rhs.span()));
  }
  return lhs;
}

Expression parse_sum(Cursor& c) {
  Expression lhs = parse_product(c);
  while (c.at(Tok::Plus) || c.at(Tok::Minus)) {
    BinaryOp op = c.take().kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
    Expression rhs = parse_product(c);
    lhs = Expression::binary(op, lhs, rhs, join(lhs.span(), rhs.span()));
  }
  return lhs;
}

void expect_end(Cursor& c, std::string_view context) {
  if (c.at(Tok::RParen)) c.fail("unbalanced parenthesis: unexpected ')'");
  if (!c.at(Tok::End)) {
    std::string hint = c.at(Tok::Ident) ? " (missing ';'?)" : "";
    c.fail("unexpected " + describe(c.peek()) + " in " + std::string(context) + hint);
  }
}

bool is_role_operator(Tok kind) {
  return kind == Tok::Reactant || kind == Tok::Product || kind == Tok::Activator ||
         kind == Tok::Inhibitor || kind == Tok::Modifier;
}

Role role_of(Tok kind) {
  switch (kind) {
    case Tok::Reactant: return Role::Reactant;
    case Tok::Product: return Role::Product;
    case Tok::Activator: return Role::Activator;
    case Tok::Inhibitor: return Role::Inhibitor;
    default: return Role::Modifier;
  }
}

class StatementParser {
 public:
  explicit StatementParser(BioPepaSystem& system) : sys_(system) {}

  void location(Cursor& c, const SourceSpan& span) {
    c.take();  // location
    Location loc;
    loc.span = span;
    loc.name = c.expect(Tok::Ident, "a location name").text;
    if (c.at(Tok::Ident) && c.peek().text == "in") {
      c.take();
      loc.parent = c.expect(Tok::Ident, "a parent location name").text;
    }
    c.expect(Tok::Colon, "':' after the location name");
    std::set<std::string> seen;
    do {
      const Token& key = c.expect(Tok::Ident, "a location attribute (size, kind, unit)");
      if (!seen.insert(key.text).second) {
        throw SyntaxError{"attribute '" + key.text + "' given twice", key.span};
      }
      c.expect(Tok::Assign, "'=' after '" + key.text + "'");
      if (key.text == "size") {
        loc.size = parse_sum(c);
      } else if (key.text == "kind") {
        const Token& kind = c.expect(Tok::Ident, "'compartment' or 'membrane'");
        if (kind.text == "compartment") {
          loc.kind = LocationKind::Compartment;
        } else if (kind.text == "membrane") {
          loc.kind = LocationKind::Membrane;
        } else {
          throw SyntaxError{"unknown location kind '" + kind.text +
                                "' (expected 'compartment' or 'membrane')",
                            kind.span};
        }
      } else if (key.text == "unit") {
        if (!c.at(Tok::Ident) && !c.at(Tok::String)) c.fail("expected a unit name");
        loc.unit = c.take().text;
      } else {
        throw SyntaxError{"unknown location attribute '" + key.text + "'", key.span};
      }
    } while (c.accept(Tok::Comma));
    expect_end(c, "location definition");
    if (loc.size.empty()) throw SyntaxError{"location '" + loc.name + "' needs a size", span};
    sys_.locations.push_back(std::move(loc));
  }

  void kinetic_law(Cursor& c, const SourceSpan& span) {
    c.take();  // kineticLawOf
    KineticLaw law;
    law.span = span;
    law.action = c.expect(Tok::Ident, "an action name").text;
    c.expect(Tok::Colon, "':' after the action name");
    const Token& head = c.peek();
    if (head.kind == Tok::Ident && (head.text == "fMA" || head.text == "fMM") &&
        c.peek(1).kind == Tok::LParen) {
      std::string ctor = c.take().text;
      Token open = c.take();
      Expression first = parse_sum(c);
      if (ctor == "fMA") {
        law.body = MassAction{first};
      } else {
        c.expect(Tok::Comma, "',' between the two fMM arguments");
        law.body = MichaelisMenten{first, parse_sum(c)};
      }
      if (!c.at(Tok::RParen)) {
        throw SyntaxError{"unbalanced parenthesis: " + ctor + "( is not closed before " +
                              describe(c.peek()),
                          open.span};
      }
      c.take();
    } else {
      law.body = CustomLaw{parse_sum(c)};
    }
    expect_end(c, "kinetic law");
    sys_.kinetic_laws.push_back(std::move(law));
  }

  void species(Cursor& c, const SourceSpan& span) {
    SpeciesComponent comp;
    comp.span = span;
    comp.name = c.take().text;
    c.take();  // =
    do {
      comp.terms.push_back(term(c));
    } while (c.accept(Tok::Plus));
    expect_end(c, "species component");
    sys_.components.push_back(std::move(comp));
  }

  void value(Cursor& c, const SourceSpan& span) {
    std::string name = c.take().text;
    c.take();  // =
    Expression body = parse_sum(c);
    expect_end(c, "definition of '" + name + "'");
    if (references_species(body)) {
      sys_.observables.push_back(Observable{name, body, span});
    } else {
      sys_.parameters.push_back(Parameter{name, body, span});
    }
  }

  void labeled(Cursor& c, const SourceSpan& span) {
    std::string name = c.take().text;
    c.take();  // ::=
    ModelTree body = composition(c);
    expect_end(c, "composition '" + name + "'");
    sys_.compositions.push_back(LabeledComposition{name, body, span});
  }

  ModelTree model(Cursor& c) {
    ModelTree tree = composition(c);
    expect_end(c, "model component");
    return tree;
  }

 private:
  std::pair<std::string, std::string> target(Cursor& c, SourceSpan& span) {
    const Token& name = c.expect(Tok::Ident, "a species name");
    span = join(span, name.span);
    std::string loc;
    if (c.accept(Tok::At)) {
      const Token& l = c.expect(Tok::Ident, "a location name after '@'");
      span = join(span, l.span);
      loc = l.text;
    }
    return {name.text, loc};
  }

  PrefixTerm term(Cursor& c) {
    PrefixTerm t;
    SourceSpan span = c.peek().span;
    if (c.accept(Tok::LParen)) {
      t.action = c.expect(Tok::Ident, "an action name").text;
      c.expect(Tok::Comma, "',' between action and stoichiometry");
      const Token& k = c.expect(Tok::Number, "a stoichiometry coefficient");
      if (k.number < 1 || k.number != std::floor(k.number) || k.number > 1e9) {
        throw SyntaxError{"stoichiometry must be a positive integer, got " + k.text, k.span};
      }
      t.stoichiometry = static_cast<int>(k.number);
      c.expect(Tok::RParen, "')' after the stoichiometry");
    } else {
      t.action = c.expect(Tok::Ident, "an action name or '(action, stoichiometry)'").text;
    }
    if (is_role_operator(c.peek().kind)) {
      t.role = role_of(c.take().kind);
      std::tie(t.species, t.location) = target(c, span);
    } else if (c.at(Tok::Ident)) {
      std::tie(t.species, t.location) = target(c, span);
      if (c.at(Tok::BiTransport)) {
        c.fail(
            "bidirectional transport '<->' is not supported: write two actions, one "
            "'->' transport each way, each with its own kinetic law");
      }
      c.expect(Tok::Transport, "'->' in a transport term");
      auto [dest_species, dest_loc] = target(c, span);
      if (dest_species != t.species) {
        throw SyntaxError{"transport must move one species, got '" + t.species + "' and '" +
                              dest_species + "'",
                          span};
      }
      if (t.location.empty() || dest_loc.empty()) {
        throw SyntaxError{"transport terms need explicit source and destination locations",
                          span};
      }
      t.role = Role::TransportOut;
      t.destination = dest_loc;
    } else if (c.at(Tok::BiTransport)) {
      c.fail(
          "bidirectional transport '<->' is not supported: write two actions, one '->' "
          "transport each way, each with its own kinetic law");
    } else {
      c.fail("expected a role operator (<<, >>, (+), (-), (.)) but found " +
             describe(c.peek()));
    }
    t.span = span;
    return t;
  }

  CooperationSet cooperation(Cursor& c) {
    CooperationSet set;
    if (c.accept(Tok::CoopAll)) return set;
    Token open = c.take();  // <
    set.wildcard = false;
    if (c.accept(Tok::Greater)) return set;
    while (true) {
      if (!c.at(Tok::Ident)) {
        throw SyntaxError{"malformed cooperation set: expected an action name but found " +
                              describe(c.peek()),
                          c.peek().span};
      }
      set.actions.push_back(c.take().text);
      if (c.accept(Tok::Greater)) break;
      if (!c.accept(Tok::Comma)) {
        throw SyntaxError{"malformed cooperation set: expected ',' or '>' but found " +
                              describe(c.peek()),
                          open.span};
      }
    }
    return set;
  }

  ModelTree composition(Cursor& c) {
    ModelTree lhs = operand(c);
    while (c.at(Tok::CoopAll) || c.at(Tok::Less)) {
      CooperationSet set = cooperation(c);
      ModelTree rhs = operand(c);
      lhs = make_cooperation(lhs, rhs, std::move(set), join(lhs->span, rhs->span));
    }
    return lhs;
  }

  ModelTree operand(Cursor& c) {
    if (c.at(Tok::LParen)) {
      Token open = c.take();
      ModelTree inner = composition(c);
      if (!c.at(Tok::RParen)) {
        throw SyntaxError{"unbalanced parenthesis in composition", open.span};
      }
      c.take();
      return inner;
    }
    const Token& name = c.expect(Tok::Ident, "a species or composition name");
    SourceSpan span = name.span;
    std::string location;
    if (c.accept(Tok::At)) {
      const Token& loc = c.expect(Tok::Ident, "a location name after '@'");
      location = loc.text;
      span = join(span, loc.span);
    }
    if (c.accept(Tok::LBracket)) {
      bool negative = c.accept(Tok::Minus);
      const Token& count = c.expect(Tok::Number, "an initial amount");
      const Token& close = c.expect(Tok::RBracket, "']' after the initial amount");
      return make_leaf(name.text, location, negative ? -count.number : count.number,
                       join(span, close.span));
    }
    if (!location.empty()) c.fail("expected '[' and an initial amount after " + name.text + "@" + location);
    return make_ref(name.text, span);
  }

  BioPepaSystem& sys_;
};

}  // namespace

ParseResult parse_system(std::string_view text) {
  ParseResult result;
  std::vector<Token> tokens = Lexer(text).run(result.diagnostics);

  // Split into statements at ';'. A trailing unterminated statement is
  // allowed only for the model component.
  struct Statement {
    std::vector<Token> tokens;
    bool terminated;
  };
  std::vector<Statement> statements;
  std::vector<Token> current;
  for (const auto& tok : tokens) {
    if (tok.kind == Tok::End) break;
    if (tok.kind == Tok::Semicolon) {
      if (!current.empty()) statements.push_back({std::move(current), true});
      current.clear();
    } else {
      current.push_back(tok);
    }
  }
  if (!current.empty()) statements.push_back({std::move(current), false});

  BioPepaSystem system;
  StatementParser parser(system);
  bool have_model = false;
  for (std::size_t i = 0; i < statements.size(); ++i) {
    auto& stmt = statements[i];
    const bool last = i + 1 == statements.size();
    SourceSpan span = join(stmt.tokens.front().span, stmt.tokens.back().span);
    SourceSpan end_span = stmt.tokens.back().span;
    end_span.begin = end_span.end;
    Token sentinel{Tok::End, "", end_span};
    stmt.tokens.push_back(sentinel);
    Cursor c(stmt.tokens);
    const Token& first = c.peek();
    const Token& second = c.peek(1);
    try {
      if (first.kind == Tok::Ident && first.text == "location") {
        parser.location(c, span);
      } else if (first.kind == Tok::Ident && first.text == "kineticLawOf") {
        parser.kinetic_law(c, span);
      } else if (first.kind == Tok::Ident && second.kind == Tok::Define) {
        parser.labeled(c, span);
      } else if (first.kind == Tok::Ident && second.kind == Tok::Assign) {
        if (c.contains({Tok::Reactant, Tok::Product, Tok::Activator, Tok::Inhibitor,
                        Tok::Modifier, Tok::Transport, Tok::BiTransport})) {
          parser.species(c, span);
        } else {
          parser.value(c, span);
        }
      } else if (first.kind == Tok::Ident &&
                 (second.kind == Tok::Ident || second.kind == Tok::Number ||
                  second.kind == Tok::String || second.kind == Tok::Colon)) {
        throw SyntaxError{"unknown keyword '" + first.text + "'", first.span};
      } else if (first.kind == Tok::Ident || first.kind == Tok::LParen) {
        ModelTree tree = parser.model(c);
        if (!last) {
          throw SyntaxError{"the model component must be the final statement", span};
        }
        system.model = tree;
        have_model = true;
      } else if (first.kind == Tok::Invalid) {
        throw SyntaxError{"unexpected character " + describe(first), first.span};
      } else {
        throw SyntaxError{"a statement cannot start with " + describe(first), first.span};
      }
      if (!stmt.terminated && !have_model) {
        throw SyntaxError{"statement is not terminated by ';'", end_span};
      }
    } catch (const SyntaxError& e) {
      result.diagnostics.push_back({Severity::Error, e.message, e.span});
    }
  }
  if (!have_model) {
    bool failed = std::any_of(result.diagnostics.begin(), result.diagnostics.end(),
                              [](const auto& d) { return d.severity == Severity::Error; });
    if (!failed) {
      SourceSpan end{text.size(), text.size(), 1, 1};
      if (!tokens.empty()) end = tokens.back().span;
      result.diagnostics.push_back(
          {Severity::Error, "missing model component (the final, unassigned statement)", end});
    }
  }
  // A value built from observables is itself an observable.
  for (bool moved = true; moved;) {
    moved = false;
    for (auto it = system.parameters.begin(); it != system.parameters.end(); ++it) {
      auto refs = collect_references(it->value);
      bool uses_observable = std::any_of(refs.begin(), refs.end(), [&](const Reference& r) {
        return r.location.empty() && system.find_observable(r.name) != nullptr &&
               system.find_parameter(r.name) == nullptr;
      });
      if (uses_observable) {
        system.observables.push_back(Observable{it->name, it->value, it->span});
        system.parameters.erase(it);
        moved = true;
        break;
      }
    }
  }
  bool failed = std::any_of(result.diagnostics.begin(), result.diagnostics.end(),
                            [](const auto& d) { return d.severity == Severity::Error; });
  if (!failed) result.system = std::move(system);
  return result;
}

ExpressionParseResult parse_expression(std::string_view text) {
  ExpressionParseResult result;
  std::vector<Token> tokens = Lexer(text).run(result.diagnostics);
  if (!result.diagnostics.empty()) return result;
  Cursor c(std::move(tokens));
  try {
    if (c.at(Tok::End)) throw SyntaxError{"empty expression", c.peek().span};
    Expression e = parse_sum(c);
    expect_end(c, "expression");
    result.expression = e;
  } catch (const SyntaxError& e) {
    result.diagnostics.push_back({Severity::Error, e.message, e.span});
  }
  return result;
}

}  // namespace biopepa
