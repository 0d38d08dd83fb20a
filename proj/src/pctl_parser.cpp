#include "tracestyles/error.hpp"
#include "tracestyles/pctl.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace tracestyles {

namespace {

enum class Tok {
  End, Word, String, LParen, RParen, LBracket, RBracket, LBrace, RBrace, Comma,
  Bang, Amp, Bar, Implies, Assign, Query, Less, LessEq, Greater, GreaterEq
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
  std::size_t end;
};

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) { tokenize(); }

  Property property() {
    Property result = at_word("filter") ? Property{filter()} : Property{state()};
    expect(Tok::End, "end of input");
    return result;
  }

 private:
  [[noreturn]] void fail(const std::string& message, std::size_t offset) const {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < offset && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(message + " at line " + std::to_string(line) + ", column " +
                         std::to_string(column),
                     offset, line, column);
  }

  void tokenize() {
    std::size_t i = 0;
    auto push = [&](Tok kind, std::size_t len) {
      tokens_.push_back({kind, std::string(text_.substr(i, len)), i, i + len});
      i += len;
    };
    while (i < text_.size()) {
      const char c = text_[i];
      const char next = i + 1 < text_.size() ? text_[i + 1] : '\0';
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (word_char(c)) {
        std::size_t j = i;
        while (j < text_.size() && word_char(text_[j])) ++j;
        push(Tok::Word, j - i);
      } else if (c == '"') {
        const std::size_t start = i;
        std::string value;
        ++i;
        while (true) {
          if (i >= text_.size()) fail("unterminated string", start);
          if (text_[i] == '\\' && i + 1 < text_.size()) {
            value += text_[i + 1];
            i += 2;
          } else if (text_[i] == '"') {
            ++i;
            break;
          } else {
            value += text_[i++];
          }
        }
        tokens_.push_back({Tok::String, std::move(value), start, i});
      } else {
        switch (c) {
          case '(': push(Tok::LParen, 1); break;
          case ')': push(Tok::RParen, 1); break;
          case '[': push(Tok::LBracket, 1); break;
          case ']': push(Tok::RBracket, 1); break;
          case '{': push(Tok::LBrace, 1); break;
          case '}': push(Tok::RBrace, 1); break;
          case ',': push(Tok::Comma, 1); break;
          case '!': push(Tok::Bang, 1); break;
          case '&': push(Tok::Amp, 1); break;
          case '|': push(Tok::Bar, 1); break;
          case '=':
            if (next == '>') push(Tok::Implies, 2);
            else if (next == '?') push(Tok::Query, 2);
            else push(Tok::Assign, 1);
            break;
          case '<':
            if (next == '=') push(Tok::LessEq, 2);
            else push(Tok::Less, 1);
            break;
          case '>':
            if (next == '=') push(Tok::GreaterEq, 2);
            else push(Tok::Greater, 1);
            break;
          default: fail(std::string("unexpected character '") + c + "'", i);
        }
      }
    }
    tokens_.push_back({Tok::End, "", text_.size(), text_.size()});
  }

  const Token& peek() const { return tokens_[pos_]; }
  const Token& take() { return tokens_[pos_++]; }
  bool at(Tok kind) const { return peek().kind == kind; }
  bool at_word(std::string_view w) const { return at(Tok::Word) && peek().text == w; }

  const Token& expect(Tok kind, const char* what) {
    if (!at(kind)) unexpected(what);
    return take();
  }
  void expect_word(std::string_view w) {
    if (!at_word(w)) unexpected(std::string("'") + std::string(w) + "'");
    take();
  }
  [[noreturn]] void unexpected(const std::string& what) const {
    const auto& t = peek();
    const std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    fail("expected " + what + " but found " + found, t.offset);
  }

  std::size_t integer() {
    const auto& t = expect(Tok::Word, "a non-negative integer");
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size())
      fail("expected a non-negative integer but found '" + t.text + "'", t.offset);
    return value;
  }

  double probability() {
    const auto& t = expect(Tok::Word, "a probability");
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size() || !(value >= 0.0 && value <= 1.0))
      fail("expected a probability in [0,1] but found '" + t.text + "'", t.offset);
    return value;
  }

  std::optional<std::size_t> optional_bound() {
    if (!at(Tok::LessEq)) return std::nullopt;
    take();
    return integer();
  }

  std::optional<Comparison> comparison() {
    switch (peek().kind) {
      case Tok::Less: take(); return Comparison::Less;
      case Tok::LessEq: take(); return Comparison::LessEqual;
      case Tok::Greater: take(); return Comparison::Greater;
      case Tok::GreaterEq: take(); return Comparison::GreaterEqual;
      default: return std::nullopt;
    }
  }

  // state := implication
  StateFormula state() {
    StateFormula lhs = disjunction();
    if (at(Tok::Implies)) {
      take();
      return make_implies(std::move(lhs), state());
    }
    return lhs;
  }

  StateFormula disjunction() {
    StateFormula lhs = conjunction();
    while (at(Tok::Bar)) {
      take();
      lhs = make_or(std::move(lhs), conjunction());
    }
    return lhs;
  }

  StateFormula conjunction() {
    StateFormula lhs = unary();
    while (at(Tok::Amp)) {
      take();
      lhs = make_and(std::move(lhs), unary());
    }
    return lhs;
  }

  StateFormula unary() {
    if (at(Tok::Bang)) {
      take();
      return make_not(unary());
    }
    return primary();
  }

  StateFormula primary() {
    if (at(Tok::LParen)) {
      take();
      StateFormula inner = state();
      expect(Tok::RParen, "')'");
      return inner;
    }
    if (at(Tok::String)) return make_atom(take().text);
    if (!at(Tok::Word)) unexpected("a state formula");
    const auto& w = peek().text;
    if (w == "true") {
      take();
      return make_true();
    }
    if (w == "false") {
      take();
      return make_false();
    }
    if (w == "P") return probability_operator();
    if (w == "S") return steady_operator();
    if (w == "R") return reward_operator();
    if (w == "U" || w == "F" || w == "G" || w == "X" || w == "C" || w == "filter")
      unexpected("a state formula");
    std::string name = take().text;
    if (at(Tok::Assign)) {
      take();
      if (at(Tok::Word) || at(Tok::String))
        name += "=" + take().text;
      else
        unexpected("a label after '='");
    }
    return make_atom(std::move(name));
  }

  StateFormula probability_operator() {
    expect_word("P");
    if (at(Tok::Query)) {
      take();
      return {ProbQuery{bracketed_path()}};
    }
    auto op = comparison();
    if (!op) unexpected("'=?' or a comparison");
    const double bound = probability();
    return {ProbCompare{*op, bound, bracketed_path()}};
  }

  StateFormula steady_operator() {
    expect_word("S");
    std::optional<Comparison> op;
    double bound = 0.0;
    if (at(Tok::Query)) {
      take();
    } else {
      op = comparison();
      if (!op) unexpected("'=?' or a comparison");
      bound = probability();
    }
    expect(Tok::LBracket, "'['");
    StateFormula operand = state();
    expect(Tok::RBracket, "']'");
    if (op) return {SteadyCompare{*op, bound, std::move(operand)}};
    return {SteadyQuery{std::move(operand)}};
  }

  StateFormula reward_operator() {
    expect_word("R");
    expect(Tok::LBrace, "'{'");
    if (!at(Tok::Word) && !at(Tok::String)) unexpected("a reward name");
    // Adjacent bare and quoted pieces join: rState"T&C" names rStateT&C.
    std::string reward = peek().text;
    std::size_t end = take().end;
    while ((at(Tok::Word) || at(Tok::String)) && peek().offset == end) {
      reward += peek().text;
      end = take().end;
    }
    expect(Tok::RBrace, "'}'");
    expect(Tok::Query, "'=?'");
    expect(Tok::LBracket, "'['");
    StateFormula result;
    if (at_word("F")) {
      take();
      result = {RewardReach{std::move(reward), state()}};
    } else if (at_word("C")) {
      take();
      expect(Tok::LessEq, "'<='");
      result = {RewardCumulative{std::move(reward), integer()}};
    } else {
      unexpected("'F' or 'C'");
    }
    expect(Tok::RBracket, "']'");
    return result;
  }

  PathFormula bracketed_path() {
    expect(Tok::LBracket, "'['");
    PathFormula p = path();
    expect(Tok::RBracket, "']'");
    return p;
  }

  PathFormula path() {
    if (at_word("X")) {
      take();
      return {Next{state()}};
    }
    if (at_word("F")) {
      take();
      auto bound = optional_bound();
      return make_eventually(state(), bound);
    }
    if (at_word("G")) {
      take();
      auto bound = optional_bound();
      return {Globally{state(), bound}};
    }
    StateFormula lhs = state();
    expect_word("U");
    auto bound = optional_bound();
    return {Until{std::move(lhs), state(), bound}};
  }

  FilterExpr filter() {
    expect_word("filter");
    expect(Tok::LParen, "'('");
    const auto& k = expect(Tok::Word, "a filter kind");
    FilterKind kind;
    if (k.text == "state") kind = FilterKind::State;
    else if (k.text == "min") kind = FilterKind::Min;
    else if (k.text == "max") kind = FilterKind::Max;
    else if (k.text == "avg") kind = FilterKind::Avg;
    else if (k.text == "sum") kind = FilterKind::Sum;
    else fail("unknown filter kind '" + k.text + "'", k.offset);
    expect(Tok::Comma, "','");
    StateFormula query = state();
    expect(Tok::Comma, "','");
    StateFormula condition = state();
    expect(Tok::RParen, "')'");
    return {kind, std::move(query), std::move(condition)};
  }

  std::string_view text_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

Property parse_property(std::string_view text) { return Parser(text).property(); }

StateFormula parse_formula(std::string_view text) {
  Property p = parse_property(text);
  if (!std::holds_alternative<StateFormula>(p))
    throw ParseError("a filter is not allowed here", 0, 1, 1);
  return std::get<StateFormula>(std::move(p));
}

}  // namespace tracestyles
