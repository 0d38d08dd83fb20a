#include "tracestyles/error.hpp"
#include "tracestyles/pctl.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace tracestyles {

StateFormula make_true() { return {True{}}; }
StateFormula make_false() { return make_not(make_true()); }
StateFormula make_atom(std::string name) { return {Atom{std::move(name)}}; }
StateFormula make_not(StateFormula operand) { return {Not{std::move(operand)}}; }
StateFormula make_and(StateFormula lhs, StateFormula rhs) {
  return {And{std::move(lhs), std::move(rhs)}};
}
StateFormula make_or(StateFormula lhs, StateFormula rhs) {
  return make_not(make_and(make_not(std::move(lhs)), make_not(std::move(rhs))));
}
StateFormula make_implies(StateFormula lhs, StateFormula rhs) {
  return make_not(make_and(std::move(lhs), make_not(std::move(rhs))));
}
PathFormula make_eventually(StateFormula target, std::optional<std::size_t> bound) {
  return {Until{make_true(), std::move(target), bound}};
}

namespace {

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

const std::set<std::string, std::less<>>& keywords() {
  static const std::set<std::string, std::less<>> k{"true", "false", "filter", "U", "F", "G",
                                                    "X",    "P",     "S",      "R", "C"};
  return k;
}

bool is_word(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), word_char);
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string word_or_quoted(std::string_view s) { return is_word(s) ? std::string(s) : quote(s); }

std::string atom_text(const std::string& name) {
  if (is_word(name) && !keywords().count(name)) return name;
  const auto eq = name.find('=');
  if (eq != std::string::npos) {
    const std::string_view prefix(name.data(), eq);
    if (is_word(prefix) && !keywords().count(prefix))
      return std::string(prefix) + "=" + word_or_quoted(std::string_view(name).substr(eq + 1));
  }
  return quote(name);
}

std::string comparison_text(Comparison op) {
  switch (op) {
    case Comparison::Less: return "<";
    case Comparison::LessEqual: return "<=";
    case Comparison::Greater: return ">";
    case Comparison::GreaterEqual: return ">=";
  }
  return "?";
}

std::string bound_text(const std::optional<std::size_t>& bound) {
  return bound ? "<=" + std::to_string(*bound) : std::string();
}

std::string_view filter_kind_text(FilterKind kind) {
  switch (kind) {
    case FilterKind::State: return "state";
    case FilterKind::Min: return "min";
    case FilterKind::Max: return "max";
    case FilterKind::Avg: return "avg";
    case FilterKind::Sum: return "sum";
  }
  return "?";
}

struct Printer {
  std::string operator()(const True&) const { return "true"; }
  std::string operator()(const Atom& a) const { return atom_text(a.name); }
  std::string operator()(const Not& n) const { return "!" + to_string(*n.operand); }
  std::string operator()(const And& a) const {
    return "(" + to_string(*a.lhs) + " & " + to_string(*a.rhs) + ")";
  }
  std::string operator()(const ProbCompare& p) const {
    return "P" + comparison_text(p.op) + format_double(p.bound) + "[ " + to_string(*p.path) + " ]";
  }
  std::string operator()(const ProbQuery& p) const { return "P=?[ " + to_string(*p.path) + " ]"; }
  std::string operator()(const SteadyCompare& s) const {
    return "S" + comparison_text(s.op) + format_double(s.bound) + "[ " + to_string(*s.operand) +
           " ]";
  }
  std::string operator()(const SteadyQuery& s) const {
    return "S=?[ " + to_string(*s.operand) + " ]";
  }
  std::string operator()(const RewardReach& r) const {
    return "R{" + word_or_quoted(r.reward) + "}=?[ F " + to_string(*r.target) + " ]";
  }
  std::string operator()(const RewardCumulative& r) const {
    return "R{" + word_or_quoted(r.reward) + "}=?[ C<=" + std::to_string(r.bound) + " ]";
  }
  std::string operator()(const Next& n) const { return "X " + to_string(*n.operand); }
  std::string operator()(const Until& u) const {
    return to_string(*u.lhs) + " U" + bound_text(u.bound) + " " + to_string(*u.rhs);
  }
  std::string operator()(const Globally& g) const {
    return "G" + bound_text(g.bound) + " " + to_string(*g.operand);
  }
};

}  // namespace

std::string format_label(std::string_view label) { return word_or_quoted(label); }

std::string to_string(const StateFormula& formula) { return std::visit(Printer{}, formula.node); }
std::string to_string(const PathFormula& formula) { return std::visit(Printer{}, formula.node); }

std::string to_string(const Property& property) {
  if (const auto* f = std::get_if<FilterExpr>(&property))
    return "filter(" + std::string(filter_kind_text(f->kind)) + ", " + to_string(f->query) + ", " +
           to_string(f->condition) + ")";
  return to_string(std::get<StateFormula>(property));
}

std::vector<std::string> read_property_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line;
    bool in_string = false;
    for (std::size_t i = pos; i < end; ++i) {
      const char c = text[i];
      if (!in_string && c == '#') break;
      if (c == '"' && (i == pos || text[i - 1] != '\\')) in_string = !in_string;
      line += c;
    }
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos) {
      const auto last = line.find_last_not_of(" \t\r");
      lines.push_back(line.substr(first, last - first + 1));
    }
    pos = end + 1;
  }
  return lines;
}

std::string expand_template(std::string_view text, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("${", pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find('}', open);
    if (close == std::string_view::npos) throw ArgumentError("unterminated ${...} in property template");
    const std::string name(text.substr(open + 2, close - open - 2));
    const auto it = values.find(name);
    if (it == values.end()) throw ArgumentError("no value for template parameter ${" + name + "}");
    out.append(text.substr(pos, open - pos));
    out += it->second;
    pos = close + 1;
  }
  out.append(text.substr(pos));
  return out;
}

std::string_view reason_name(Unavailable reason) {
  switch (reason) {
    case Unavailable::Unreachable: return "unreachable";
    case Unavailable::FilterEmpty: return "filter-empty";
    case Unavailable::NonConvergent: return "non-convergent";
  }
  return "?";
}

std::string render(const PropertyResult& result) {
  if (const auto* v = std::get_if<Value>(&result)) return format_double(v->value);
  if (const auto* b = std::get_if<Boolean>(&result)) return b->value ? "true" : "false";
  return "---";
}

}  // namespace tracestyles
