#pragma once

// Probabilistic temporal logic with rewards: formula AST, a textual property
// language, and the evaluator over explicit DTMCs.

#include "tracestyles/dtmc.hpp"
#include "tracestyles/gpam.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tracestyles {

/// Immutable shared node with structural equality.
template <class T>
class Box {
 public:
  Box(T value) : ptr_(std::make_shared<const T>(std::move(value))) {}  // NOLINT implicit

  const T& operator*() const { return *ptr_; }
  const T* operator->() const { return ptr_.get(); }
  bool operator==(const Box& other) const { return ptr_ == other.ptr_ || *ptr_ == *other.ptr_; }

 private:
  std::shared_ptr<const T> ptr_;
};

struct StateFormula;
struct PathFormula;

enum class Comparison { Less, LessEqual, Greater, GreaterEqual };

struct True {
  bool operator==(const True&) const = default;
};
/// Named state set: "y=<label>", "x=<component>", "group=<name>" or any
/// other name present in the model's labelling.
struct Atom {
  std::string name;
  bool operator==(const Atom&) const = default;
};
struct Not {
  Box<StateFormula> operand;
  bool operator==(const Not&) const = default;
};
struct And {
  Box<StateFormula> lhs;
  Box<StateFormula> rhs;
  bool operator==(const And&) const = default;
};
struct ProbCompare {
  Comparison op;
  double bound;
  Box<PathFormula> path;
  bool operator==(const ProbCompare&) const = default;
};
struct ProbQuery {
  Box<PathFormula> path;
  bool operator==(const ProbQuery&) const = default;
};
struct SteadyCompare {
  Comparison op;
  double bound;
  Box<StateFormula> operand;
  bool operator==(const SteadyCompare&) const = default;
};
struct SteadyQuery {
  Box<StateFormula> operand;
  bool operator==(const SteadyQuery&) const = default;
};
/// R{reward}=?[ F target ]
struct RewardReach {
  std::string reward;
  Box<StateFormula> target;
  bool operator==(const RewardReach&) const = default;
};
/// R{reward}=?[ C<=bound ]
struct RewardCumulative {
  std::string reward;
  std::size_t bound;
  bool operator==(const RewardCumulative&) const = default;
};

struct StateFormula {
  std::variant<True, Atom, Not, And, ProbCompare, ProbQuery, SteadyCompare, SteadyQuery,
               RewardReach, RewardCumulative>
      node;
  bool operator==(const StateFormula&) const = default;
};

struct Next {
  Box<StateFormula> operand;
  bool operator==(const Next&) const = default;
};
/// lhs U rhs, or lhs U<=bound rhs. F phi is true U phi.
struct Until {
  Box<StateFormula> lhs;
  Box<StateFormula> rhs;
  std::optional<std::size_t> bound;
  bool operator==(const Until&) const = default;
};
/// G phi, i.e. !F !phi.
struct Globally {
  Box<StateFormula> operand;
  std::optional<std::size_t> bound;
  bool operator==(const Globally&) const = default;
};

struct PathFormula {
  std::variant<Next, Until, Globally> node;
  bool operator==(const PathFormula&) const = default;
};

enum class FilterKind { State, Min, Max, Avg, Sum };

/// filter(kind, query, condition)
struct FilterExpr {
  FilterKind kind;
  StateFormula query;
  StateFormula condition;
  bool operator==(const FilterExpr&) const = default;
};

using Property = std::variant<StateFormula, FilterExpr>;

// Builders for the common shapes.
StateFormula make_true();
StateFormula make_false();
StateFormula make_atom(std::string name);
StateFormula make_not(StateFormula operand);
StateFormula make_and(StateFormula lhs, StateFormula rhs);
StateFormula make_or(StateFormula lhs, StateFormula rhs);
StateFormula make_implies(StateFormula lhs, StateFormula rhs);
PathFormula make_eventually(StateFormula target, std::optional<std::size_t> bound = std::nullopt);

/// Parses one property. Throws ParseError with line/column on bad syntax.
Property parse_property(std::string_view text);
/// As parse_property, but a filter is rejected.
StateFormula parse_formula(std::string_view text);

/// Canonical text; parse_property(to_string(p)) == p.
std::string to_string(const StateFormula& formula);
std::string to_string(const PathFormula& formula);
std::string to_string(const Property& property);

/// A label as it may appear after "y=": bare when it is a plain word
/// ([A-Za-z0-9_.-]+), otherwise double-quoted with \" and \\ escapes.
std::string format_label(std::string_view label);

/// Lines of a property file with comments (#) and blank lines removed.
std::vector<std::string> read_property_lines(std::string_view text);

/// Replaces every ${name} by its value. Unknown names throw ArgumentError.
std::string expand_template(std::string_view text, const std::map<std::string, std::string>& values);

// ---- evaluation -----------------------------------------------------------

enum class Unavailable { Unreachable, FilterEmpty, NonConvergent };

struct Value {
  double value;
  bool operator==(const Value&) const = default;
};
struct Boolean {
  bool value;
  bool operator==(const Boolean&) const = default;
};
struct Infinite {
  bool operator==(const Infinite&) const = default;
};
struct NotAvailable {
  Unavailable reason;
  bool operator==(const NotAvailable&) const = default;
};

using PropertyResult = std::variant<Value, Boolean, Infinite, NotAvailable>;

/// Table text: shortest round-trip number, true/false, and "---" for both
/// Infinite and NotAvailable.
std::string render(const PropertyResult& result);
std::string_view reason_name(Unavailable reason);

/// Per-state meaning of a state formula: a satisfaction set or a value vector
/// (entries may be +infinity for reachability rewards).
using StateValues = std::variant<StateSet, Vector>;

/// Evaluates a formula in every state. Reward "rSteps" defaults to one per
/// state and "rState<L>" to the indicator of atom "y=<L>" when the model does
/// not define them. Throws FormulaError for unknown atoms/rewards.
Solved<StateValues> evaluate(const Dtmc& model, const StateFormula& formula,
                             const SolverSettings& settings = {});

/// Value from the initial distribution: queries are init-weighted, Boolean
/// formulas must hold in every initial state. Filters range over the states
/// reachable from the initial distribution.
PropertyResult check(const Dtmc& model, const Property& property,
                     const SolverSettings& settings = {});

/// Value at the unique state satisfying `at` (over all states, reachable or not).
/// No match gives NotAvailable(filter-empty); several matches throw FormulaError.
PropertyResult check(const Dtmc& model, const Property& property, const StateFormula& at,
                     const SolverSettings& settings = {});

/// Value of a state formula at one given state.
PropertyResult check_state(const Dtmc& model, const StateFormula& formula, std::size_t state,
                           const SolverSettings& settings = {});

// ---- atoms ----------------------------------------------------------------

/// Named groups of labels, e.g. {"Summary": ["Stats", ...]}. Groups may overlap.
struct Grouping {
  std::map<std::string, std::vector<std::string>> groups;

  /// JSON object of arrays of labels.
  static Grouping parse(std::string_view json_text);
};

/// "y=<label>" for every label, "group=<name>" per group, and rewards
/// "rSteps" and "rState<label>". Throws ArgumentError for unknown group labels.
Labelling atoms_for(const ActivityPatternDtmc& pattern, const Grouping& grouping = {});
/// As above over product states, plus "x=<i>" for every component.
Labelling atoms_for(const ProductChain& chain, const Grouping& grouping = {});

Dtmc to_dtmc(const ActivityPatternDtmc& pattern, const Grouping& grouping = {});
Dtmc to_dtmc(const ProductChain& chain, const Grouping& grouping = {});

}  // namespace tracestyles
