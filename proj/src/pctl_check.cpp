#include "tracestyles/error.hpp"
#include "tracestyles/pctl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tracestyles {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Thrown inside the evaluator when a solver hits its cap.
struct NonConvergentSignal {
  NonConvergent detail;
};

template <class T>
T unwrap(Solved<T> solved) {
  if (auto* nc = std::get_if<NonConvergent>(&solved)) throw NonConvergentSignal{*nc};
  return std::get<T>(std::move(solved));
}

bool compare(double value, Comparison op, double bound) {
  switch (op) {
    case Comparison::Less: return value < bound;
    case Comparison::LessEqual: return value <= bound;
    case Comparison::Greater: return value > bound;
    case Comparison::GreaterEqual: return value >= bound;
  }
  return false;
}

StateSet threshold(const Vector& values, Comparison op, double bound) {
  StateSet out(static_cast<std::size_t>(values.size()));
  for (Eigen::Index s = 0; s < values.size(); ++s)
    if (compare(values[s], op, bound)) out.insert(static_cast<std::size_t>(s));
  return out;
}

class Evaluator {
 public:
  Evaluator(const Dtmc& model, const SolverSettings& settings)
      : model_(model), settings_(settings), all_(StateSet::all(model.size())) {}

  StateValues state(const StateFormula& f) {
    return std::visit([this](const auto& node) -> StateValues { return eval(node); }, f.node);
  }

  StateSet sat(const StateFormula& f) {
    auto v = state(f);
    if (auto* set = std::get_if<StateSet>(&v)) return std::move(*set);
    throw FormulaError("expected a Boolean formula but '" + to_string(f) + "' is numeric");
  }

  Vector values(const StateFormula& f) {
    auto v = state(f);
    if (auto* vec = std::get_if<Vector>(&v)) return std::move(*vec);
    throw FormulaError("expected a numeric query but '" + to_string(f) + "' is Boolean");
  }

 private:
  StateValues eval(const True&) { return all_; }

  StateValues eval(const Atom& a) {
    const auto& atoms = model_.labels().atoms;
    const auto it = atoms.find(a.name);
    if (it == atoms.end()) throw FormulaError("unknown atom '" + a.name + "'");
    return it->second;
  }

  StateValues eval(const Not& n) { return ~sat(*n.operand); }
  StateValues eval(const And& a) { return sat(*a.lhs) & sat(*a.rhs); }

  StateValues eval(const ProbCompare& p) {
    if (auto qualitative = qualitative_check(*p.path, p.op, p.bound)) return *qualitative;
    return threshold(path_values(*p.path), p.op, p.bound);
  }
  StateValues eval(const ProbQuery& p) { return path_values(*p.path); }

  StateValues eval(const SteadyCompare& s) {
    return threshold(unwrap(long_run_probability(model_, sat(*s.operand), settings_)), s.op, s.bound);
  }
  StateValues eval(const SteadyQuery& s) {
    return unwrap(long_run_probability(model_, sat(*s.operand), settings_));
  }

  StateValues eval(const RewardReach& r) {
    return unwrap(reach_reward(model_, reward(r.reward), sat(*r.target), settings_));
  }
  StateValues eval(const RewardCumulative& r) {
    return cumulative_reward(model_, reward(r.reward), r.bound);
  }

  RewardStructure reward(const std::string& name) const {
    const auto& rewards = model_.labels().rewards;
    if (const auto it = rewards.find(name); it != rewards.end()) return RewardStructure(it->second);
    if (name == "rSteps") return RewardStructure::unit(model_.size());
    constexpr std::string_view prefix = "rState";
    if (name.rfind(prefix, 0) == 0) {
      const auto& atoms = model_.labels().atoms;
      if (const auto it = atoms.find("y=" + name.substr(prefix.size())); it != atoms.end()) {
        Vector r = Vector::Zero(model_.size());
        for (auto s : it->second.members()) r[s] = 1.0;
        return RewardStructure(std::move(r));
      }
    }
    throw FormulaError("unknown reward '" + name + "'");
  }

  Vector path_values(const PathFormula& p) {
    if (const auto* n = std::get_if<Next>(&p.node)) return next_probability(model_, sat(*n->operand));
    if (const auto* u = std::get_if<Until>(&p.node)) {
      const StateSet lhs = sat(*u->lhs), rhs = sat(*u->rhs);
      if (u->bound) return bounded_until(model_, lhs, rhs, *u->bound);
      return unwrap(unbounded_until(model_, lhs, rhs, settings_));
    }
    const auto& g = std::get<Globally>(p.node);
    const StateSet bad = ~sat(*g.operand);
    Vector reach = g.bound ? bounded_until(model_, all_, bad, *g.bound)
                           : unwrap(unbounded_until(model_, all_, bad, settings_));
    return Vector::Ones(model_.size()) - reach;
  }

  // Exact graph-based answers for P>=1 and P>0 over unbounded paths.
  std::optional<StateSet> qualitative_check(const PathFormula& p, Comparison op, double bound) {
    const bool almost_sure = op == Comparison::GreaterEqual && bound == 1.0;
    const bool positive = op == Comparison::Greater && bound == 0.0;
    if (!almost_sure && !positive) return std::nullopt;
    if (const auto* u = std::get_if<Until>(&p.node); u && !u->bound) {
      const StateSet lhs = sat(*u->lhs), rhs = sat(*u->rhs);
      return almost_sure ? prob1(model_, lhs, rhs) : ~prob0(model_, lhs, rhs);
    }
    if (const auto* g = std::get_if<Globally>(&p.node); g && !g->bound) {
      const StateSet bad = ~sat(*g->operand);
      // P(G phi) = 1 - P(F !phi)
      return almost_sure ? prob0(model_, all_, bad) : ~prob1(model_, all_, bad);
    }
    return std::nullopt;
  }

  const Dtmc& model_;
  const SolverSettings& settings_;
  const StateSet all_;
};

PropertyResult at_state(const StateValues& v, std::size_t s) {
  if (const auto* set = std::get_if<StateSet>(&v)) return Boolean{set->contains(s)};
  const double x = std::get<Vector>(v)[s];
  if (std::isinf(x)) return Infinite{};
  return Value{x};
}

PropertyResult at_initial(const Dtmc& model, const StateValues& v) {
  const auto support = model.initial_support().members();
  if (const auto* set = std::get_if<StateSet>(&v)) {
    return Boolean{std::all_of(support.begin(), support.end(),
                               [&](std::size_t s) { return set->contains(s); })};
  }
  const auto& values = std::get<Vector>(v);
  double total = 0.0;
  for (auto s : support) {
    if (std::isinf(values[s])) return Infinite{};
    total += model.init()[s] * values[s];
  }
  return Value{total};
}

PropertyResult apply_filter(const FilterExpr& f, Evaluator& ev, const StateSet& scope) {
  const StateSet condition = ev.sat(f.condition);
  if (condition.empty()) return NotAvailable{Unavailable::FilterEmpty};
  const auto states = (condition & scope).members();
  if (states.empty()) return NotAvailable{Unavailable::Unreachable};
  const StateValues query = ev.state(f.query);

  if (f.kind == FilterKind::State) {
    if (states.size() > 1)
      throw FormulaError("filter(state, ...) condition '" + to_string(f.condition) + "' matches " +
                         std::to_string(states.size()) + " states");
    return at_state(query, states.front());
  }
  if (!std::holds_alternative<Vector>(query))
    throw FormulaError("filter(min|max|avg|sum, ...) needs a numeric query");
  const auto& values = std::get<Vector>(query);
  double lo = kInf, hi = -kInf, sum = 0.0;
  for (auto s : states) {
    lo = std::min(lo, values[s]);
    hi = std::max(hi, values[s]);
    sum += values[s];
  }
  double out = 0.0;
  switch (f.kind) {
    case FilterKind::Min: out = lo; break;
    case FilterKind::Max: out = hi; break;
    case FilterKind::Avg: out = sum / static_cast<double>(states.size()); break;
    default: out = sum; break;
  }
  if (std::isinf(out)) return Infinite{};
  return Value{out};
}

}  // namespace

Solved<StateValues> evaluate(const Dtmc& model, const StateFormula& formula,
                             const SolverSettings& settings) {
  try {
    return Evaluator(model, settings).state(formula);
  } catch (const NonConvergentSignal& nc) {
    return nc.detail;
  }
}

PropertyResult check(const Dtmc& model, const Property& property, const SolverSettings& settings) {
  try {
    Evaluator ev(model, settings);
    if (const auto* f = std::get_if<FilterExpr>(&property))
      return apply_filter(*f, ev, model.reachable());
    return at_initial(model, ev.state(std::get<StateFormula>(property)));
  } catch (const NonConvergentSignal&) {
    return NotAvailable{Unavailable::NonConvergent};
  }
}

PropertyResult check(const Dtmc& model, const Property& property, const StateFormula& at,
                     const SolverSettings& settings) {
  try {
    Evaluator ev(model, settings);
    const auto states = ev.sat(at).members();
    if (states.empty()) return NotAvailable{Unavailable::FilterEmpty};
    if (states.size() > 1)
      throw FormulaError("state condition '" + to_string(at) + "' matches " +
                         std::to_string(states.size()) + " states");
    StateSet only(model.size());
    only.insert(states.front());
    if (const auto* f = std::get_if<FilterExpr>(&property)) return apply_filter(*f, ev, only);
    return at_state(ev.state(std::get<StateFormula>(property)), states.front());
  } catch (const NonConvergentSignal&) {
    return NotAvailable{Unavailable::NonConvergent};
  }
}

PropertyResult check_state(const Dtmc& model, const StateFormula& formula, std::size_t state,
                           const SolverSettings& settings) {
  if (state >= model.size()) throw ArgumentError("state index out of range");
  try {
    return at_state(Evaluator(model, settings).state(formula), state);
  } catch (const NonConvergentSignal&) {
    return NotAvailable{Unavailable::NonConvergent};
  }
}

}  // namespace tracestyles
