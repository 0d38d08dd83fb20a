#include "tracestyles/dtmc.hpp"

#include "tracestyles/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace tracestyles {

Dtmc::Dtmc(Matrix P, Vector init, Labelling labels)
    : P_(std::move(P)), init_(std::move(init)), labels_(std::move(labels)) {
  const auto m = P_.rows();
  if (m == 0 || P_.cols() != m) throw ArgumentError("transition matrix must be square and non-empty");
  if (init_.size() != m) throw ArgumentError("initial distribution has the wrong size");
  if (!is_row_stochastic(P_)) throw ArgumentError("transition matrix is not row-stochastic");
  if (!is_distribution(init_)) throw ArgumentError("initial distribution does not sum to 1");
  for (const auto& [name, set] : labels_.atoms)
    if (set.size() != static_cast<std::size_t>(m))
      throw ArgumentError("atom '" + name + "' has the wrong size");
  for (const auto& [name, r] : labels_.rewards) {
    if (r.size() != m) throw ArgumentError("reward '" + name + "' has the wrong size");
    RewardStructure check(r);
  }
  succ_.resize(m);
  pred_.resize(m);
  for (Eigen::Index s = 0; s < m; ++s)
    for (Eigen::Index t = 0; t < m; ++t)
      if (P_(s, t) > 0.0) {
        succ_[s].push_back({static_cast<std::size_t>(t), P_(s, t)});
        pred_[t].push_back(static_cast<std::size_t>(s));
      }
}

StateSet Dtmc::initial_support() const {
  StateSet out(size());
  for (std::size_t s = 0; s < size(); ++s)
    if (init_[s] > 0.0) out.insert(s);
  return out;
}

StateSet Dtmc::reachable() const {
  StateSet seen = initial_support();
  std::deque<std::size_t> queue;
  for (auto s : seen.members()) queue.push_back(s);
  while (!queue.empty()) {
    auto s = queue.front();
    queue.pop_front();
    for (const auto& e : succ_[s])
      if (!seen.contains(e.target)) {
        seen.insert(e.target);
        queue.push_back(e.target);
      }
  }
  return seen;
}

std::string Dtmc::transition_list() const {
  std::ostringstream out;
  for (std::size_t s = 0; s < size(); ++s)
    for (const auto& e : succ_[s]) out << s << ' ' << e.target << ' ' << format_double(e.probability) << '\n';
  return out.str();
}

RewardStructure::RewardStructure(Vector rewards) : state_reward(std::move(rewards)) {
  for (Eigen::Index i = 0; i < state_reward.size(); ++i)
    if (!std::isfinite(state_reward[i]) || state_reward[i] < 0.0)
      throw ArgumentError("rewards must be finite and non-negative");
}

namespace {

void check_size(const Dtmc& model, const StateSet& set) {
  if (set.size() != model.size()) throw ArgumentError("state set size does not match the model");
}

/// States that can reach `from` backwards while passing only through `through`.
StateSet backward_reach(const Dtmc& model, const StateSet& from, const StateSet& through) {
  StateSet seen = from;
  std::deque<std::size_t> queue;
  for (auto s : from.members()) queue.push_back(s);
  while (!queue.empty()) {
    auto s = queue.front();
    queue.pop_front();
    for (auto p : model.predecessors(s))
      if (!seen.contains(p) && through.contains(p)) {
        seen.insert(p);
        queue.push_back(p);
      }
  }
  return seen;
}

/// In-place Gauss-Seidel over `unknowns`: x_s = (b_s + sum_{t != s} P(s,t) x_t) / (1 - P(s,s)).
/// Returns the sweep count, or NonConvergent.
std::variant<std::size_t, NonConvergent> gauss_seidel(const Dtmc& model, const StateSet& unknowns,
                                                      const Vector& b, Vector& x,
                                                      const SolverSettings& settings) {
  const auto states = unknowns.members();
  if (states.empty()) return std::size_t{0};
  double change = 0.0;
  for (std::size_t it = 1; it <= settings.max_iterations; ++it) {
    change = 0.0;
    for (auto s : states) {
      double acc = b[s];
      double diag = 0.0;
      for (const auto& e : model.successors(s)) {
        if (e.target == s)
          diag = e.probability;
        else
          acc += e.probability * x[e.target];
      }
      const double updated = acc / (1.0 - diag);
      change = std::max(change, std::abs(updated - x[s]));
      x[s] = updated;
    }
    if (change < settings.tolerance) return it;
  }
  return NonConvergent{settings.max_iterations, change};
}

}  // namespace

Vector bounded_until(const Dtmc& model, const StateSet& phi1, const StateSet& phi2, std::size_t N) {
  check_size(model, phi1);
  check_size(model, phi2);
  const std::size_t m = model.size();
  Vector v = Vector::Zero(m);
  for (std::size_t s = 0; s < m; ++s)
    if (phi2.contains(s)) v[s] = 1.0;
  const StateSet maybe = phi1 & ~phi2;
  Vector next(m);
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t s = 0; s < m; ++s) {
      if (!maybe.contains(s)) {
        next[s] = v[s];
        continue;
      }
      double acc = 0.0;
      for (const auto& e : model.successors(s)) acc += e.probability * v[e.target];
      next[s] = acc;
    }
    std::swap(v, next);
  }
  return v;
}

Vector next_probability(const Dtmc& model, const StateSet& phi) {
  check_size(model, phi);
  Vector v = Vector::Zero(model.size());
  for (std::size_t s = 0; s < model.size(); ++s)
    for (const auto& e : model.successors(s))
      if (phi.contains(e.target)) v[s] += e.probability;
  return v;
}

StateSet prob0(const Dtmc& model, const StateSet& phi1, const StateSet& phi2) {
  check_size(model, phi1);
  check_size(model, phi2);
  return ~backward_reach(model, phi2, phi1);
}

StateSet prob1(const Dtmc& model, const StateSet& phi1, const StateSet& phi2) {
  const StateSet no = prob0(model, phi1, phi2);
  return ~backward_reach(model, no, phi1 & ~phi2);
}

Solved<Vector> unbounded_until(const Dtmc& model, const StateSet& phi1, const StateSet& phi2,
                               const SolverSettings& settings) {
  const StateSet no = prob0(model, phi1, phi2);
  const StateSet yes = prob1(model, phi1, phi2);
  const std::size_t m = model.size();
  Vector x = Vector::Zero(m);
  for (std::size_t s = 0; s < m; ++s)
    if (yes.contains(s)) x[s] = 1.0;
  const Vector b = Vector::Zero(m);
  auto solved = gauss_seidel(model, ~(no | yes), b, x, settings);
  if (auto* nc = std::get_if<NonConvergent>(&solved)) return *nc;
  return x;
}

Solved<Vector> reach_reward(const Dtmc& model, const RewardStructure& rewards,
                            const StateSet& target, const SolverSettings& settings) {
  check_size(model, target);
  const std::size_t m = model.size();
  if (static_cast<std::size_t>(rewards.state_reward.size()) != m)
    throw ArgumentError("reward vector size does not match the model");
  const StateSet sure = prob1(model, StateSet::all(m), target);
  Vector x = Vector::Zero(m);
  for (std::size_t s = 0; s < m; ++s)
    if (!sure.contains(s)) x[s] = std::numeric_limits<double>::infinity();
  auto solved = gauss_seidel(model, sure & ~target, rewards.state_reward, x, settings);
  if (auto* nc = std::get_if<NonConvergent>(&solved)) return *nc;
  return x;
}

Vector cumulative_reward(const Dtmc& model, const RewardStructure& rewards, std::size_t N) {
  const std::size_t m = model.size();
  if (static_cast<std::size_t>(rewards.state_reward.size()) != m)
    throw ArgumentError("reward vector size does not match the model");
  Vector v = Vector::Zero(m), next(m);
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t s = 0; s < m; ++s) {
      double acc = rewards.state_reward[s];
      for (const auto& e : model.successors(s)) acc += e.probability * v[e.target];
      next[s] = acc;
    }
    std::swap(v, next);
  }
  return v;
}

std::vector<StateSet> bottom_sccs(const Dtmc& model) {
  // Tarjan's algorithm, iterative.
  const std::size_t m = model.size();
  constexpr std::size_t unvisited = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(m, unvisited), low(m, 0), component(m, unvisited);
  std::vector<bool> on_stack(m, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> sccs;
  std::size_t counter = 0;

  struct Frame {
    std::size_t state;
    std::size_t next_edge;
  };
  for (std::size_t root = 0; root < m; ++root) {
    if (index[root] != unvisited) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& frame = call.back();
      const auto& edges = model.successors(frame.state);
      if (frame.next_edge < edges.size()) {
        const auto t = edges[frame.next_edge++].target;
        if (index[t] == unvisited) {
          index[t] = low[t] = counter++;
          stack.push_back(t);
          on_stack[t] = true;
          call.push_back({t, 0});
        } else if (on_stack[t]) {
          low[frame.state] = std::min(low[frame.state], index[t]);
        }
        continue;
      }
      const auto s = frame.state;
      call.pop_back();
      if (!call.empty()) low[call.back().state] = std::min(low[call.back().state], low[s]);
      if (low[s] == index[s]) {
        std::vector<std::size_t> scc;
        std::size_t t;
        do {
          t = stack.back();
          stack.pop_back();
          on_stack[t] = false;
          component[t] = sccs.size();
          scc.push_back(t);
        } while (t != s);
        sccs.push_back(std::move(scc));
      }
    }
  }

  std::vector<StateSet> bottoms;
  for (std::size_t c = 0; c < sccs.size(); ++c) {
    bool closed = true;
    for (auto s : sccs[c])
      for (const auto& e : model.successors(s))
        if (component[e.target] != c) closed = false;
    if (!closed) continue;
    StateSet set(m);
    for (auto s : sccs[c]) set.insert(s);
    bottoms.push_back(std::move(set));
  }
  std::sort(bottoms.begin(), bottoms.end(), [](const StateSet& a, const StateSet& b) {
    return a.members().front() < b.members().front();
  });
  return bottoms;
}

namespace {

/// Stationary distribution of one closed class, by Gauss-Seidel on pi = pi P.
Solved<Vector> bscc_stationary(const Dtmc& model, const StateSet& bscc,
                               const SolverSettings& settings) {
  const std::size_t m = model.size();
  const auto states = bscc.members();
  Vector pi = Vector::Zero(m);
  for (auto s : states) pi[s] = 1.0 / static_cast<double>(states.size());
  if (states.size() == 1) return pi;

  double change = 0.0;
  Vector previous = pi;
  for (std::size_t it = 1; it <= settings.max_iterations; ++it) {
    for (auto j : states) {
      double acc = 0.0;
      for (auto i : model.predecessors(j))
        if (i != j) acc += pi[i] * model.P()(i, j);
      pi[j] = acc / (1.0 - model.P()(j, j));
    }
    const double total = pi.sum();
    change = 0.0;
    for (auto s : states) {
      pi[s] /= total;
      change = std::max(change, std::abs(pi[s] - previous[s]));
      previous[s] = pi[s];
    }
    if (change < settings.tolerance) return pi;
  }
  return NonConvergent{settings.max_iterations, change};
}

struct LongRunParts {
  std::vector<Vector> stationary;  // per BSCC, over all states
  std::vector<Vector> absorption;  // per BSCC, P(reach it) per state
};

Solved<LongRunParts> long_run_parts(const Dtmc& model, const SolverSettings& settings) {
  LongRunParts parts;
  const auto all = StateSet::all(model.size());
  for (const auto& bscc : bottom_sccs(model)) {
    auto st = bscc_stationary(model, bscc, settings);
    if (auto* nc = std::get_if<NonConvergent>(&st)) return *nc;
    auto reach = unbounded_until(model, all, bscc, settings);
    if (auto* nc = std::get_if<NonConvergent>(&reach)) return *nc;
    parts.stationary.push_back(std::get<Vector>(std::move(st)));
    parts.absorption.push_back(std::get<Vector>(std::move(reach)));
  }
  return parts;
}

}  // namespace

Solved<Vector> steady_state(const Dtmc& model, const SolverSettings& settings) {
  auto parts = long_run_parts(model, settings);
  if (auto* nc = std::get_if<NonConvergent>(&parts)) return *nc;
  const auto& p = std::get<LongRunParts>(parts);
  Vector out = Vector::Zero(model.size());
  for (std::size_t b = 0; b < p.stationary.size(); ++b)
    out += model.init().dot(p.absorption[b]) * p.stationary[b];
  return out;
}

Solved<Vector> long_run_probability(const Dtmc& model, const StateSet& phi,
                                    const SolverSettings& settings) {
  check_size(model, phi);
  auto parts = long_run_parts(model, settings);
  if (auto* nc = std::get_if<NonConvergent>(&parts)) return *nc;
  const auto& p = std::get<LongRunParts>(parts);
  Vector out = Vector::Zero(model.size());
  for (std::size_t b = 0; b < p.stationary.size(); ++b) {
    double mass = 0.0;
    for (auto s : phi.members()) mass += p.stationary[b][s];
    out += mass * p.absorption[b];
  }
  return out;
}

}  // namespace tracestyles
