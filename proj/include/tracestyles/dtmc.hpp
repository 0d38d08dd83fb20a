#pragma once

// Explicit-state DTMC analyses: bounded and unbounded reachability,
// reachability and cumulative rewards, and long-run (steady-state) behaviour.

#include "tracestyles/numeric.hpp"

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace tracestyles {

/// Named atomic propositions and reward structures attached to a model.
struct Labelling {
  std::map<std::string, StateSet> atoms;
  std::map<std::string, Vector> rewards;
};

class Dtmc {
 public:
  struct Edge {
    std::size_t target;
    double probability;
  };

  /// Validates: P square and row-stochastic (1e-9), init a distribution,
  /// atom sets and reward vectors sized to the state count, rewards >= 0.
  Dtmc(Matrix P, Vector init, Labelling labels = {});

  std::size_t size() const noexcept { return static_cast<std::size_t>(P_.rows()); }
  const Matrix& P() const noexcept { return P_; }
  const Vector& init() const noexcept { return init_; }
  const Labelling& labels() const noexcept { return labels_; }

  /// Positive-probability edges, in target order.
  const std::vector<Edge>& successors(std::size_t s) const { return succ_[s]; }
  const std::vector<std::size_t>& predecessors(std::size_t s) const { return pred_[s]; }

  StateSet initial_support() const;
  /// States reachable from the support of the initial distribution.
  StateSet reachable() const;

  /// One "src dst prob" line per positive transition.
  std::string transition_list() const;

 private:
  Matrix P_;
  Vector init_;
  Labelling labels_;
  std::vector<std::vector<Edge>> succ_;
  std::vector<std::vector<std::size_t>> pred_;
};

/// Non-negative, finite reward collected in each state.
struct RewardStructure {
  Vector state_reward;

  explicit RewardStructure(Vector rewards);
  static RewardStructure unit(std::size_t states) { return RewardStructure(Vector::Ones(states)); }
};

/// Convergence settings for the iterative solvers (Gauss-Seidel sweeps).
struct SolverSettings {
  double tolerance = 1e-10;         // absolute max change between sweeps
  std::size_t max_iterations = 100000;
};

/// The iterative method hit its cap before meeting the tolerance.
struct NonConvergent {
  std::size_t iterations = 0;
  double last_change = 0.0;
};

template <class T>
using Solved = std::variant<T, NonConvergent>;

/// P(phi1 U<=N phi2) per state, by N backward iterations.
Vector bounded_until(const Dtmc& model, const StateSet& phi1, const StateSet& phi2, std::size_t N);

/// P(X phi) per state.
Vector next_probability(const Dtmc& model, const StateSet& phi);

/// States where P(phi1 U phi2) is exactly 0 / exactly 1 (graph-based).
StateSet prob0(const Dtmc& model, const StateSet& phi1, const StateSet& phi2);
StateSet prob1(const Dtmc& model, const StateSet& phi1, const StateSet& phi2);

/// P(phi1 U phi2) per state. Qualitative precomputation fixes the 0/1 states;
/// the rest are solved by Gauss-Seidel.
Solved<Vector> unbounded_until(const Dtmc& model, const StateSet& phi1, const StateSet& phi2,
                               const SolverSettings& settings = {});

/// Expected reward accumulated before first entering `target`. Entries are
/// +infinity where the target is reached with probability below one.
Solved<Vector> reach_reward(const Dtmc& model, const RewardStructure& rewards,
                            const StateSet& target, const SolverSettings& settings = {});

/// Expected reward collected in the states occupied at steps 0..N-1.
Vector cumulative_reward(const Dtmc& model, const RewardStructure& rewards, std::size_t N);

/// Strongly connected components that cannot be left, each as a state set.
std::vector<StateSet> bottom_sccs(const Dtmc& model);

/// Long-run occupation distribution from the initial distribution: stationary
/// vector of each BSCC weighted by its absorption probability.
Solved<Vector> steady_state(const Dtmc& model, const SolverSettings& settings = {});

/// Long-run probability of being in `phi`, per starting state.
Solved<Vector> long_run_probability(const Dtmc& model, const StateSet& phi,
                                    const SolverSettings& settings = {});

}  // namespace tracestyles
