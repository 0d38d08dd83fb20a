#pragma once

// Synthetic trace corpora sampled from known models, plus independent
// reference implementations (Monte-Carlo, path enumeration, direct linear
// solves) used to cross-check the analyses.

#include "tracestyles/dtmc.hpp"
#include "tracestyles/gpam.hpp"
#include "tracestyles/trace.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tracestyles {

struct GeneratorSpec {
  std::size_t num_traces = 1;
  /// Sessions per trace, uniform on [min, max]. min must be at least 5.
  std::size_t min_sessions = 5;
  std::size_t max_sessions = 30;
  /// Longest session (markers included) before a stopS is forced.
  std::size_t max_events_per_session = 1000;
  std::uint64_t seed = 0;
  std::int64_t start_time = 0;
  std::int64_t session_gap_seconds = 3600;

  void validate() const;
};

struct GenerationReport {
  std::size_t traces = 0;
  std::size_t sessions = 0;
  std::size_t events = 0;
  std::size_t truncated_sessions = 0;
};

struct Generated {
  std::vector<UserTrace> traces;
  GenerationReport report;
};

/// Samples traces from the model: x0 ~ pi, y0 = startS, then x' ~ A(x,.) and
/// y' ~ B(x', y, .). Inside a session startS is excluded (its mass is
/// renormalised away); after stopS the next event is always startS, with the
/// latent step still drawn from A. Events are 1 second apart, sessions
/// session_gap_seconds apart. Trace k uses its own stream seeded by (seed, k).
Generated generate(const Gpam& model, const GeneratorSpec& spec);

std::string generation_report_json(const GenerationReport& report);

// ---- reference analyses ------------------------------------------------------

struct BoundedUntilQuery {
  StateSet phi1, phi2;
  std::size_t bound;
};
struct UntilQuery {
  StateSet phi1, phi2;
};
struct CumulativeRewardQuery {
  Vector reward;
  std::size_t bound;
};
struct ReachRewardQuery {
  Vector reward;
  StateSet target;
};
/// Long-run fraction of time spent in `phi`.
struct OccupancyQuery {
  StateSet phi;
};

using McQuery =
    std::variant<BoundedUntilQuery, UntilQuery, CumulativeRewardQuery, ReachRewardQuery, OccupancyQuery>;

struct McOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  /// Step cap per sampled path; for occupancy, the length of each long path.
  std::size_t horizon = 1000000;
  /// Start state; the initial distribution is sampled when unset.
  std::optional<std::size_t> start;
};

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
  /// Paths that hit the horizon before their outcome was decided.
  std::size_t censored = 0;

  double censoring_rate() const {
    return samples ? static_cast<double>(censored) / static_cast<double>(samples) : 0.0;
  }
};

/// Sample mean and standard error of the query by simulation. Reachability
/// walks stop early once the target has become unreachable, which the oracle
/// decides with its own transitive closure. A reach-reward walk that can no
/// longer reach the target makes the estimate +infinity. Occupancy estimates
/// the probability of each bottom class from `samples` walks and the in-class
/// frequency from one path of `horizon` steps per class (batch-means error).
McEstimate mc_estimate(const Dtmc& model, const McQuery& query, const McOptions& options);

/// Exhaustive enumeration of all paths of up to N steps. Requires at most 6
/// states and N <= 10; throws ArgumentError otherwise.
Vector brute_force_bounded(const Dtmc& model, const StateSet& phi1, const StateSet& phi2,
                           std::size_t N);
Vector brute_force_cumulative(const Dtmc& model, const Vector& reward, std::size_t N);

/// P(phi1 U phi2) and expected reach reward by LU factorisation of the linear
/// systems, with 0/1 states from a transitive closure. Reach rewards are
/// +infinity where the target is not reached almost surely.
Vector direct_until(const Dtmc& model, const StateSet& phi1, const StateSet& phi2);
Vector direct_reach_reward(const Dtmc& model, const Vector& reward, const StateSet& target);

/// Random chain: each row has a random support of size >= 1 (each entry kept
/// with probability `density`, the diagonal always eligible) and Dirichlet(1)
/// weights. Initial distribution concentrated on state 0.
Dtmc random_dtmc(std::size_t states, std::uint64_t seed, double density = 0.6);

/// Random GPAM with Dirichlet(1) parameters and startS never emitted inside
/// sessions: every stopS row puts all mass on startS.
Gpam random_gpam(const Vocabulary& vocab, std::size_t components, std::uint64_t seed);

}  // namespace tracestyles
