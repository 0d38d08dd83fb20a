#include "helpers.hpp"

#include "tracestyles/error.hpp"

#include <doctest.h>

using namespace tracestyles;
using testing::abc_vocab;

namespace {

GeneratorSpec spec_for(std::size_t traces, std::uint64_t seed) {
  GeneratorSpec s;
  s.num_traces = traces;
  s.min_sessions = 5;
  s.max_sessions = 9;
  s.seed = seed;
  return s;
}

Dtmc chain(const Matrix& P) { return Dtmc(P, Vector::Unit(P.rows(), 0)); }

bool within(const McEstimate& e, double exact, double floor = 1e-3) {
  return std::abs(e.estimate - exact) <= std::max(4.0 * e.standard_error, floor);
}

}  // namespace

TEST_CASE("generator spec validation") {
  GeneratorSpec s;
  CHECK_NOTHROW(s.validate());
  s.min_sessions = 4;
  CHECK_THROWS_AS(s.validate(), ArgumentError);
  s.min_sessions = 10;
  s.max_sessions = 9;
  CHECK_THROWS_AS(s.validate(), ArgumentError);
  s = {};
  s.num_traces = 0;
  CHECK_THROWS_AS(s.validate(), ArgumentError);
  s = {};
  s.max_events_per_session = 2;
  CHECK_THROWS_AS(s.validate(), ArgumentError);
}

TEST_CASE("generated traces are deterministic per trace") {
  const Gpam m = random_gpam(abc_vocab(), 2, 1);
  const auto a = generate(m, spec_for(20, 5));
  const auto b = generate(m, spec_for(20, 5));
  CHECK(a.traces == b.traces);
  CHECK_FALSE(a.traces == generate(m, spec_for(20, 6)).traces);
  // Trace k depends on (seed, k) only, not on how many traces are drawn.
  const auto more = generate(m, spec_for(50, 5));
  for (std::size_t k = 0; k < 20; ++k) CHECK(more.traces[k] == a.traces[k]);
}

TEST_CASE("generated sessions are well formed") {
  const Gpam m = random_gpam(abc_vocab(), 3, 2);
  auto spec = spec_for(40, 2);
  spec.start_time = 1000;
  const auto g = generate(m, spec);
  CHECK(g.report.traces == 40);
  std::size_t sessions = 0, events = 0;
  for (const auto& t : g.traces) {
    CHECK(t.sessions.size() >= 5);
    CHECK(t.sessions.size() <= 9);
    CHECK(t.origin == std::optional<std::int64_t>{1000});
    CHECK(t.sessions.front().start_time() == 1000);
    sessions += t.sessions.size();
    for (std::size_t s = 0; s < t.sessions.size(); ++s) {
      const auto& ev = t.sessions[s].events;
      events += ev.size();
      CHECK(ev.front().label == "startS");
      CHECK(ev.back().label == "stopS");
      for (std::size_t i = 1; i < ev.size(); ++i) {
        CHECK(ev[i].timestamp == ev[i - 1].timestamp + 1);
        if (i + 1 < ev.size()) {
          CHECK(ev[i].label != "startS");
          CHECK(ev[i].label != "stopS");
        }
      }
      if (s > 0) CHECK(ev.front().timestamp == t.sessions[s - 1].end_time() + 3600);
    }
  }
  CHECK(g.report.sessions == sessions);
  CHECK(g.report.events == events);

  const auto parsed = parse_traces(write_traces(g.traces));
  CHECK(parsed.traces == g.traces);
  CHECK(parsed.report.total() == 0);
}

TEST_CASE("K = 1 bigram frequencies approach the emission matrix") {
  const Gpam m = random_gpam(abc_vocab(), 1, 9);
  auto spec = spec_for(10000, 9);
  const auto g = generate(m, spec);
  Matrix counts = Matrix::Zero(5, 5);
  for (const auto& t : g.traces) counts += count_bigrams(t, m.vocab()).counts.cast<double>();
  for (Eigen::Index r = 0; r < 5; ++r) {
    if (r == 1) continue;  // stopS -> startS is deterministic
    const double total = counts.row(r).sum();
    for (Eigen::Index c = 0; c < 5; ++c) {
      const double p = m.B(0)(r, c);
      // Four binomial standard errors.
      CHECK(std::abs(counts(r, c) / total - p) <= 4.0 * std::sqrt(p * (1 - p) / total) + 1e-12);
    }
  }
  CHECK(counts(1, 0) == counts.row(1).sum());
}

TEST_CASE("long sessions are cut and counted") {
  const Gpam m = random_gpam(abc_vocab(), 2, 4);
  auto spec = spec_for(30, 4);
  spec.max_events_per_session = 3;
  const auto g = generate(m, spec);
  std::size_t three = 0;
  for (const auto& t : g.traces)
    for (const auto& s : t.sessions) {
      CHECK(s.events.size() <= 3);
      three += s.events.size() == 3;
    }
  CHECK(g.report.truncated_sessions == three);
  CHECK(three > 0);
}

TEST_CASE("Monte-Carlo oracle on chains with known answers") {
  Matrix half(2, 2);
  half << 0.5, 0.5, 0, 1;
  const Dtmc h = chain(half);
  McOptions o;
  o.samples = 200000;
  o.seed = 1;
  CHECK(within(mc_estimate(h, BoundedUntilQuery{StateSet::all(2), StateSet::of(2, {1}), 2}, o), 0.75));
  CHECK(within(mc_estimate(h, UntilQuery{StateSet::all(2), StateSet::of(2, {1})}, o), 1.0));
  CHECK(within(mc_estimate(h, CumulativeRewardQuery{Vector::Ones(2), 3}, o), 3.0));

  Matrix slow(2, 2);
  slow << 0.9, 0.1, 0, 1;
  const auto steps = mc_estimate(chain(slow), ReachRewardQuery{Vector::Ones(2), StateSet::of(2, {1})}, o);
  CHECK(within(steps, 10.0));
  CHECK(steps.censored == 0);

  Matrix flip(2, 2);
  flip << 0.5, 0.5, 1, 0;
  o.samples = 10;
  o.horizon = 200000;
  CHECK(std::abs(mc_estimate(chain(flip), OccupancyQuery{StateSet::of(2, {0})}, o).estimate - 2.0 / 3) < 0.005);

  Matrix trap(3, 3);
  trap << 0.5, 0.25, 0.25, 0, 1, 0, 0, 0, 1;
  o.samples = 1000;
  CHECK(std::isinf(mc_estimate(chain(trap), ReachRewardQuery{Vector::Ones(3), StateSet::of(3, {1})}, o).estimate));
}

TEST_CASE("brute force enumeration guards its size limits") {
  const Dtmc seven = random_dtmc(7, 1);
  CHECK_THROWS_AS(brute_force_bounded(seven, StateSet::all(7), StateSet::of(7, {0}), 2), ArgumentError);
  const Dtmc three = random_dtmc(3, 1);
  CHECK_THROWS_AS(brute_force_cumulative(three, Vector::Ones(3), 11), ArgumentError);
  CHECK_NOTHROW(brute_force_cumulative(three, Vector::Ones(3), 10));

  // Zero steps: the target indicator.
  const Vector zero = brute_force_bounded(three, StateSet::all(3), StateSet::of(3, {2}), 0);
  CHECK(zero == Vector::Unit(3, 2));
}

TEST_CASE("direct solves and simulation agree on random chains") {
  std::size_t agree = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t m = 2 + seed % 5;
    const Dtmc d = random_dtmc(m, seed);
    const StateSet target = StateSet::of(m, {m - 1});
    const Vector exact = direct_until(d, StateSet::all(m), target);
    McOptions o;
    o.samples = 20000;
    o.seed = seed;
    o.start = 0;
    o.horizon = 100000;
    const auto mc = mc_estimate(d, UntilQuery{StateSet::all(m), target}, o);
    ++total;
    agree += within(mc, exact[0], 0.01);
  }
  CHECK(agree >= total * 95 / 100);
}
