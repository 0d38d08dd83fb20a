// Reference analyses. These deliberately avoid the production solvers: graph
// questions go through a boolean transitive closure of P, linear systems
// through LU factorisation, and bounded questions through path enumeration.

#include "tracestyles/synthgen.hpp"

#include "tracestyles/error.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <random>

namespace tracestyles {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Closure = std::vector<std::vector<bool>>;

/// closure[s][t]: t reachable from s in zero or more steps, moving only out of
/// states in `movable`.
Closure transitive_closure(const Matrix& P, const std::vector<bool>& movable) {
  const std::size_t m = static_cast<std::size_t>(P.rows());
  Closure c(m, std::vector<bool>(m, false));
  for (std::size_t s = 0; s < m; ++s) {
    c[s][s] = true;
    if (movable[s])
      for (std::size_t t = 0; t < m; ++t)
        if (P(s, t) > 0.0) c[s][t] = true;
  }
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t s = 0; s < m; ++s)
      if (c[s][k])
        for (std::size_t t = 0; t < m; ++t)
          if (c[k][t]) c[s][t] = true;
  return c;
}

/// States from which some path through phi1 states reaches phi2.
std::vector<bool> can_reach(const Matrix& P, const StateSet& phi1, const StateSet& phi2) {
  const std::size_t m = static_cast<std::size_t>(P.rows());
  std::vector<bool> movable(m);
  for (std::size_t s = 0; s < m; ++s) movable[s] = phi1.contains(s) && !phi2.contains(s);
  const auto c = transitive_closure(P, movable);
  std::vector<bool> out(m, false);
  for (std::size_t s = 0; s < m; ++s)
    for (std::size_t t = 0; t < m; ++t)
      if (c[s][t] && phi2.contains(t)) out[s] = true;
  return out;
}

/// States that reach `target` with probability one.
std::vector<bool> almost_surely_reach(const Matrix& P, const StateSet& target) {
  const std::size_t m = static_cast<std::size_t>(P.rows());
  const auto reach = can_reach(P, StateSet::all(m), target);
  const auto c = transitive_closure(P, std::vector<bool>(m, true));
  std::vector<bool> sure(m, true);
  for (std::size_t s = 0; s < m; ++s)
    for (std::size_t t = 0; t < m; ++t)
      if (c[s][t] && !reach[t] && !target.contains(s)) sure[s] = false;
  return sure;
}

class Walker {
 public:
  explicit Walker(const Dtmc& model) : P_(model.P()), init_(model.init()) {}

  std::size_t initial(std::mt19937_64& rng) const { return pick(init_, rng); }
  std::size_t step(std::size_t s, std::mt19937_64& rng) const {
    return pick(P_.row(static_cast<Eigen::Index>(s)), rng);
  }

 private:
  template <class Row>
  static std::size_t pick(const Row& w, std::mt19937_64& rng) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    std::size_t last = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (w[i] <= 0.0) continue;
      acc += w[i];
      last = static_cast<std::size_t>(i);
      if (u < acc) return last;
    }
    return last;
  }

  const Matrix& P_;
  const Vector& init_;
};

struct Accumulator {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  bool infinite = false;

  void add(double v) {
    if (std::isinf(v)) infinite = true;
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return infinite ? kInf : sum / static_cast<double>(n); }
  double standard_error() const {
    if (infinite) return kInf;
    if (n < 2) return 0.0;
    const double mu = sum / static_cast<double>(n);
    const double var = std::max(0.0, (sum_sq - n * mu * mu) / static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

std::mt19937_64 mc_stream(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x6d63u};
  return std::mt19937_64(seq);
}

struct McRunner {
  const Dtmc& model;
  const McOptions& options;
  Walker walker;
  std::mt19937_64 rng;
  std::size_t censored = 0;

  McRunner(const Dtmc& m, const McOptions& o) : model(m), options(o), walker(m), rng(mc_stream(o.seed)) {
    if (o.start && *o.start >= m.size()) throw ArgumentError("start state out of range");
  }

  std::size_t first() { return options.start ? *options.start : walker.initial(rng); }

  McEstimate finish(const Accumulator& acc) const {
    return {acc.mean(), acc.standard_error(), acc.n, censored};
  }

  template <class Sample>
  McEstimate repeat(Sample sample) {
    Accumulator acc;
    for (std::size_t i = 0; i < options.samples; ++i) acc.add(sample());
    return finish(acc);
  }

  McEstimate operator()(const BoundedUntilQuery& q) {
    return repeat([&] {
      std::size_t s = first();
      for (std::size_t k = 0;; ++k) {
        if (q.phi2.contains(s)) return 1.0;
        if (!q.phi1.contains(s) || k == q.bound) return 0.0;
        s = walker.step(s, rng);
      }
    });
  }

  McEstimate operator()(const UntilQuery& q) {
    const auto hope = can_reach(model.P(), q.phi1, q.phi2);
    return repeat([&] {
      std::size_t s = first();
      for (std::size_t k = 0; k <= options.horizon; ++k) {
        if (q.phi2.contains(s)) return 1.0;
        if (!q.phi1.contains(s) || !hope[s]) return 0.0;
        s = walker.step(s, rng);
      }
      ++censored;
      return 0.0;
    });
  }

  McEstimate operator()(const CumulativeRewardQuery& q) {
    return repeat([&] {
      std::size_t s = first();
      double total = 0.0;
      for (std::size_t k = 0; k < q.bound; ++k) {
        total += q.reward[s];
        s = walker.step(s, rng);
      }
      return total;
    });
  }

  McEstimate operator()(const ReachRewardQuery& q) {
    const auto hope = can_reach(model.P(), StateSet::all(model.size()), q.target);
    return repeat([&] {
      std::size_t s = first();
      double total = 0.0;
      for (std::size_t k = 0; k <= options.horizon; ++k) {
        if (q.target.contains(s)) return total;
        if (!hope[s]) return kInf;
        total += q.reward[s];
        s = walker.step(s, rng);
      }
      ++censored;
      return total;
    });
  }

  McEstimate operator()(const OccupancyQuery& q) {
    // Bottom classes: s is in one iff every state it reaches reaches it back.
    const std::size_t m = model.size();
    const auto c = transitive_closure(model.P(), std::vector<bool>(m, true));
    std::vector<std::size_t> class_of(m, m);
    std::vector<std::size_t> representative;
    for (std::size_t s = 0; s < m; ++s) {
      bool bottom = true;
      for (std::size_t t = 0; t < m && bottom; ++t)
        if (c[s][t] && !c[t][s]) bottom = false;
      if (!bottom || class_of[s] != m) continue;
      for (std::size_t t = 0; t < m; ++t)
        if (c[s][t]) class_of[t] = representative.size();
      representative.push_back(s);
    }
    const std::size_t classes = representative.size();

    // Probability of ending in each class.
    std::vector<std::size_t> hits(classes, 0);
    for (std::size_t i = 0; i < options.samples; ++i) {
      std::size_t s = first();
      std::size_t k = 0;
      while (class_of[s] == m && k++ < options.horizon) s = walker.step(s, rng);
      if (class_of[s] == m)
        ++censored;
      else
        ++hits[class_of[s]];
    }

    // In-class frequency from one long path, with batch means.
    constexpr std::size_t batches = 100;
    const std::size_t per_batch = std::max<std::size_t>(1, options.horizon / batches);
    double estimate = 0.0, variance = 0.0;
    const double n = static_cast<double>(options.samples);
    for (std::size_t b = 0; b < classes; ++b) {
      std::size_t s = representative[b];
      Accumulator batch_means;
      for (std::size_t k = 0; k < batches; ++k) {
        std::size_t inside = 0;
        for (std::size_t i = 0; i < per_batch; ++i) {
          if (q.phi.contains(s)) ++inside;
          s = walker.step(s, rng);
        }
        batch_means.add(static_cast<double>(inside) / static_cast<double>(per_batch));
      }
      const double f = batch_means.mean(), f_se = batch_means.standard_error();
      const double p = static_cast<double>(hits[b]) / n;
      estimate += p * f;
      variance += f * f * p * (1.0 - p) / n + p * p * f_se * f_se;
    }
    return {estimate, std::sqrt(variance), options.samples, censored};
  }
};

void enumeration_guard(const Dtmc& model, std::size_t N) {
  if (model.size() > 6 || N > 10)
    throw ArgumentError("path enumeration is limited to 6 states and N <= 10");
}

}  // namespace

McEstimate mc_estimate(const Dtmc& model, const McQuery& query, const McOptions& options) {
  if (options.samples < 1) throw ArgumentError("mc_estimate needs at least one sample");
  McRunner runner(model, options);
  return std::visit(runner, query);
}

Vector brute_force_bounded(const Dtmc& model, const StateSet& phi1, const StateSet& phi2,
                           std::size_t N) {
  enumeration_guard(model, N);
  const Matrix& P = model.P();
  const std::size_t m = model.size();
  // Sum of probabilities of the path prefixes that decide the until positively.
  auto paths = [&](auto&& self, std::size_t s, std::size_t left, double prob) -> double {
    if (phi2.contains(s)) return prob;
    if (!phi1.contains(s) || left == 0) return 0.0;
    double total = 0.0;
    for (std::size_t t = 0; t < m; ++t)
      if (P(s, t) > 0.0) total += self(self, t, left - 1, prob * P(s, t));
    return total;
  };
  Vector out(m);
  for (std::size_t s = 0; s < m; ++s) out[s] = paths(paths, s, N, 1.0);
  return out;
}

Vector brute_force_cumulative(const Dtmc& model, const Vector& reward, std::size_t N) {
  enumeration_guard(model, N);
  const Matrix& P = model.P();
  const std::size_t m = model.size();
  // Every path of N states contributes prob * (reward collected along it).
  auto paths = [&](auto&& self, std::size_t s, std::size_t left, double prob, double collected) -> double {
    collected += reward[s];
    if (left == 1) return prob * collected;
    double total = 0.0;
    for (std::size_t t = 0; t < m; ++t)
      if (P(s, t) > 0.0) total += self(self, t, left - 1, prob * P(s, t), collected);
    return total;
  };
  Vector out = Vector::Zero(m);
  if (N == 0) return out;
  for (std::size_t s = 0; s < m; ++s) out[s] = paths(paths, s, N, 1.0, 0.0);
  return out;
}

Vector direct_until(const Dtmc& model, const StateSet& phi1, const StateSet& phi2) {
  const std::size_t m = model.size();
  const Matrix& P = model.P();
  const auto hope = can_reach(P, phi1, phi2);
  std::vector<std::size_t> unknown, slot(m, m);
  for (std::size_t s = 0; s < m; ++s)
    if (hope[s] && !phi2.contains(s)) {
      slot[s] = unknown.size();
      unknown.push_back(s);
    }
  Vector out = Vector::Zero(m);
  for (std::size_t s = 0; s < m; ++s)
    if (phi2.contains(s)) out[s] = 1.0;
  if (unknown.empty()) return out;
  const auto u = static_cast<Eigen::Index>(unknown.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(u, u);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(u);
  for (Eigen::Index r = 0; r < u; ++r) {
    const auto s = unknown[r];
    for (std::size_t t = 0; t < m; ++t) {
      if (phi2.contains(t))
        b[r] += P(s, t);
      else if (slot[t] != m)
        M(r, static_cast<Eigen::Index>(slot[t])) -= P(s, t);
    }
  }
  const Eigen::VectorXd x = M.partialPivLu().solve(b);
  for (Eigen::Index r = 0; r < u; ++r) out[unknown[r]] = x[r];
  return out;
}

Vector direct_reach_reward(const Dtmc& model, const Vector& reward, const StateSet& target) {
  const std::size_t m = model.size();
  const Matrix& P = model.P();
  const auto sure = almost_surely_reach(P, target);
  std::vector<std::size_t> unknown, slot(m, m);
  Vector out = Vector::Zero(m);
  for (std::size_t s = 0; s < m; ++s) {
    if (!sure[s]) {
      out[s] = kInf;
    } else if (!target.contains(s)) {
      slot[s] = unknown.size();
      unknown.push_back(s);
    }
  }
  if (unknown.empty()) return out;
  const auto u = static_cast<Eigen::Index>(unknown.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(u, u);
  Eigen::VectorXd b(u);
  for (Eigen::Index r = 0; r < u; ++r) {
    const auto s = unknown[r];
    b[r] = reward[s];
    for (std::size_t t = 0; t < m; ++t)
      if (slot[t] != m) M(r, static_cast<Eigen::Index>(slot[t])) -= P(s, t);
  }
  const Eigen::VectorXd x = M.partialPivLu().solve(b);
  for (Eigen::Index r = 0; r < u; ++r) out[unknown[r]] = x[r];
  return out;
}

}  // namespace tracestyles
