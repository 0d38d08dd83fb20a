#pragma once

#include "tracestyles/gpam.hpp"
#include "tracestyles/synthgen.hpp"

#include <cmath>
#include <random>

namespace testing {

using namespace tracestyles;

inline Vocabulary abc_vocab() { return Vocabulary({"A", "B", "C"}); }

/// Traces sampled from a random model; small enough for exhaustive checks.
inline std::vector<UserTrace> sample_corpus(const Gpam& model, std::size_t traces, std::uint64_t seed,
                                            std::size_t min_sessions = 5, std::size_t max_sessions = 8) {
  GeneratorSpec spec;
  spec.num_traces = traces;
  spec.min_sessions = min_sessions;
  spec.max_sessions = max_sessions;
  spec.max_events_per_session = 40;
  spec.seed = seed;
  return generate(model, spec).traces;
}

/// Unscaled forward recursion: P(y1..yT | y0) summed over latent paths.
inline double naive_likelihood(const Gpam& m, const std::vector<std::size_t>& seq) {
  const std::size_t K = m.components();
  std::vector<double> alpha(K);
  for (std::size_t x = 0; x < K; ++x) alpha[x] = m.pi()[x];
  for (std::size_t t = 1; t < seq.size(); ++t) {
    std::vector<double> next(K, 0.0);
    for (std::size_t x2 = 0; x2 < K; ++x2) {
      for (std::size_t x = 0; x < K; ++x) next[x2] += alpha[x] * m.A()(x, x2);
      next[x2] *= m.B(x2)(seq[t - 1], seq[t]);
    }
    alpha = next;
  }
  double total = 0.0;
  for (double a : alpha) total += a;
  return total;
}

}  // namespace testing
