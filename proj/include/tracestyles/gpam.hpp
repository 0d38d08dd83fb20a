#pragma once

// Generalised population admixture models: K latent components over an
// autoregressive HMM whose emissions condition on the previous observation.

#include "tracestyles/numeric.hpp"
#include "tracestyles/trace.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tracestyles {

/// Smoothing mass added to every expected count before normalisation.
inline constexpr double kEmSmoothing = 1e-6;
/// A restart stops once the log-likelihood improves by less than this.
inline constexpr double kEmTolerance = 1e-6;

/// Immutable after construction; the constructor validates every invariant.
class Gpam {
 public:
  /// pi: length K; A: K x K; B: K matrices of n x n. All row-stochastic to 1e-9.
  Gpam(Vocabulary vocab, Vector pi, Matrix A, std::vector<Matrix> B);

  std::size_t components() const noexcept { return static_cast<std::size_t>(pi_.size()); }
  std::size_t states() const noexcept { return vocab_.size(); }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  const Vector& pi() const noexcept { return pi_; }
  const Matrix& A() const noexcept { return A_; }
  const std::vector<Matrix>& B() const noexcept { return B_; }
  const Matrix& B(std::size_t component) const { return B_.at(component); }

  /// Same model with components reordered: new component k is old perm[k].
  Gpam permuted(const std::vector<std::size_t>& perm) const;

  bool operator==(const Gpam& other) const;

 private:
  Vocabulary vocab_;
  Vector pi_;
  Matrix A_;
  std::vector<Matrix> B_;
};

struct FitOptions {
  std::size_t components = 2;
  std::size_t restarts = 200;
  std::size_t max_iters = 100;
  std::uint64_t seed = 0;
  /// Worker threads for independent restarts; results do not depend on it.
  std::size_t threads = 1;
};

struct FitReport {
  /// log-likelihood history of each restart; entry k is the likelihood of the
  /// parameters after k M-steps (entry 0 is the random initialisation).
  std::vector<std::vector<double>> restart_log_likelihood;
  std::size_t chosen_restart = 0;
  std::size_t iterations = 0;  // M-steps performed by the chosen restart
  std::uint64_t seed = 0;
  std::size_t components = 0;
  std::size_t max_iters = 0;

  double log_likelihood() const { return restart_log_likelihood.at(chosen_restart).back(); }
  bool operator==(const FitReport&) const = default;
};

struct FitResult {
  Gpam model;
  FitReport report;
};

/// Maximum-likelihood GPAM(K) by restarted Baum-Welch. Returns the restart with
/// the greatest final log-likelihood (lowest index on ties). K = 1 is solved in
/// closed form from the aggregate transition-occurrence matrix.
FitResult fit(const std::vector<UserTrace>& traces, const Vocabulary& vocab,
              const FitOptions& options);

/// Sum over traces of log P(trace | model), by the scaled forward algorithm.
/// The first event of every trace is conditioned on, not scored.
double log_likelihood(const Gpam& model, const std::vector<UserTrace>& traces);

/// Traces encoded against a vocabulary, the input of the EM routines.
using EncodedCorpus = std::vector<std::vector<std::size_t>>;
EncodedCorpus encode_corpus(const std::vector<UserTrace>& traces, const Vocabulary& vocab);

/// One E-step + M-step. Returns the re-estimated model and, through
/// `log_likelihood`, the likelihood of `model` itself.
Gpam em_step(const Gpam& model, const EncodedCorpus& corpus, double* log_likelihood = nullptr);

/// Row-normalised aggregate bigram counts with kEmSmoothing added to every cell.
Matrix smoothed_bigram_mle(const EncodedCorpus& corpus, std::size_t n);

/// Random starting point of restart `restart` for the given seed: pi and A rows
/// from Dirichlet(1), B rows a 50/50 mix of Dirichlet(1) and `bigram_mle`.
Gpam random_initialisation(const Vocabulary& vocab, std::size_t components,
                           const Matrix& bigram_mle, std::uint64_t seed, std::size_t restart);

/// A component frozen as a DTMC over observed states, started in startS.
struct ActivityPatternDtmc {
  Vocabulary states;
  std::size_t initial = 0;
  Matrix P;
  std::size_t component_id = 0;
};

ActivityPatternDtmc extract_pattern(const Gpam& model, std::size_t component);

/// Joint chain over (x, y) pairs; state index = x * n + y.
/// P((x,y),(x',y')) = A[x][x'] * B[x'][y][y']; initial mass pi[x] on (x, startS).
struct ProductChain {
  std::size_t components = 0;
  Vocabulary vocab;
  Matrix P;
  Vector init;

  std::size_t index(std::size_t component, std::size_t state) const {
    return component * vocab.size() + state;
  }
};

ProductChain product_chain(const Gpam& model);

/// Model document: {"K","labels","pi","A","B","fit"?}. Doubles round-trip exactly.
std::string model_to_json(const Gpam& model, const FitReport* report = nullptr);
Gpam model_from_json(std::string_view text);
std::string fit_report_to_json(const FitReport& report);

}  // namespace tracestyles
