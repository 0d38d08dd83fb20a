#include "tracestyles/gpam.hpp"

#include "tracestyles/error.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace tracestyles {

Gpam::Gpam(Vocabulary vocab, Vector pi, Matrix A, std::vector<Matrix> B)
    : vocab_(std::move(vocab)), pi_(std::move(pi)), A_(std::move(A)), B_(std::move(B)) {
  const auto K = pi_.size();
  const auto n = static_cast<Eigen::Index>(vocab_.size());
  if (K < 1) throw ArgumentError("a GPAM needs at least one component");
  if (n < 3) throw ArgumentError("a GPAM needs at least three observed states");
  if (A_.rows() != K || A_.cols() != K) throw ArgumentError("A must be K x K");
  if (static_cast<Eigen::Index>(B_.size()) != K) throw ArgumentError("B must hold K matrices");
  if (!is_distribution(pi_)) throw ArgumentError("pi is not a probability vector");
  if (!is_row_stochastic(A_)) throw ArgumentError("A is not row-stochastic");
  for (std::size_t x = 0; x < B_.size(); ++x) {
    if (B_[x].rows() != n || B_[x].cols() != n) throw ArgumentError("B[x] must be n x n");
    if (!is_row_stochastic(B_[x]))
      throw ArgumentError("B[" + std::to_string(x) + "] is not row-stochastic");
  }
}

Gpam Gpam::permuted(const std::vector<std::size_t>& perm) const {
  const auto K = components();
  if (perm.size() != K) throw ArgumentError("permutation size must equal K");
  Vector pi(K);
  Matrix A(K, K);
  std::vector<Matrix> B(K);
  for (std::size_t k = 0; k < K; ++k) {
    pi[k] = pi_[perm[k]];
    for (std::size_t l = 0; l < K; ++l) A(k, l) = A_(perm[k], perm[l]);
    B[k] = B_[perm[k]];
  }
  return Gpam(vocab_, std::move(pi), std::move(A), std::move(B));
}

bool Gpam::operator==(const Gpam& other) const {
  if (!(vocab_ == other.vocab_) || pi_ != other.pi_ || A_ != other.A_) return false;
  return B_ == other.B_;
}

EncodedCorpus encode_corpus(const std::vector<UserTrace>& traces, const Vocabulary& vocab) {
  EncodedCorpus corpus;
  corpus.reserve(traces.size());
  for (const auto& t : traces) {
    auto seq = encode(t, vocab);
    if (seq.empty()) throw ArgumentError("trace '" + t.user_id + "' has no events");
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

namespace {

/// Expected sufficient statistics accumulated over a corpus.
struct Counts {
  std::size_t K, n;
  std::vector<double> pi, A, B;

  Counts(std::size_t k, std::size_t states)
      : K(k), n(states), pi(k, 0.0), A(k * k, 0.0), B(k * states * states, 0.0) {}
};

/// Flat, cache-friendly copy of the parameters.
struct Params {
  std::size_t K, n;
  std::vector<double> pi, A, B;

  explicit Params(const Gpam& m) : K(m.components()), n(m.states()) {
    pi.assign(m.pi().data(), m.pi().data() + K);
    A.assign(m.A().data(), m.A().data() + K * K);
    B.resize(K * n * n);
    for (std::size_t x = 0; x < K; ++x)
      std::copy(m.B(x).data(), m.B(x).data() + n * n, B.begin() + x * n * n);
  }
  double emit(std::size_t x, std::size_t y, std::size_t y2) const {
    return B[(x * n + y) * n + y2];
  }
};

class ForwardBackward {
 public:
  explicit ForwardBackward(const Params& p) : p_(p) {}

  /// Scaled forward pass; returns log P(seq[1..] | seq[0]).
  double forward(const std::vector<std::size_t>& seq) {
    const std::size_t K = p_.K, L = seq.size();
    alpha_.resize(L * K);
    scale_.resize(L);
    double ll = 0.0;
    double c = 0.0;
    for (std::size_t x = 0; x < K; ++x) c += alpha_[x] = p_.pi[x];
    scale_[0] = c;
    for (std::size_t x = 0; x < K; ++x) alpha_[x] /= c;
    for (std::size_t t = 1; t < L; ++t) {
      const double* prev = &alpha_[(t - 1) * K];
      double* cur = &alpha_[t * K];
      c = 0.0;
      for (std::size_t x2 = 0; x2 < K; ++x2) {
        double a = 0.0;
        for (std::size_t x = 0; x < K; ++x) a += prev[x] * p_.A[x * K + x2];
        cur[x2] = a * p_.emit(x2, seq[t - 1], seq[t]);
        c += cur[x2];
      }
      if (!(c > 0.0)) return -std::numeric_limits<double>::infinity();
      scale_[t] = c;
      for (std::size_t x2 = 0; x2 < K; ++x2) cur[x2] /= c;
      ll += std::log(c);
    }
    return ll;
  }

  /// Backward pass after forward(); adds posterior expectations into `counts`.
  void accumulate(const std::vector<std::size_t>& seq, Counts& counts) {
    const std::size_t K = p_.K, n = p_.n, L = seq.size();
    beta_.assign(L * K, 1.0);
    for (std::size_t t = L - 1; t-- > 0;) {
      const double* next = &beta_[(t + 1) * K];
      double* cur = &beta_[t * K];
      for (std::size_t x = 0; x < K; ++x) {
        double b = 0.0;
        for (std::size_t x2 = 0; x2 < K; ++x2)
          b += p_.A[x * K + x2] * p_.emit(x2, seq[t], seq[t + 1]) * next[x2];
        cur[x] = b / scale_[t + 1];
      }
    }
    for (std::size_t x = 0; x < K; ++x) counts.pi[x] += alpha_[x] * beta_[x];
    for (std::size_t t = 1; t < L; ++t) {
      const double* a_prev = &alpha_[(t - 1) * K];
      const double* a_cur = &alpha_[t * K];
      const double* b_cur = &beta_[t * K];
      const std::size_t y = seq[t - 1], y2 = seq[t];
      for (std::size_t x2 = 0; x2 < K; ++x2) {
        const double w = p_.emit(x2, y, y2) * b_cur[x2] / scale_[t];
        for (std::size_t x = 0; x < K; ++x) counts.A[x * K + x2] += a_prev[x] * p_.A[x * K + x2] * w;
        counts.B[(x2 * n + y) * n + y2] += a_cur[x2] * b_cur[x2];
      }
    }
  }

 private:
  const Params& p_;
  std::vector<double> alpha_, beta_, scale_;
};

void normalise_row(double* row, std::size_t len) {
  double sum = 0.0;
  for (std::size_t i = 0; i < len; ++i) sum += row[i] += kEmSmoothing;
  for (std::size_t i = 0; i < len; ++i) row[i] /= sum;
}

Gpam maximise(const Vocabulary& vocab, Counts c) {
  const std::size_t K = c.K, n = c.n;
  normalise_row(c.pi.data(), K);
  for (std::size_t x = 0; x < K; ++x) normalise_row(&c.A[x * K], K);
  for (std::size_t r = 0; r < K * n; ++r) normalise_row(&c.B[r * n], n);
  Vector pi = Eigen::Map<Vector>(c.pi.data(), K);
  Matrix A = Eigen::Map<Matrix>(c.A.data(), K, K);
  std::vector<Matrix> B(K);
  for (std::size_t x = 0; x < K; ++x) B[x] = Eigen::Map<Matrix>(&c.B[x * n * n], n, n);
  return Gpam(vocab, std::move(pi), std::move(A), std::move(B));
}

void check_corpus(const EncodedCorpus& corpus, std::size_t n) {
  if (corpus.empty()) throw ArgumentError("empty corpus");
  for (const auto& seq : corpus) {
    if (seq.empty()) throw ArgumentError("empty trace in corpus");
    for (auto y : seq)
      if (y >= n) throw ArgumentError("encoded label out of range");
  }
}

std::mt19937_64 restart_rng(std::uint64_t seed, std::size_t restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(restart) >> 32)};
  return std::mt19937_64(seq);
}

void dirichlet_row(std::mt19937_64& rng, double* row, std::size_t len) {
  std::exponential_distribution<double> exp1(1.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < len; ++i) sum += row[i] = exp1(rng);
  for (std::size_t i = 0; i < len; ++i) row[i] /= sum;
}

struct RestartOutcome {
  std::optional<Gpam> model;
  std::vector<double> history;
  std::size_t steps = 0;
};

RestartOutcome run_restart(const Gpam& init, const EncodedCorpus& corpus, std::size_t max_iters) {
  RestartOutcome out;
  double ll = 0.0;
  Gpam current = init;
  Gpam next = em_step(current, corpus, &ll);
  out.history.push_back(ll);
  while (out.steps < max_iters) {
    current = std::move(next);
    ++out.steps;
    next = em_step(current, corpus, &ll);
    out.history.push_back(ll);
    if (ll - out.history[out.history.size() - 2] < kEmTolerance) break;
  }
  out.model = std::move(current);
  return out;
}

}  // namespace

Matrix smoothed_bigram_mle(const EncodedCorpus& corpus, std::size_t n) {
  std::vector<double> counts(n * n, 0.0);
  for (const auto& seq : corpus)
    for (std::size_t t = 1; t < seq.size(); ++t) counts[seq[t - 1] * n + seq[t]] += 1.0;
  for (std::size_t r = 0; r < n; ++r) normalise_row(&counts[r * n], n);
  return Eigen::Map<Matrix>(counts.data(), n, n);
}

Gpam em_step(const Gpam& model, const EncodedCorpus& corpus, double* log_likelihood) {
  check_corpus(corpus, model.states());
  const Params params(model);
  ForwardBackward fb(params);
  Counts counts(model.components(), model.states());
  double total = 0.0;
  for (const auto& seq : corpus) {
    const double ll = fb.forward(seq);
    total += ll;
    if (std::isfinite(ll)) fb.accumulate(seq, counts);
  }
  if (log_likelihood) *log_likelihood = total;
  return maximise(model.vocab(), std::move(counts));
}

double log_likelihood(const Gpam& model, const std::vector<UserTrace>& traces) {
  const auto corpus = encode_corpus(traces, model.vocab());
  const Params params(model);
  ForwardBackward fb(params);
  double total = 0.0;
  for (const auto& seq : corpus) total += fb.forward(seq);
  return total;
}

Gpam random_initialisation(const Vocabulary& vocab, std::size_t components,
                           const Matrix& bigram_mle, std::uint64_t seed, std::size_t restart) {
  const std::size_t K = components, n = vocab.size();
  auto rng = restart_rng(seed, restart);
  Vector pi(K);
  dirichlet_row(rng, pi.data(), K);
  Matrix A(K, K);
  for (std::size_t x = 0; x < K; ++x) dirichlet_row(rng, A.row(x).data(), K);
  std::vector<Matrix> B(K, Matrix(n, n));
  std::vector<double> row(n);
  for (std::size_t x = 0; x < K; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      dirichlet_row(rng, row.data(), n);
      for (std::size_t y2 = 0; y2 < n; ++y2) B[x](y, y2) = 0.5 * row[y2] + 0.5 * bigram_mle(y, y2);
    }
  return Gpam(vocab, std::move(pi), std::move(A), std::move(B));
}

FitResult fit(const std::vector<UserTrace>& traces, const Vocabulary& vocab,
              const FitOptions& options) {
  if (options.components < 1) throw ArgumentError("K must be at least 1");
  if (vocab.size() < 3) throw ArgumentError("vocabulary must hold at least three labels");
  if (traces.empty()) throw ArgumentError("cannot fit an empty corpus");
  if (options.restarts < 1) throw ArgumentError("at least one restart is required");
  const auto corpus = encode_corpus(traces, vocab);
  const std::size_t n = vocab.size();
  const Matrix mle = smoothed_bigram_mle(corpus, n);

  FitReport report;
  report.seed = options.seed;
  report.components = options.components;
  report.max_iters = options.max_iters;

  if (options.components == 1) {
    Gpam model(vocab, Vector::Ones(1), Matrix::Ones(1, 1), {mle});
    report.restart_log_likelihood = {{log_likelihood(model, traces)}};
    report.iterations = 1;
    return {std::move(model), std::move(report)};
  }

  std::vector<RestartOutcome> outcomes(options.restarts);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < options.restarts; r = next++) {
      auto init = random_initialisation(vocab, options.components, mle, options.seed, r);
      outcomes[r] = run_restart(init, corpus, options.max_iters);
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, options.restarts));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  std::size_t best = 0;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    report.restart_log_likelihood.push_back(outcomes[r].history);
    if (outcomes[r].history.back() > outcomes[best].history.back()) best = r;
  }
  report.chosen_restart = best;
  report.iterations = outcomes[best].steps;
  return {std::move(*outcomes[best].model), std::move(report)};
}

ActivityPatternDtmc extract_pattern(const Gpam& model, std::size_t component) {
  if (component >= model.components())
    throw ArgumentError("component " + std::to_string(component) + " out of range");
  return {model.vocab(), model.vocab().start_index(), model.B(component), component};
}

ProductChain product_chain(const Gpam& model) {
  const std::size_t K = model.components(), n = model.states();
  ProductChain chain;
  chain.components = K;
  chain.vocab = model.vocab();
  chain.P.setZero(K * n, K * n);
  chain.init.setZero(K * n);
  for (std::size_t x = 0; x < K; ++x) {
    chain.init[chain.index(x, model.vocab().start_index())] = model.pi()[x];
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x2 = 0; x2 < K; ++x2)
        for (std::size_t y2 = 0; y2 < n; ++y2)
          chain.P(chain.index(x, y), chain.index(x2, y2)) = model.A()(x, x2) * model.B(x2)(y, y2);
  }
  return chain;
}

}  // namespace tracestyles
