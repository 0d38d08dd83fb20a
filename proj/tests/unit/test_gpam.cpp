#include "helpers.hpp"

#include "tracestyles/error.hpp"

#include <doctest.h>

#include <numeric>

using namespace tracestyles;
using testing::abc_vocab;

namespace {

Gpam uniform_model(const Vocabulary& v, std::size_t K) {
  const auto n = static_cast<Eigen::Index>(v.size());
  const auto k = static_cast<Eigen::Index>(K);
  return Gpam(v, Vector::Constant(k, 1.0 / K), Matrix::Constant(k, k, 1.0 / K),
              std::vector<Matrix>(K, Matrix::Constant(n, n, 1.0 / n)));
}

bool row_stochastic(const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    if (std::abs(m.row(r).sum() - 1.0) > 1e-9 || m.row(r).minCoeff() < 0.0) return false;
  return true;
}

}  // namespace

TEST_CASE("model validation") {
  const auto v = abc_vocab();
  const Matrix B = Matrix::Constant(5, 5, 0.2);
  CHECK_NOTHROW(Gpam(v, Vector::Ones(1), Matrix::Ones(1, 1), {B}));
  CHECK_THROWS_AS(Gpam(v, Vector::Constant(1, 0.5), Matrix::Ones(1, 1), {B}), ArgumentError);
  Matrix bad = B;
  bad(2, 2) = 0.5;
  CHECK_THROWS_AS(Gpam(v, Vector::Ones(1), Matrix::Ones(1, 1), {bad}), ArgumentError);
  CHECK_THROWS_AS(Gpam(Vocabulary({"A"}), Vector::Ones(1), Matrix::Ones(1, 1), {Matrix::Constant(4, 4, 0.25)}),
                  ArgumentError);
  CHECK_THROWS_AS(Gpam(v, Vector::Ones(1), Matrix::Ones(1, 1), {}), ArgumentError);
}

TEST_CASE("log-likelihood against hand computation and the unscaled forward pass") {
  const Vocabulary v({"A", "B"});  // n = 4
  const Gpam uniform = uniform_model(v, 2);
  UserTrace t{"u", {{{{"startS", 0}, {"A", 1}, {"stopS", 2}}}}, std::nullopt};
  CHECK(log_likelihood(uniform, {t}) == doctest::Approx(2.0 * std::log(0.25)).epsilon(1e-14));

  // Deterministic chain generating its own trace with probability one.
  Matrix det = Matrix::Zero(4, 4);
  det(0, 2) = det(2, 1) = det(1, 0) = det(3, 3) = 1.0;
  const Gpam certain(v, Vector::Ones(1), Matrix::Ones(1, 1), {det});
  CHECK(log_likelihood(certain, {t}) == 0.0);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Gpam m = random_gpam(abc_vocab(), 1 + seed % 3, seed);
    const auto traces = testing::sample_corpus(m, 2, seed, 5, 5);
    for (const auto& tr : traces) {
      auto seq = encode(tr, m.vocab());
      seq.resize(std::min<std::size_t>(seq.size(), 20));
      UserTrace cut{"c", {}, std::nullopt};
      // Rebuild a trace from the truncated sequence so both sides see the same events.
      Session s;
      for (std::size_t i = 0; i < seq.size(); ++i) s.events.push_back({m.vocab().label(seq[i]), 0});
      cut.sessions.push_back(s);
      CHECK(log_likelihood(m, {cut}) ==
            doctest::Approx(std::log(testing::naive_likelihood(m, seq))).epsilon(1e-9));
    }
  }
}

TEST_CASE("log-likelihood is invariant under component relabelling") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Gpam m = random_gpam(abc_vocab(), 3, seed);
    const auto traces = testing::sample_corpus(m, 5, seed + 100);
    const Gpam p = m.permuted({2, 0, 1});
    CHECK(p.B(0) == m.B(2));
    CHECK(log_likelihood(p, traces) == doctest::Approx(log_likelihood(m, traces)).epsilon(1e-12));
  }
}

TEST_CASE("unknown labels are rejected") {
  UserTrace t{"u", {{{{"startS", 0}, {"Zed", 1}, {"stopS", 2}}}}, std::nullopt};
  CHECK_THROWS_WITH_AS(log_likelihood(uniform_model(abc_vocab(), 1), {t}), doctest::Contains("Zed"),
                       ArgumentError);
}

TEST_CASE("K = 1 fit is the smoothed bigram estimate and a fixed point") {
  const Gpam truth = random_gpam(abc_vocab(), 2, 7);
  const auto traces = testing::sample_corpus(truth, 30, 7);
  const auto corpus = encode_corpus(traces, truth.vocab());
  FitOptions o;
  o.components = 1;
  const auto fitted = fit(traces, truth.vocab(), o);
  const Matrix mle = smoothed_bigram_mle(corpus, truth.states());
  CHECK((fitted.model.B(0) - mle).cwiseAbs().maxCoeff() <= 1e-12);

  // Hand count oracle for the bigram estimate.
  const std::size_t n = truth.states();
  Matrix counts = Matrix::Zero(n, n);
  for (const auto& t : traces) counts += count_bigrams(t, truth.vocab()).counts.cast<double>();
  for (std::size_t r = 0; r < n; ++r) {
    const double total = counts.row(r).sum() + n * kEmSmoothing;
    for (std::size_t c = 0; c < n; ++c)
      CHECK(mle(r, c) == doctest::Approx((counts(r, c) + kEmSmoothing) / total).epsilon(1e-12));
  }

  // One EM step from any K = 1 start lands on the estimate, then stays.
  const Gpam start(truth.vocab(), Vector::Ones(1), Matrix::Ones(1, 1), {random_gpam(truth.vocab(), 1, 3).B(0)});
  const Gpam once = em_step(start, corpus);
  CHECK((once.B(0) - mle).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((em_step(once, corpus).B(0) - once.B(0)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("EM log-likelihood never decreases within a restart") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Gpam truth = random_gpam(abc_vocab(), 2, seed);
    const auto traces = testing::sample_corpus(truth, 12, seed);
    FitOptions o;
    o.components = 2 + seed % 2;
    o.restarts = 4;
    o.max_iters = 40;
    o.seed = seed;
    const auto r = fit(traces, truth.vocab(), o);
    for (const auto& history : r.report.restart_log_likelihood)
      for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] >= history[i - 1] - 1e-9);
    const auto& best = r.report.restart_log_likelihood[r.report.chosen_restart];
    for (const auto& history : r.report.restart_log_likelihood) CHECK(history.back() <= best.back());
    CHECK(log_likelihood(r.model, traces) == doctest::Approx(best.back()).epsilon(1e-9));
  }
}

TEST_CASE("fit is deterministic and independent of thread count") {
  const Gpam truth = random_gpam(abc_vocab(), 2, 42);
  const auto traces = testing::sample_corpus(truth, 15, 42);
  FitOptions o;
  o.components = 2;
  o.restarts = 6;
  o.max_iters = 25;
  o.seed = 9;
  const auto a = fit(traces, truth.vocab(), o);
  const auto b = fit(traces, truth.vocab(), o);
  o.threads = 3;
  const auto c = fit(traces, truth.vocab(), o);
  CHECK(a.model == b.model);
  CHECK(a.report == b.report);
  CHECK(a.model == c.model);
  CHECK(a.report == c.report);
  CHECK(model_to_json(a.model, &a.report) == model_to_json(c.model, &c.report));
}

TEST_CASE("fit argument errors") {
  const Gpam truth = random_gpam(abc_vocab(), 1, 1);
  const auto traces = testing::sample_corpus(truth, 2, 1);
  FitOptions o;
  o.components = 0;
  CHECK_THROWS_AS(fit(traces, truth.vocab(), o), ArgumentError);
  o.components = 1;
  CHECK_THROWS_AS(fit({}, truth.vocab(), o), ArgumentError);
  UserTrace bare{"u", {{{{"startS", 0}, {"stopS", 1}}}}, std::nullopt};
  CHECK_THROWS_AS(fit({bare}, build_vocabulary({bare}), o), ArgumentError);
}

TEST_CASE("random initialisation depends only on seed and restart index") {
  const Gpam truth = random_gpam(abc_vocab(), 2, 5);
  const Matrix mle = smoothed_bigram_mle(encode_corpus(testing::sample_corpus(truth, 3, 5), truth.vocab()), 5);
  CHECK(random_initialisation(truth.vocab(), 3, mle, 1, 4) == random_initialisation(truth.vocab(), 3, mle, 1, 4));
  CHECK_FALSE(random_initialisation(truth.vocab(), 3, mle, 1, 4) ==
              random_initialisation(truth.vocab(), 3, mle, 1, 5));
}

TEST_CASE("activity patterns and the product chain") {
  const Gpam m = random_gpam(abc_vocab(), 2, 3);
  for (std::size_t x = 0; x < 2; ++x) {
    const auto p = extract_pattern(m, x);
    CHECK(p.P == m.B(x));
    CHECK(p.initial == m.vocab().index("startS"));
    CHECK(p.component_id == x);
    CHECK(row_stochastic(p.P));
  }
  CHECK_THROWS_AS(extract_pattern(m, 2), ArgumentError);

  const auto chain = product_chain(m);
  CHECK(chain.P.rows() == 10);
  CHECK(row_stochastic(chain.P));
  CHECK(chain.init.sum() == doctest::Approx(1.0));
  CHECK(chain.init[chain.index(1, 0)] == m.pi()[1]);
  CHECK(chain.P(chain.index(0, 2), chain.index(1, 3)) == m.A()(0, 1) * m.B(1)(2, 3));

  // K = 1: the product chain is the activity pattern.
  const Gpam one = random_gpam(abc_vocab(), 1, 3);
  CHECK(product_chain(one).P == one.B(0));

  // A = identity: no mass crosses between the two blocks.
  const Gpam blocks(m.vocab(), m.pi(), Matrix::Identity(2, 2), m.B());
  const auto bc = product_chain(blocks);
  CHECK(bc.P.block(0, 5, 5, 5).cwiseAbs().maxCoeff() == 0.0);
  CHECK(bc.P.block(5, 0, 5, 5).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fitted patterns open sessions with a distribution") {
  const Gpam truth = random_gpam(abc_vocab(), 2, 8);
  const auto traces = testing::sample_corpus(truth, 10, 8);
  FitOptions o;
  o.components = 2;
  o.restarts = 2;
  o.max_iters = 10;
  const auto r = fit(traces, truth.vocab(), o);
  for (std::size_t x = 0; x < 2; ++x) {
    const auto p = extract_pattern(r.model, x);
    CHECK(row_stochastic(p.P));
    CHECK(p.P.row(p.initial).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("model documents round-trip exactly") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Gpam m = random_gpam(abc_vocab(), 1 + seed % 3, seed);
    CHECK(model_from_json(model_to_json(m)) == m);
  }
  CHECK_THROWS_AS(model_from_json("{"), ParseError);
  CHECK_THROWS_AS(model_from_json(R"({"K":1,"labels":["startS","stopS","A"],"pi":[1],"A":[[1]]})"), ParseError);
}
