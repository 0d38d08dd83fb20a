#include "tracestyles/synthgen.hpp"

#include "tracestyles/error.hpp"

#include <json.hpp>

#include <random>

namespace tracestyles {

void GeneratorSpec::validate() const {
  if (num_traces < 1) throw ArgumentError("num_traces must be at least 1");
  if (min_sessions < 5) throw ArgumentError("traces need at least 5 sessions");
  if (max_sessions < min_sessions) throw ArgumentError("max_sessions is below min_sessions");
  if (max_events_per_session < 3) throw ArgumentError("max_events_per_session must be at least 3");
  if (session_gap_seconds < 0) throw ArgumentError("session_gap_seconds must be non-negative");
}

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t unit) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(unit), static_cast<std::uint32_t>(unit >> 32)};
  return std::mt19937_64(seq);
}

/// Index drawn from weights w (not necessarily normalised), skipping `skip`.
template <class Row>
std::optional<std::size_t> draw(const Row& w, std::mt19937_64& rng,
                                std::optional<std::size_t> skip = std::nullopt) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (static_cast<std::size_t>(i) != skip) total += w[i];
  if (!(total > 0.0)) return std::nullopt;
  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0.0;
  std::optional<std::size_t> last;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (static_cast<std::size_t>(i) == skip || w[i] <= 0.0) continue;
    acc += w[i];
    last = static_cast<std::size_t>(i);
    if (u < acc) return last;
  }
  return last;
}

}  // namespace

Generated generate(const Gpam& model, const GeneratorSpec& spec) {
  spec.validate();
  const Vocabulary& vocab = model.vocab();
  const std::size_t start = vocab.start_index(), stop = vocab.stop_index();
  const std::size_t width = std::to_string(spec.num_traces - 1).size();
  Generated out;

  for (std::size_t k = 0; k < spec.num_traces; ++k) {
    auto rng = stream(spec.seed, k);
    std::string id = std::to_string(k);
    UserTrace trace{"u" + std::string(width - id.size(), '0') + id, {}, spec.start_time};
    const auto sessions = std::uniform_int_distribution<std::size_t>(spec.min_sessions,
                                                                     spec.max_sessions)(rng);
    std::int64_t t = spec.start_time;
    std::size_t x = *draw(model.pi(), rng);
    for (std::size_t s = 0; s < sessions; ++s) {
      if (s > 0) x = *draw(model.A().row(x), rng);
      Session session;
      session.events.push_back({vocab.label(start), t++});
      std::size_t y = start;
      while (y != stop) {
        x = *draw(model.A().row(x), rng);
        const bool forced = session.events.size() + 1 >= spec.max_events_per_session;
        std::optional<std::size_t> next;
        if (!forced) next = draw(model.B(x).row(y), rng, start);
        if (!next) {
          next = stop;
          if (forced) ++out.report.truncated_sessions;
        }
        y = *next;
        session.events.push_back({vocab.label(y), t++});
      }
      out.report.events += session.events.size();
      t = session.end_time() + spec.session_gap_seconds;
      trace.sessions.push_back(std::move(session));
    }
    out.report.sessions += sessions;
    out.traces.push_back(std::move(trace));
  }
  out.report.traces = spec.num_traces;
  return out;
}

std::string generation_report_json(const GenerationReport& report) {
  nlohmann::json j{{"traces", report.traces},
                   {"sessions", report.sessions},
                   {"events", report.events},
                   {"truncated_sessions", report.truncated_sessions}};
  return j.dump(1) + "\n";
}

namespace {

Vector dirichlet_one(std::size_t size, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Vector v(size);
  for (std::size_t i = 0; i < size; ++i) v[i] = e(rng);
  return v / v.sum();
}

}  // namespace

Dtmc random_dtmc(std::size_t states, std::uint64_t seed, double density) {
  if (states == 0) throw ArgumentError("random_dtmc needs at least one state");
  auto rng = stream(seed, 0x64746d63);
  std::bernoulli_distribution keep(density);
  std::exponential_distribution<double> e(1.0);
  Matrix P = Matrix::Zero(states, states);
  for (std::size_t s = 0; s < states; ++s) {
    for (std::size_t t = 0; t < states; ++t)
      if (keep(rng)) P(s, t) = e(rng);
    if (P.row(s).sum() == 0.0)
      P(s, std::uniform_int_distribution<std::size_t>(0, states - 1)(rng)) = 1.0;
    P.row(s) /= P.row(s).sum();
  }
  Vector init = Vector::Zero(states);
  init[0] = 1.0;
  return Dtmc(std::move(P), std::move(init));
}

Gpam random_gpam(const Vocabulary& vocab, std::size_t components, std::uint64_t seed) {
  auto rng = stream(seed, 0x6770616d);
  const std::size_t n = vocab.size();
  const std::size_t start = vocab.start_index(), stop = vocab.stop_index();
  Vector pi = dirichlet_one(components, rng);
  Matrix A(components, components);
  for (std::size_t x = 0; x < components; ++x) A.row(x) = dirichlet_one(components, rng).transpose();
  std::vector<Matrix> B;
  for (std::size_t x = 0; x < components; ++x) {
    Matrix b = Matrix::Zero(n, n);
    for (std::size_t y = 0; y < n; ++y) {
      if (y == stop) {
        b(y, start) = 1.0;
        continue;
      }
      const Vector w = dirichlet_one(n - 1, rng);
      for (std::size_t t = 0, k = 0; t < n; ++t)
        if (t != start) b(y, t) = w[k++];
    }
    B.push_back(std::move(b));
  }
  return Gpam(vocab, std::move(pi), std::move(A), std::move(B));
}

}  // namespace tracestyles
