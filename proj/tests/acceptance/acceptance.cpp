// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "tracestyles/dtmc.hpp"
#include "tracestyles/gpam.hpp"
#include "tracestyles/jenks.hpp"
#include "tracestyles/pctl.hpp"
#include "tracestyles/property_suite.hpp"
#include "tracestyles/synthgen.hpp"
#include "tracestyles/trace.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

using namespace tracestyles;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

StateSet random_set(std::size_t m, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  StateSet s(m);
  for (std::size_t i = 0; i < m; ++i)
    if (coin(rng)) s.insert(i);
  return s;
}

const Vector& solved(const Solved<Vector>& r) { return std::get<Vector>(r); }

double value_of(const PropertyResult& r) {
  const auto* v = std::get_if<Value>(&r);
  return v ? v->value : NAN;
}

// ---- AC1 --------------------------------------------------------------------

Outcome ac1() {
  Outcome o;
  const auto t0 = Clock::now();
  using Classes = std::vector<std::vector<double>>;
  const auto counts = jenks_breaks({0.37, 0.47, 0.54, 5.43, 6.17, 7.35, 7.55, 10.13, 10.82}, 3);
  const auto lengths = jenks_breaks({3.51, 3.81, 3.86, 5.36, 5.56, 7.09, 8.28, 87.76, 102.07, 130.96}, 3);
  const double elapsed = seconds_since(t0);
  o.require(counts.classes == Classes{{0.37, 0.47, 0.54}, {5.43, 6.17, 7.35, 7.55}, {10.13, 10.82}},
            "session-count classes differ");
  const Classes expected_lengths{{3.51, 3.81, 3.86}, {5.36, 5.56, 7.09, 8.28}, {87.76, 102.07, 130.96}};
  if (lengths.classes != expected_lengths) {
    std::string got;
    for (const auto& c : lengths.classes) got += "{" + fmt(c.front()) + ".." + fmt(c.back()) + "}";
    o.require(false, "session-length classes " + got + " (SSD " + fmt(lengths.within_ssd) +
                         ") differ from the expected split, whose SSD is higher");
  }
  o.require(elapsed < 1.0, "took " + fmt(elapsed) + " s");
  if (o.pass) o.detail = "both classifications match in " + fmt(elapsed) + " s";
  return o;
}

// ---- AC2 --------------------------------------------------------------------

Outcome ac2() {
  Outcome o;
  PatternResultTable t;
  t.patterns = 2;
  const std::vector<std::string> states{"OverallUsage", "Last7Days", "SelectPeriod", "Stats", "AppsInPeriod"};
  const std::map<SuiteProperty, std::vector<std::pair<double, double>>> values{
      {SuiteProperty::VisitProbInit, {{0.94, 0.99}, {0.80, 0.89}, {0.80, 0.42}, {0.81, 0.99}, {0.45, 0.13}}},
      {SuiteProperty::StepCountInit, {{16.55, 4.53}, {30.27, 22.75}, {30.45, 90.36}, {29.82, 12.01}, {83.40, 332.40}}},
      {SuiteProperty::VisitCountInit, {{3.54, 14.58}, {1.63, 2.24}, {1.92, 0.72}, {1.74, 5.77}, {0.95, 0.28}}},
  };
  for (const auto& [prop, cells] : values)
    for (std::size_t s = 0; s < states.size(); ++s)
      t.rows.push_back({prop, states[s], {Value{cells[s].first}, Value{cells[s].second}}, {}});
  assign_ranks(t);
  SuiteParams params;  // N = 50
  const auto r = predominant_states(t, params);
  auto has = [&](std::size_t x, const std::string& s) {
    return std::find(r.per_pattern[x].begin(), r.per_pattern[x].end(), s) != r.per_pattern[x].end();
  };
  for (const char* s : {"SelectPeriod", "Stats", "Last7Days"}) o.require(has(0, s), std::string("AP1 lacks ") + s);
  o.require(!has(0, "OverallUsage"), "AP1 includes OverallUsage");
  for (const char* s : {"OverallUsage", "Stats", "Last7Days"}) o.require(has(1, s), std::string("AP2 lacks ") + s);
  o.require(!has(1, "SelectPeriod"), "AP2 includes SelectPeriod");
  o.require(!has(1, "AppsInPeriod"), "AP2 includes AppsInPeriod");
  if (o.pass) {
    auto list = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
      return s;
    };
    o.detail = "AP1=[" + list(r.per_pattern[0]) + "] AP2=[" + list(r.per_pattern[1]) + "]";
  }
  return o;
}

// ---- AC3 --------------------------------------------------------------------

Outcome ac3() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst_brute = 0.0, worst_direct = 0.0;
  std::size_t solved_until = 0, solved_reward = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed * 7919 + 1);
    const std::size_t m = 1 + seed % 6;
    const Dtmc d = random_dtmc(m, seed);
    const StateSet phi1 = random_set(m, rng), phi2 = random_set(m, rng);
    Vector reward(m);
    for (std::size_t s = 0; s < m; ++s) reward[s] = std::uniform_real_distribution<>(0, 3)(rng);
    for (std::size_t N = 0; N <= 8; ++N) {
      worst_brute = std::max(worst_brute, (bounded_until(d, phi1, phi2, N) - brute_force_bounded(d, phi1, phi2, N))
                                              .cwiseAbs()
                                              .maxCoeff());
      worst_brute = std::max(worst_brute, (cumulative_reward(d, RewardStructure(reward), N) -
                                           brute_force_cumulative(d, reward, N))
                                              .cwiseAbs()
                                              .maxCoeff());
    }
    const auto u = unbounded_until(d, phi1, phi2);
    if (std::holds_alternative<Vector>(u)) {
      ++solved_until;
      worst_direct = std::max(worst_direct, (solved(u) - direct_until(d, phi1, phi2)).cwiseAbs().maxCoeff());
    } else {
      o.require(false, "unbounded_until did not converge for seed " + std::to_string(seed));
    }
    StateSet target = phi2;
    target.insert(m - 1);
    const auto rr = reach_reward(d, RewardStructure(reward), target);
    if (std::holds_alternative<Vector>(rr)) {
      ++solved_reward;
      const Vector oracle = direct_reach_reward(d, reward, target);
      for (std::size_t s = 0; s < m; ++s) {
        const double a = solved(rr)[s], b = oracle[s];
        if (std::isinf(a) || std::isinf(b)) {
          if (std::isinf(a) != std::isinf(b)) o.require(false, "infinite reward mismatch for seed " + std::to_string(seed));
        } else {
          worst_direct = std::max(worst_direct, std::abs(a - b));
        }
      }
    } else {
      o.require(false, "reach_reward did not converge for seed " + std::to_string(seed));
    }
  }
  const double elapsed = seconds_since(t0);
  o.require(worst_brute <= 1e-9, "brute-force deviation " + fmt(worst_brute));
  o.require(worst_direct <= 1e-8, "direct-solve deviation " + fmt(worst_direct));
  o.require(elapsed < 30.0, "took " + fmt(elapsed) + " s");
  if (o.pass)
    o.detail = "max |diff| brute " + fmt(worst_brute) + ", direct " + fmt(worst_direct) + " over " +
               std::to_string(solved_until + solved_reward) + " solves in " + fmt(elapsed) + " s";
  return o;
}

// ---- AC4 --------------------------------------------------------------------

Outcome ac4() {
  Outcome o;
  Matrix two(2, 2);
  two << 0.5, 0.5, 1, 0;
  const Vector pi2 = solved(steady_state(Dtmc(two, Vector::Unit(2, 0))));
  o.require(std::abs(pi2[0] - 2.0 / 3) <= 1e-12 && std::abs(pi2[1] - 1.0 / 3) <= 1e-12,
            "2-state chain gives [" + fmt(pi2[0]) + ", " + fmt(pi2[1]) + "]");

  double worst_sum = 0.0, worst_inv = 0.0, worst_sim = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t m = 1 + seed % 6;
    const Dtmc d = random_dtmc(m, seed);
    const auto ss = steady_state(d);
    if (!std::holds_alternative<Vector>(ss)) {
      o.require(false, "steady_state did not converge for seed " + std::to_string(seed));
      continue;
    }
    const Vector& pi = solved(ss);
    worst_sum = std::max(worst_sum, std::abs(pi.sum() - 1.0));
    worst_inv = std::max(worst_inv, (pi.transpose() * d.P() - pi.transpose()).cwiseAbs().maxCoeff());
  }
  // Simulated occupancy on irreducible chains: one 10^6-step path per state.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t m = 2 + seed % 5;
    const Dtmc d = random_dtmc(m, 1000 + seed, 1.0);
    const Vector pi = solved(steady_state(d));
    for (std::size_t s = 0; s < m; ++s) {
      McOptions mc;
      mc.samples = 1;
      mc.horizon = 1000000;
      mc.seed = seed * 16 + s;
      const auto est = mc_estimate(d, OccupancyQuery{StateSet::of(m, {s})}, mc);
      worst_sim = std::max(worst_sim, std::abs(est.estimate - pi[s]));
    }
  }
  o.require(worst_sum <= 1e-8, "sum deviates by " + fmt(worst_sum));
  o.require(worst_inv <= 1e-8, "invariance residual " + fmt(worst_inv));
  o.require(worst_sim <= 0.005, "simulated occupancy off by " + fmt(worst_sim));
  if (o.pass)
    o.detail = "sum " + fmt(worst_sum) + ", residual " + fmt(worst_inv) + ", simulation " + fmt(worst_sim);
  return o;
}

// ---- AC5 --------------------------------------------------------------------

std::vector<UserTrace> corpus(const Gpam& model, std::size_t traces, std::size_t min_s, std::size_t max_s,
                              std::uint64_t seed) {
  GeneratorSpec spec;
  spec.num_traces = traces;
  spec.min_sessions = min_s;
  spec.max_sessions = max_s;
  spec.max_events_per_session = 60;
  spec.seed = seed;
  return generate(model, spec).traces;
}

Outcome ac5() {
  Outcome o;
  double worst_drop = 0.0;
  std::size_t steps = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Vocabulary v({"A", "B", "C", "D"});
    const Gpam truth = random_gpam(v, 2 + seed % 2, seed);
    const auto traces = corpus(truth, 25, 5, 10, seed);
    FitOptions f;
    f.components = 1 + seed % 3;
    f.restarts = 4;
    f.max_iters = 60;
    f.seed = seed;
    const auto r = fit(traces, v, f);
    for (const auto& h : r.report.restart_log_likelihood)
      for (std::size_t i = 1; i < h.size(); ++i, ++steps) worst_drop = std::max(worst_drop, h[i - 1] - h[i]);
  }
  o.require(worst_drop <= 1e-9, "log-likelihood dropped by " + fmt(worst_drop));

  const Vocabulary v({"A", "B", "C"});
  const Gpam truth = random_gpam(v, 2, 77);
  const auto traces = corpus(truth, 40, 5, 10, 77);
  FitOptions one;
  one.components = 1;
  const auto r1 = fit(traces, v, one);
  const double mle_gap =
      (r1.model.B(0) - smoothed_bigram_mle(encode_corpus(traces, v), v.size())).cwiseAbs().maxCoeff();
  o.require(mle_gap <= 1e-12, "K=1 differs from the smoothed MLE by " + fmt(mle_gap));

  FitOptions two;
  two.components = 2;
  two.restarts = 5;
  two.max_iters = 40;
  two.seed = 11;
  const auto a = fit(traces, v, two), b = fit(traces, v, two);
  o.require(a.model == b.model && model_to_json(a.model, &a.report) == model_to_json(b.model, &b.report),
            "same seed gave different models");
  if (o.pass)
    o.detail = std::to_string(steps) + " EM steps, max drop " + fmt(worst_drop) + ", K=1 gap " + fmt(mle_gap);
  return o;
}

// ---- AC6 --------------------------------------------------------------------

/// Two patterns over A, B, C: one leans on A, the other on C, each with a long
/// mean session; patterns persist across events.
Gpam separated_gpam() {
  const Vocabulary v({"A", "B", "C"});
  Matrix b0(5, 5), b1(5, 5);
  // columns: startS, stopS, A, B, C
  b0 << 0, 0.10, 0.65, 0.20, 0.05,
        1, 0, 0, 0, 0,
        0, 0.10, 0.65, 0.20, 0.05,
        0, 0.10, 0.65, 0.20, 0.05,
        0, 0.10, 0.65, 0.20, 0.05;
  b1 << 0, 0.10, 0.05, 0.20, 0.65,
        1, 0, 0, 0, 0,
        0, 0.10, 0.05, 0.20, 0.65,
        0, 0.10, 0.05, 0.20, 0.65,
        0, 0.10, 0.05, 0.20, 0.65;
  Matrix A(2, 2);
  A << 0.98, 0.02, 0.02, 0.98;
  return Gpam(v, Vector::Constant(2, 0.5), A, {b0, b1});
}

Outcome ac6() {
  Outcome o;
  const Gpam truth = separated_gpam();
  const std::size_t n = truth.states();
  std::size_t separated = 0;
  for (std::size_t y = 0; y < n; ++y)
    separated += 0.5 * (truth.B(0).row(y) - truth.B(1).row(y)).cwiseAbs().sum() >= 0.5;
  o.require(2 * separated >= n, "truth is not well separated");

  const auto t0 = Clock::now();
  std::size_t recovered = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto traces = corpus(truth, 500, 20, 40, 500 + seed);
    FitOptions f;
    f.components = 2;
    f.restarts = 10;
    f.max_iters = 200;
    f.seed = seed;
    f.threads = std::max(1u, std::thread::hardware_concurrency());
    const auto r = fit(traces, truth.vocab(), f);
    double best = INFINITY;
    for (const std::vector<std::size_t>& perm : {std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{1, 0}}) {
      double row_max = 0.0;
      for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t y = 0; y < n; ++y)
          row_max = std::max(row_max, (r.model.B(perm[x]).row(y) - truth.B(x).row(y)).cwiseAbs().sum());
      best = std::min(best, row_max);
    }
    worst = std::max(worst, best);
    recovered += best <= 0.05;
  }
  const double elapsed = seconds_since(t0);
  o.require(recovered >= 19, std::to_string(recovered) + "/20 seeds recovered");
  o.require(elapsed < 300.0, "took " + fmt(elapsed) + " s");
  if (o.pass)
    o.detail = std::to_string(recovered) + "/20 seeds within L1 0.05 (worst row " + fmt(worst) + ") in " +
               fmt(elapsed) + " s";
  return o;
}

// ---- AC7 --------------------------------------------------------------------

Outcome ac7() {
  Outcome o;
  double worst_pair = 0.0, worst_lr = 0.0;
  std::size_t cells = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Gpam m = random_gpam(Vocabulary({"A", "B", "C"}), 2, seed);
    for (std::size_t i = 0; i < 2; ++i)
      for (const auto& j : m.vocab().labels()) {
        if (j == "stopS") continue;
        const double sw = value_of(state_to_pattern(m, i, 1 - i, j, 0.5).likelihood);
        const double st = value_of(state_to_stop(m, i, j, 0.5).likelihood);
        ++cells;
        if (std::isnan(sw) || std::isnan(st)) {
          o.require(false, "missing value at seed " + std::to_string(seed));
          continue;
        }
        worst_pair = std::max(worst_pair, std::abs(sw + st - 1.0));
      }
    worst_lr = std::max(worst_lr, std::abs(value_of(long_run_pattern(m, 0)) + value_of(long_run_pattern(m, 1)) - 1.0));
  }
  o.require(worst_pair <= 1e-9, "switch + stop deviates by " + fmt(worst_pair));
  o.require(worst_lr <= 1e-8, "long-run sum deviates by " + fmt(worst_lr));
  if (o.pass)
    o.detail = std::to_string(cells) + " product states, max |switch+stop-1| " + fmt(worst_pair) +
               ", max |sum LR-1| " + fmt(worst_lr);
  return o;
}

// ---- AC8 --------------------------------------------------------------------

Outcome ac8() {
  Outcome o;
  Matrix P(3, 3);
  P << 0.5, 0.5, 0, 0, 1, 0, 0, 0, 1;
  Labelling l;
  l.atoms["y=A"] = StateSet::of(3, {0});
  l.atoms["y=C"] = StateSet::of(3, {2});
  l.atoms["none"] = StateSet(3);
  const Dtmc d(P, Vector::Unit(3, 0), l);
  const auto inf = check(d, parse_property("R{rSteps}=?[ F y=C ]"));
  const auto empty = check(d, parse_property("filter(state, P=?[ X y=A ], none)"));

  const double eps = 1e-9;
  Matrix S(4, 4);
  S << 0, 1 - eps, eps / 2, eps / 2, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1;
  Labelling sl;
  sl.atoms["y=C"] = StateSet::of(4, {2});
  const Dtmc slow(S, Vector::Unit(4, 0), sl);
  const auto raw = unbounded_until(slow, StateSet::all(4), StateSet::of(4, {2}));
  const auto nc = check(slow, parse_property("P=?[ F y=C ]"));

  o.require(inf == PropertyResult{Infinite{}}, "unreachable target is not Infinite");
  o.require(empty == PropertyResult{NotAvailable{Unavailable::FilterEmpty}}, "empty filter is not filter-empty");
  o.require(std::holds_alternative<NonConvergent>(raw) && std::get<NonConvergent>(raw).iterations == 100000,
            "slow chain did not stop at the 100000-iteration cap");
  o.require(nc == PropertyResult{NotAvailable{Unavailable::NonConvergent}}, "slow chain is not NonConvergent");

  PatternResultTable t;
  t.patterns = 3;
  t.rows.push_back({SuiteProperty::StepCountInit, "C", {inf, empty, nc}, {}});
  assign_ranks(t);
  const std::string csv = suite_to_csv(t);
  o.require(csv == "property,state,x=0,x=1,x=2\nStepCountInit,C,---,---,---\n", "CSV was: " + csv);
  if (o.pass) o.detail = "Infinite, filter-empty and NonConvergent all render ---";
  return o;
}

// ---- AC9, AC10: the command-line tool -----------------------------------------

std::string quote(const std::string& s) { return "'" + s + "'"; }

int run_cli(const std::string& args) {
  const std::string cmd = quote(TRACESTYLES_CLI_PATH) + " " + args + " 2>/dev/null";
  return std::system(cmd.c_str());
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) {
      std::ifstream in(e.path(), std::ios::binary);
      std::ostringstream s;
      s << in.rdbuf();
      files[fs::relative(e.path(), root).string()] = s.str();
    }
  return files;
}

Outcome ac9(const fs::path& scratch) {
  Outcome o;
  std::vector<std::string> labels;
  for (int k = 0; k < 14; ++k) labels.push_back("Screen" + std::to_string(k));
  const Vocabulary v(labels);
  GeneratorSpec spec;
  spec.num_traces = 300;
  spec.min_sessions = 25;
  spec.max_sessions = 35;
  spec.max_events_per_session = 200;
  spec.seed = 9;
  const auto g = generate(random_gpam(v, 2, 9), spec);
  const fs::path input = scratch / "ac9" / "traces.ndjson";
  write_text(input, write_traces(g.traces));

  const auto t0 = Clock::now();
  const int code = run_cli("fit --input " + quote(input.string()) + " --k 2 --restarts 20 --threads 1 --seed 1 --out " +
                           quote((scratch / "ac9" / "fit").string()));
  const double elapsed = seconds_since(t0);
  o.require(code == 0, "fit exited with " + std::to_string(code));
  o.require(fs::exists(scratch / "ac9" / "fit" / "model.json"), "no model.json");
  o.require(elapsed < 600.0, "took " + fmt(elapsed) + " s");
  if (o.pass)
    o.detail = "n=" + std::to_string(v.size()) + ", " + std::to_string(g.report.sessions) + " sessions, " +
               std::to_string(g.report.events) + " events, 20 restarts in " + fmt(elapsed) + " s";
  return o;
}

Outcome ac10(const fs::path& scratch) {
  Outcome o;
  GeneratorSpec spec;
  spec.num_traces = 40;
  spec.min_sessions = 5;
  spec.max_sessions = 60;
  spec.session_gap_seconds = 4 * 3600;
  spec.seed = 10;
  const auto g = generate(random_gpam(Vocabulary({"Main", "Stats", "Settings", "T&C"}), 2, 10), spec);
  const fs::path input = scratch / "ac10" / "traces.ndjson";
  write_text(input, write_traces(g.traces));
  auto suite = [&](const std::string& out) {
    return run_cli("suite --input " + quote(input.string()) +
                   " --intervals 0:1,0:7 --k 2,3 --restarts 3 --max-iters 30 --seed 5 --threads 2 "
                   "--btw Main:Stats --out " +
                   quote((scratch / "ac10" / out).string()));
  };
  const int a = suite("a"), b = suite("b");
  o.require(a == 0 && b == 0, "suite exited with " + std::to_string(a) + "/" + std::to_string(b));
  if (o.pass) {
    const auto ta = tree(scratch / "ac10" / "a"), tb = tree(scratch / "ac10" / "b");
    o.require(!ta.empty(), "empty output tree");
    o.require(ta == tb, "output trees differ");
    if (o.pass) o.detail = std::to_string(ta.size()) + " files byte-identical across runs";
  }
  return o;
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "tracestyles_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1", ac1},
      {"AC2", ac2},
      {"AC3", ac3},
      {"AC4", ac4},
      {"AC5", ac5},
      {"AC6", ac6},
      {"AC7", ac7},
      {"AC8", ac8},
      {"AC9", [&] { return ac9(scratch); }},
      {"AC10", [&] { return ac10(scratch); }},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::cout << name << ' ' << (o.pass ? "PASS" : "FAIL") << ' ' << o.detail << std::endl;
  }
  fs::remove_all(scratch);
  return failures == 0 ? 0 : 1;
}
