#include "tracestyles/property_suite.hpp"

#include "tracestyles/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace tracestyles {

std::string_view property_name(SuiteProperty property) {
  switch (property) {
    case SuiteProperty::VisitProbInit: return "VisitProbInit";
    case SuiteProperty::StepCountInit: return "StepCountInit";
    case SuiteProperty::VisitCountInit: return "VisitCountInit";
    case SuiteProperty::SessionLength: return "SessionLength";
    case SuiteProperty::SessionCount: return "SessionCount";
    case SuiteProperty::VisitProbBtw: return "VisitProbBtw";
    case SuiteProperty::StepCountBtw: return "StepCountBtw";
    case SuiteProperty::StateToPattern: return "StateToPattern";
    case SuiteProperty::StateToStop: return "StateToStop";
    case SuiteProperty::LongRunPattern: return "LongRunPattern";
  }
  return "?";
}

std::string_view property_template(SuiteProperty property) {
  switch (property) {
    case SuiteProperty::VisitProbInit: return "P=?[ true U<=${N} (y=${j}) ]";
    case SuiteProperty::StepCountInit: return "R{rSteps}=?[ F (y=${j}) ]";
    case SuiteProperty::VisitCountInit: return "R{rState${j}}=?[ C<=${N} ]";
    case SuiteProperty::SessionLength: return "R{rSteps}=?[ F (y=stopS) ]";
    case SuiteProperty::SessionCount: return "R{rStatestopS}=?[ C<=${N} ]";
    case SuiteProperty::VisitProbBtw:
      return "filter(state, P=?[ (!(y=stopS)) U<=${N} (y=${j2}) ], (y=${j1}))";
    case SuiteProperty::StepCountBtw:
      return "filter(state, R{rSteps}=?[ F (y=${j2}) ], (y=${j1}))";
    case SuiteProperty::StateToPattern:
      return "P>=1[ F (x=${i1} & y=${j}) ] & "
             "P>=1[ G ((x=${i1} & y=${j}) => P>${p}[ (x=${i1} & !(y=stopS)) U (x=${i2}) ]) ]";
    case SuiteProperty::StateToStop:
      // The target requires the stop to happen inside pattern i, so that a step
      // that switches pattern and ends the session at once is not counted here.
      return "P>=1[ F (x=${i} & y=${j}) ] & "
             "P>=1[ G ((x=${i} & y=${j}) => P>${p}[ (x=${i}) U (x=${i} & y=stopS) ]) ]";
    case SuiteProperty::LongRunPattern: return "S=?[ x=${i} ]";
  }
  return "";
}

std::map<std::string, std::string> template_values(std::size_t N, double p) {
  return {{"N", std::to_string(N)}, {"p", format_double(p)}};
}

void SuiteParams::validate() const {
  if (N < 1) throw ArgumentError("N must be at least 1");
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("p must lie in [0, 1]");
}

std::string_view rank_name(Rank rank) {
  switch (rank) {
    case Rank::None: return "";
    case Rank::Best: return "best";
    case Rank::Middle: return "middle";
    case Rank::Worst: return "worst";
  }
  return "";
}

const SuiteRow* PatternResultTable::find(SuiteProperty property, std::string_view state) const {
  for (const auto& row : rows)
    if (row.property == property && row.state == state) return &row;
  return nullptr;
}

const PropertyResult& PatternResultTable::at(SuiteProperty property, std::string_view state,
                                             std::size_t pattern) const {
  const SuiteRow* row = find(property, state);
  if (!row || pattern >= row->results.size())
    throw ArgumentError("missing result cell " + std::string(property_name(property)) + "/" +
                        std::string(state) + "/x=" + std::to_string(pattern));
  return row->results[pattern];
}

namespace {

struct RowSpec {
  SuiteProperty property;
  std::string state;
  Property formula;
};

std::vector<RowSpec> suite_rows(const Vocabulary& vocab, const SuiteParams& params) {
  auto values = template_values(params.N, params.p);
  std::vector<RowSpec> rows;
  auto add = [&](SuiteProperty prop, std::string state) {
    rows.push_back({prop, std::move(state),
                    parse_property(expand_template(property_template(prop), values))});
  };
  for (auto prop : {SuiteProperty::VisitProbInit, SuiteProperty::StepCountInit,
                    SuiteProperty::VisitCountInit})
    for (const auto& label : vocab.labels()) {
      values["j"] = format_label(label);
      add(prop, label);
    }
  add(SuiteProperty::SessionLength, "");
  add(SuiteProperty::SessionCount, "");
  for (auto prop : {SuiteProperty::VisitProbBtw, SuiteProperty::StepCountBtw})
    for (const auto& [j1, j2] : params.between) {
      vocab.index(j1);
      vocab.index(j2);
      values["j1"] = format_label(j1);
      values["j2"] = format_label(j2);
      add(prop, j1 + "->" + j2);
    }
  return rows;
}

/// +1 when larger values are better, -1 when smaller are, 0 when unranked.
int direction(SuiteProperty property) {
  switch (property) {
    case SuiteProperty::VisitProbInit:
    case SuiteProperty::VisitCountInit:
    case SuiteProperty::VisitProbBtw: return 1;
    case SuiteProperty::StepCountInit:
    case SuiteProperty::StepCountBtw: return -1;
    default: return 0;
  }
}

/// Runs body(i) for i in [0, count) on up to `threads` workers.
template <class Body>
void parallel_for(std::size_t count, std::size_t threads, Body body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

void assign_ranks(PatternResultTable& table) {
  for (auto& row : table.rows) {
    row.ranks.assign(row.results.size(), Rank::None);
    const int dir = direction(row.property);
    if (dir == 0) continue;
    std::vector<std::size_t> available;
    for (std::size_t a = 0; a < row.results.size(); ++a)
      if (std::holds_alternative<Value>(row.results[a])) available.push_back(a);
    if (available.size() < 2) continue;
    auto score = [&](std::size_t a) { return dir * std::get<Value>(row.results[a]).value; };
    std::size_t best = available.front(), worst = available.front();
    for (auto a : available) {
      if (score(a) > score(best)) best = a;
      if (score(a) < score(worst)) worst = a;
    }
    if (score(best) == score(worst)) continue;
    for (auto a : available) row.ranks[a] = Rank::Middle;
    row.ranks[best] = Rank::Best;
    row.ranks[worst] = Rank::Worst;
  }
}

PatternResultTable run_suite(const Gpam& model, const Grouping& grouping, const SuiteParams& params) {
  params.validate();
  const auto specs = suite_rows(model.vocab(), params);
  const std::size_t K = model.components();
  PatternResultTable table;
  table.patterns = K;
  for (const auto& spec : specs)
    table.rows.push_back({spec.property, spec.state, std::vector<PropertyResult>(K, Value{0.0}), {}});

  parallel_for(K, params.threads, [&](std::size_t x) {
    const Dtmc dtmc = to_dtmc(extract_pattern(model, x), grouping);
    for (std::size_t r = 0; r < specs.size(); ++r)
      table.rows[r].results[x] = check(dtmc, specs[r].formula, params.solver);
  });
  assign_ranks(table);
  return table;
}

PredominanceReport predominant_states(const PatternResultTable& table, const SuiteParams& params) {
  PredominanceReport report;
  report.per_pattern.resize(table.patterns);
  const double N = static_cast<double>(params.N);
  std::vector<std::string> labels;
  for (const auto& row : table.rows)
    if (row.property == SuiteProperty::VisitProbInit && row.state != kStartLabel &&
        row.state != kStopLabel)
      labels.push_back(row.state);

  auto value = [](const PropertyResult& r) -> std::optional<double> {
    if (const auto* v = std::get_if<Value>(&r)) return v->value;
    return std::nullopt;
  };

  for (std::size_t a = 0; a < table.patterns; ++a) {
    struct Entry {
      std::string label;
      double visits;
      double steps;
    };
    std::vector<Entry> entries;
    for (const auto& j : labels) {
      const auto prob = value(table.at(SuiteProperty::VisitProbInit, j, a));
      const auto visits = value(table.at(SuiteProperty::VisitCountInit, j, a));
      const auto steps = value(table.at(SuiteProperty::StepCountInit, j, a));
      if (!prob || !visits || !steps) continue;
      if (!(*prob > 0.5 && *visits > 1.0 && *steps < N)) continue;
      bool dominated = false;
      for (std::size_t b = 0; b < table.patterns && !dominated; ++b) {
        if (b == a) continue;
        const auto vb = value(table.at(SuiteProperty::VisitCountInit, j, b));
        const auto sb = value(table.at(SuiteProperty::StepCountInit, j, b));
        dominated = vb && sb && *vb >= 3.0 * *visits && *sb <= *steps / 3.0;
      }
      if (!dominated) entries.push_back({j, *visits, *steps});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) {
      if (l.visits != r.visits) return l.visits > r.visits;
      if (l.steps != r.steps) return l.steps < r.steps;
      return l.label < r.label;
    });
    for (auto& e : entries) report.per_pattern[a].push_back(std::move(e.label));
  }
  return report;
}

namespace {

void check_component(const Gpam& model, std::size_t i) {
  if (i >= model.components())
    throw ArgumentError("component " + std::to_string(i) + " out of range (K = " +
                        std::to_string(model.components()) + ")");
}

/// The inner until of StateToPattern (to != from) or StateToStop (to == from).
std::string inner_until(std::size_t from, std::size_t to) {
  const auto i = std::to_string(from);
  if (from == to) return "P=?[ (x=" + i + ") U (x=" + i + " & y=stopS) ]";
  return "P=?[ (x=" + i + " & !(y=stopS)) U (x=" + std::to_string(to) + ") ]";
}

SwitchVerdict switch_verdict(const Gpam& model, std::size_t from, std::size_t to,
                             std::string_view j, double p, const SolverSettings& settings) {
  check_component(model, from);
  check_component(model, to);
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("p must lie in [0, 1]");
  const std::size_t y = model.vocab().index(j);
  const ProductChain chain = product_chain(model);
  const Dtmc dtmc = to_dtmc(chain);
  auto values = template_values(1, p);
  values["j"] = format_label(j);
  values["i"] = values["i1"] = std::to_string(from);
  values["i2"] = std::to_string(to);
  const auto prop = from == to ? SuiteProperty::StateToStop : SuiteProperty::StateToPattern;
  const auto formula = parse_property(expand_template(property_template(prop), values));
  return {check(dtmc, formula, settings),
          check_state(dtmc, parse_formula(inner_until(from, to)), chain.index(from, y), settings)};
}

}  // namespace

PropertyResult long_run_pattern(const Gpam& model, std::size_t component,
                                const SolverSettings& settings) {
  check_component(model, component);
  auto values = template_values(1);
  values["i"] = std::to_string(component);
  const auto formula =
      parse_property(expand_template(property_template(SuiteProperty::LongRunPattern), values));
  return check(to_dtmc(product_chain(model)), formula, settings);
}

SwitchVerdict state_to_pattern(const Gpam& model, std::size_t i1, std::size_t i2,
                               std::string_view j, double p, const SolverSettings& settings) {
  if (i1 == i2) throw ArgumentError("state_to_pattern needs two different components");
  return switch_verdict(model, i1, i2, j, p, settings);
}

SwitchVerdict state_to_stop(const Gpam& model, std::size_t i, std::string_view j, double p,
                            const SolverSettings& settings) {
  return switch_verdict(model, i, i, j, p, settings);
}

SwitchingSummary switching_summary(const Gpam& model, const SolverSettings& settings) {
  const std::size_t K = model.components(), n = model.states();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const ProductChain chain = product_chain(model);
  const Dtmc dtmc = to_dtmc(chain);
  const StateSet reachable = dtmc.reachable();
  SwitchingSummary out{Matrix::Constant(K, K, nan), Vector::Constant(K, nan)};

  for (std::size_t from = 0; from < K; ++from)
    for (std::size_t to = 0; to < K; ++to) {
      auto solved = evaluate(dtmc, parse_formula(inner_until(from, to)), settings);
      if (!std::holds_alternative<StateValues>(solved)) continue;
      const auto& v = std::get<Vector>(std::get<StateValues>(solved));
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t y = 0; y < n; ++y) {
        const auto s = chain.index(from, y);
        if (y == model.vocab().stop_index() || !reachable.contains(s)) continue;
        sum += v[s];
        ++count;
      }
      const double avg = count ? sum / static_cast<double>(count) : nan;
      if (from == to)
        out.to_stop[from] = avg;
      else
        out.to_pattern(from, to) = avg;
    }
  return out;
}

SuiteReport run_full_suite(const Gpam& model, const Grouping& grouping, const SuiteParams& params) {
  SuiteReport report;
  report.table = run_suite(model, grouping, params);
  report.predominance = predominant_states(report.table, params);
  for (std::size_t i = 0; i < model.components(); ++i)
    report.long_run.push_back(long_run_pattern(model, i, params.solver));
  report.switching = switching_summary(model, params.solver);
  return report;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string suite_to_csv(const PatternResultTable& table) {
  std::ostringstream out;
  out << "property,state";
  for (std::size_t x = 0; x < table.patterns; ++x) out << ",x=" << x;
  out << '\n';
  for (const auto& row : table.rows) {
    out << property_name(row.property) << ',' << csv_field(row.state);
    for (const auto& r : row.results) out << ',' << csv_field(render(r));
    out << '\n';
  }
  return out.str();
}

nlohmann::json result_to_json(const PropertyResult& result) {
  nlohmann::json j;
  if (const auto* v = std::get_if<Value>(&result)) {
    j["kind"] = "value";
    j["value"] = v->value;
  } else if (const auto* b = std::get_if<Boolean>(&result)) {
    j["kind"] = "boolean";
    j["value"] = b->value;
  } else if (std::holds_alternative<Infinite>(result)) {
    j["kind"] = "infinite";
  } else {
    j["kind"] = "not-available";
    j["reason"] = reason_name(std::get<NotAvailable>(result).reason);
  }
  j["text"] = render(result);
  return j;
}

std::string suite_to_json(const SuiteReport& report, const SuiteParams& params) {
  using nlohmann::json;
  auto number = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  json j;
  j["N"] = params.N;
  j["p"] = params.p;
  j["patterns"] = report.table.patterns;
  json rows = json::array();
  for (const auto& row : report.table.rows) {
    json cells = json::array();
    for (std::size_t x = 0; x < row.results.size(); ++x) {
      json cell = result_to_json(row.results[x]);
      if (x < row.ranks.size() && row.ranks[x] != Rank::None) cell["rank"] = rank_name(row.ranks[x]);
      cells.push_back(std::move(cell));
    }
    rows.push_back({{"property", property_name(row.property)}, {"state", row.state}, {"cells", cells}});
  }
  j["rows"] = std::move(rows);
  j["predominant"] = report.predominance.per_pattern;
  json long_run = json::array();
  for (const auto& r : report.long_run) long_run.push_back(result_to_json(r));
  j["long_run"] = std::move(long_run);
  json to_pattern = json::array();
  for (Eigen::Index a = 0; a < report.switching.to_pattern.rows(); ++a) {
    json row = json::array();
    for (Eigen::Index b = 0; b < report.switching.to_pattern.cols(); ++b)
      row.push_back(number(report.switching.to_pattern(a, b)));
    to_pattern.push_back(std::move(row));
  }
  json to_stop = json::array();
  for (Eigen::Index a = 0; a < report.switching.to_stop.size(); ++a)
    to_stop.push_back(number(report.switching.to_stop[a]));
  j["switching"] = {{"to_pattern", to_pattern}, {"to_stop", to_stop}};
  return j.dump(1) + "\n";
}

}  // namespace tracestyles
