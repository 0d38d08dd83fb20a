#include "commands.hpp"

#include "tracestyles/error.hpp"
#include "tracestyles/jenks.hpp"
#include "tracestyles/property_suite.hpp"
#include "tracestyles/synthgen.hpp"
#include "tracestyles/trace.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace tracestyles::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  const std::string temp = path + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + temp + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("cannot write '" + temp + "'");
  }
  fs::rename(temp, target, ec);
  if (ec) throw IoError("cannot rename '" + temp + "' to '" + path + "': " + ec.message());
}

// ---- property files ----------------------------------------------------------

namespace {

struct LatentAtoms {
  bool operator()(const True&) const { return false; }
  bool operator()(const Atom& a) const { return a.name.rfind("x=", 0) == 0; }
  bool operator()(const Not& n) const { return in(*n.operand); }
  bool operator()(const And& a) const { return in(*a.lhs) || in(*a.rhs); }
  bool operator()(const ProbCompare& p) const { return in(*p.path); }
  bool operator()(const ProbQuery& p) const { return in(*p.path); }
  bool operator()(const SteadyCompare& s) const { return in(*s.operand); }
  bool operator()(const SteadyQuery& s) const { return in(*s.operand); }
  bool operator()(const RewardReach& r) const { return in(*r.target); }
  bool operator()(const RewardCumulative&) const { return false; }
  bool operator()(const Next& n) const { return in(*n.operand); }
  bool operator()(const Until& u) const { return in(*u.lhs) || in(*u.rhs); }
  bool operator()(const Globally& g) const { return in(*g.operand); }

  bool in(const StateFormula& f) const { return std::visit(*this, f.node); }
  bool in(const PathFormula& f) const { return std::visit(*this, f.node); }
  bool in(const Property& p) const {
    if (const auto* f = std::get_if<FilterExpr>(&p)) return in(f->query) || in(f->condition);
    return in(std::get<StateFormula>(p));
  }
};

/// "Name: formula" -> (Name, formula); unnamed lines give an empty name.
std::pair<std::string, std::string> split_name(const std::string& line) {
  const auto colon = line.find(':');
  if (colon == std::string::npos) return {"", line};
  std::string name = line.substr(0, colon);
  while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) name.pop_back();
  const bool identifier =
      !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_') &&
      std::all_of(name.begin(), name.end(),
                  [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
  if (!identifier) return {"", line};
  auto body = line.substr(colon + 1);
  body.erase(0, body.find_first_not_of(" \t"));
  return {name, body};
}

struct Binding {
  std::map<std::string, std::string> values;
  std::vector<std::string> state;
};

std::vector<Binding> bindings_for(const std::string& text, const Gpam& model, const CheckParams& params) {
  auto has = [&](const char* name) { return text.find(std::string("${") + name + "}") != std::string::npos; };
  std::vector<Binding> out{{template_values(params.N, params.p), {}}};
  auto cross = [&](auto expand) {
    std::vector<Binding> next;
    for (const auto& b : out) expand(b, next);
    out = std::move(next);
  };
  const auto& labels = model.vocab().labels();
  if (has("j"))
    cross([&](const Binding& b, std::vector<Binding>& next) {
      for (const auto& label : labels) {
        Binding c = b;
        c.values["j"] = format_label(label);
        c.state.push_back(label);
        next.push_back(std::move(c));
      }
    });
  if (has("j1") || has("j2")) {
    auto pairs = params.between;
    if (pairs.empty())
      for (const auto& a : labels)
        for (const auto& b : labels)
          if (a != b) pairs.emplace_back(a, b);
    for (const auto& [a, b] : pairs) {
      model.vocab().index(a);
      model.vocab().index(b);
    }
    cross([&](const Binding& b, std::vector<Binding>& next) {
      for (const auto& [j1, j2] : pairs) {
        Binding c = b;
        c.values["j1"] = format_label(j1);
        c.values["j2"] = format_label(j2);
        c.state.push_back(j1 + "->" + j2);
        next.push_back(std::move(c));
      }
    });
  }
  const std::size_t K = model.components();
  if (has("i"))
    cross([&](const Binding& b, std::vector<Binding>& next) {
      for (std::size_t i = 0; i < K; ++i) {
        Binding c = b;
        c.values["i"] = std::to_string(i);
        c.state.push_back("x=" + std::to_string(i));
        next.push_back(std::move(c));
      }
    });
  if (has("i1") || has("i2"))
    cross([&](const Binding& b, std::vector<Binding>& next) {
      for (std::size_t i1 = 0; i1 < K; ++i1)
        for (std::size_t i2 = 0; i2 < K; ++i2) {
          if (i1 == i2) continue;
          Binding c = b;
          c.values["i1"] = std::to_string(i1);
          c.values["i2"] = std::to_string(i2);
          c.state.push_back("x=" + std::to_string(i1) + "->x=" + std::to_string(i2));
          next.push_back(std::move(c));
        }
    });
  return out;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

}  // namespace

std::vector<CheckRow> check_properties(const Gpam& model, const Grouping& grouping,
                                       const std::vector<std::string>& lines,
                                       const CheckParams& params) {
  if (!(params.p >= 0.0 && params.p <= 1.0)) throw ArgumentError("p must lie in [0, 1]");
  std::vector<Dtmc> patterns;
  for (std::size_t x = 0; x < model.components(); ++x)
    patterns.push_back(to_dtmc(extract_pattern(model, x), grouping));
  std::optional<Dtmc> product;

  std::vector<CheckRow> rows;
  for (const auto& line : lines) {
    const auto [name, text] = split_name(line);
    for (const auto& binding : bindings_for(text, model, params)) {
      const Property formula = parse_property(expand_template(text, binding.values));
      CheckRow row{name.empty() ? text : name, join(binding.state, " "), {}, std::nullopt};
      if (LatentAtoms{}.in(formula)) {
        if (!product) product.emplace(to_dtmc(product_chain(model), grouping));
        row.product = check(*product, formula, params.solver);
      } else {
        for (const auto& dtmc : patterns) row.per_pattern.push_back(check(dtmc, formula, params.solver));
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string check_rows_to_csv(const std::vector<CheckRow>& rows, std::size_t patterns) {
  const bool any_product =
      std::any_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.product.has_value(); });
  std::ostringstream out;
  out << "property,state";
  for (std::size_t x = 0; x < patterns; ++x) out << ",x=" << x;
  if (any_product) out << ",product";
  out << '\n';
  for (const auto& row : rows) {
    out << csv_field(row.property) << ',' << csv_field(row.state);
    for (std::size_t x = 0; x < patterns; ++x)
      out << ',' << (x < row.per_pattern.size() ? csv_field(render(row.per_pattern[x])) : "");
    if (any_product) out << ',' << (row.product ? csv_field(render(*row.product)) : "");
    out << '\n';
  }
  return out.str();
}

std::string check_rows_to_json(const std::vector<CheckRow>& rows, std::size_t patterns) {
  json j;
  j["patterns"] = patterns;
  json list = json::array();
  for (const auto& row : rows) {
    json r{{"property", row.property}, {"state", row.state}};
    if (row.product) {
      r["product"] = result_to_json(*row.product);
    } else {
      json cells = json::array();
      for (const auto& c : row.per_pattern) cells.push_back(result_to_json(c));
      r["cells"] = std::move(cells);
    }
    list.push_back(std::move(r));
  }
  j["rows"] = std::move(list);
  return j.dump(1) + "\n";
}

// ---- subcommands -------------------------------------------------------------

namespace {

struct Common {
  std::string input;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t min_sessions = 5;
  std::string vocab;
  std::string grouping;
  std::size_t threads = 1;
  std::size_t restarts = 200;
  std::size_t max_iters = 100;
  std::size_t n_bound = 50;
  double p = 0.5;
  std::vector<std::string> btw;
  std::string props;
};

struct Options {
  Common c;
  std::string report;
  std::string interval;
  std::vector<std::string> intervals{"0:1", "0:7", "0:30", "30:60", "60:90"};
  std::size_t k = 2;
  std::vector<std::size_t> ks{2};
  std::string model;
  std::size_t traces = 300;
  std::string sessions = "5:30";
  std::size_t max_events = 1000;
  std::int64_t gap = 3600;
};

std::vector<std::pair<std::string, std::string>> parse_pairs(const std::vector<std::string>& items) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& item : items) {
    const auto colon = item.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == item.size())
      throw ArgumentError("state pair '" + item + "' must look like FROM:TO");
    out.emplace_back(item.substr(0, colon), item.substr(colon + 1));
  }
  return out;
}

Vocabulary load_vocabulary(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return Vocabulary(json::parse(text).get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw ParseError("vocabulary file '" + path + "' must be a JSON array of labels: " + e.what(), 0);
  }
}

Grouping load_grouping(const std::string& path) {
  return path.empty() ? Grouping{} : Grouping::parse(read_file(path));
}

std::vector<UserTrace> prepare(const std::vector<UserTrace>& traces, const std::optional<TimeInterval>& interval,
                               std::size_t min_sessions) {
  std::vector<UserTrace> segmented;
  for (const auto& t : traces) segmented.push_back(interval ? segment(t, *interval) : t);
  return filter_min_sessions(segmented, min_sessions);
}

int cmd_ingest(const Options& o, std::ostream& out) {
  const ParsedTraces parsed = parse_traces(read_file(o.c.input));
  const std::string normalised = write_traces(parsed.traces);
  if (o.c.out.empty())
    out << normalised;
  else
    write_file_atomic(o.c.out, normalised);
  const std::string report = repair_report_json(parsed);
  if (o.report.empty()) {
    if (!o.c.out.empty()) out << report;
  } else {
    write_file_atomic(o.report, report);
  }
  return kOk;
}

FitResult fit_corpus(const std::vector<UserTrace>& traces, const Options& o, std::size_t k) {
  if (traces.empty()) throw ArgumentError("no trace has enough sessions to fit");
  const Vocabulary vocab = o.c.vocab.empty() ? build_vocabulary(traces) : load_vocabulary(o.c.vocab);
  FitOptions fo;
  fo.components = k;
  fo.restarts = o.c.restarts;
  fo.max_iters = o.c.max_iters;
  fo.seed = o.c.seed;
  fo.threads = o.c.threads;
  return fit(traces, vocab, fo);
}

int cmd_fit(const Options& o, std::ostream& err) {
  const ParsedTraces parsed = parse_traces(read_file(o.c.input));
  std::optional<TimeInterval> interval;
  if (!o.interval.empty()) interval = TimeInterval::parse(o.interval);
  if (!o.c.vocab.empty()) load_vocabulary(o.c.vocab);
  const std::vector<UserTrace> traces = prepare(parsed.traces, interval, o.c.min_sessions);
  const FitResult result = fit_corpus(traces, o, o.k);
  err << "fit: K=" << o.k << ", " << traces.size() << " traces, log-likelihood "
      << format_double(result.report.log_likelihood()) << " (restart " << result.report.chosen_restart
      << ")\n";
  const fs::path dir = o.c.out.empty() ? fs::path(".") : fs::path(o.c.out);
  write_file_atomic((dir / "model.json").string(), model_to_json(result.model, &result.report));
  write_file_atomic((dir / "fitreport.json").string(), fit_report_to_json(result.report));
  return kOk;
}

CheckParams check_params(const Options& o) {
  CheckParams params;
  params.N = o.c.n_bound;
  params.p = o.c.p;
  params.between = parse_pairs(o.c.btw);
  return params;
}

int cmd_check(const Options& o, std::ostream& out, std::ostream& err) {
  const Gpam model = model_from_json(read_file(o.model));
  const Grouping grouping = load_grouping(o.c.grouping);
  const auto lines = read_property_lines(read_file(o.c.props));
  std::vector<CheckRow> rows;
  try {
    rows = check_properties(model, grouping, lines, check_params(o));
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kPropertyFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kPropertyFailed;
  }
  const bool as_json = o.c.out.size() >= 5 && o.c.out.compare(o.c.out.size() - 5, 5, ".json") == 0;
  const std::string text = as_json ? check_rows_to_json(rows, model.components())
                                   : check_rows_to_csv(rows, model.components());
  if (o.c.out.empty())
    out << text;
  else
    write_file_atomic(o.c.out, text);
  return kOk;
}

json jenks_json(const JenksClassification& c) {
  return json{{"breaks", c.breaks}, {"classes", c.classes}, {"gvf", c.goodness_of_variance_fit}};
}

int cmd_suite(const Options& o, std::ostream& err) {
  const ParsedTraces parsed = parse_traces(read_file(o.c.input));
  const Grouping grouping = load_grouping(o.c.grouping);
  std::vector<TimeInterval> intervals;
  for (const auto& text : o.intervals) intervals.push_back(TimeInterval::parse(text));
  if (o.ks.empty()) throw ArgumentError("no K given");
  for (auto k : o.ks)
    if (k < 1) throw ArgumentError("every K must be at least 1");
  SuiteParams sp;
  sp.N = o.c.n_bound;
  sp.p = o.c.p;
  sp.between = parse_pairs(o.c.btw);
  sp.threads = o.c.threads;
  sp.validate();
  std::vector<std::string> prop_lines;
  if (!o.c.props.empty()) prop_lines = read_property_lines(read_file(o.c.props));
  if (!o.c.vocab.empty()) load_vocabulary(o.c.vocab);
  const fs::path root = o.c.out.empty() ? fs::path("out") : fs::path(o.c.out);

  struct Cell {
    std::string interval;
    std::size_t k;
    std::size_t pattern;
    std::optional<double> count, length;
    std::vector<std::string> predominant;
  };
  std::vector<Cell> cells;
  json runs = json::array();
  bool failed = false;

  for (const auto& interval : intervals) {
    std::vector<UserTrace> traces;
    for (auto k : o.ks) {
      json run{{"interval", interval.name()}, {"K", k}};
      try {
        traces = prepare(parsed.traces, interval, o.c.min_sessions);
        const FitResult fitted = fit_corpus(traces, o, k);
        const SuiteReport report = run_full_suite(fitted.model, grouping, sp);
        const fs::path dir = root / interval.name() / ("K" + std::to_string(k));
        write_file_atomic((dir / "model.json").string(), model_to_json(fitted.model, &fitted.report));
        write_file_atomic((dir / "fitreport.json").string(), fit_report_to_json(fitted.report));
        write_file_atomic((dir / "suite.csv").string(), suite_to_csv(report.table));
        write_file_atomic((dir / "suite.json").string(), suite_to_json(report, sp));
        if (!prop_lines.empty()) {
          CheckParams cp;
          cp.N = sp.N;
          cp.p = sp.p;
          cp.between = sp.between;
          const auto rows = check_properties(fitted.model, grouping, prop_lines, cp);
          write_file_atomic((dir / "props.csv").string(), check_rows_to_csv(rows, k));
        }
        for (std::size_t x = 0; x < k; ++x) {
          Cell cell{interval.name(), k, x, std::nullopt, std::nullopt, report.predominance.per_pattern[x]};
          if (const auto* v = std::get_if<Value>(&report.table.at(SuiteProperty::SessionCount, "", x)))
            cell.count = v->value;
          if (const auto* v = std::get_if<Value>(&report.table.at(SuiteProperty::SessionLength, "", x)))
            cell.length = v->value;
          cells.push_back(std::move(cell));
        }
        run["status"] = "ok";
        run["traces"] = traces.size();
        run["log_likelihood"] = fitted.report.log_likelihood();
        err << "suite: " << interval.name() << " K=" << k << " done (" << traces.size() << " traces)\n";
      } catch (const Error& e) {
        failed = true;
        run["status"] = "failed";
        run["error"] = e.what();
        err << "suite: " << interval.name() << " K=" << k << " failed: " << e.what() << '\n';
      }
      runs.push_back(std::move(run));
    }
  }

  // Session categories per K across every interval and pattern.
  json categories = json::object();
  json cross = json::array();
  for (auto k : o.ks) {
    std::vector<double> counts, lengths;
    for (const auto& c : cells)
      if (c.k == k) {
        if (c.count) counts.push_back(*c.count);
        if (c.length) lengths.push_back(*c.length);
      }
    auto classify = [](const std::vector<double>& values) -> std::optional<JenksClassification> {
      const std::set<double> distinct(values.begin(), values.end());
      if (distinct.empty()) return std::nullopt;
      return jenks_breaks(values, std::min<std::size_t>(3, distinct.size()));
    };
    const auto count_classes = classify(counts);
    const auto length_classes = classify(lengths);
    json entry = json::object();
    entry["session_count"] = count_classes ? jenks_json(*count_classes) : json(nullptr);
    entry["session_length"] = length_classes ? jenks_json(*length_classes) : json(nullptr);
    categories["K" + std::to_string(k)] = std::move(entry);
    for (const auto& c : cells) {
      if (c.k != k) continue;
      json row{{"interval", c.interval}, {"K", k}, {"pattern", c.pattern}, {"predominant", c.predominant}};
      row["session_count"] = c.count ? json(*c.count) : json(nullptr);
      row["session_length"] = c.length ? json(*c.length) : json(nullptr);
      row["count_class"] = c.count && count_classes ? json(count_classes->classify(*c.count)) : json(nullptr);
      row["length_class"] =
          c.length && length_classes ? json(length_classes->classify(*c.length)) : json(nullptr);
      cross.push_back(std::move(row));
    }
  }
  json summary{{"runs", runs}, {"categories", categories}, {"cross_table", cross}};
  write_file_atomic((root / "summary.json").string(), summary.dump(1) + "\n");
  return failed ? kPartialFailure : kOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const Gpam model = model_from_json(read_file(o.model));
  GeneratorSpec spec;
  spec.num_traces = o.traces;
  const auto colon = o.sessions.find(':');
  try {
    if (colon == std::string::npos) {
      spec.min_sessions = spec.max_sessions = std::stoul(o.sessions);
    } else {
      spec.min_sessions = std::stoul(o.sessions.substr(0, colon));
      spec.max_sessions = std::stoul(o.sessions.substr(colon + 1));
    }
  } catch (const std::exception&) {
    throw ArgumentError("--sessions must look like MIN:MAX or COUNT");
  }
  spec.max_events_per_session = o.max_events;
  spec.seed = o.c.seed;
  spec.session_gap_seconds = o.gap;
  const Generated g = generate(model, spec);
  const std::string traces = write_traces(g.traces);
  if (o.c.out.empty())
    out << traces;
  else
    write_file_atomic(o.c.out, traces);
  const std::string report = generation_report_json(g.report);
  if (!o.report.empty())
    write_file_atomic(o.report, report);
  else if (!o.c.out.empty())
    out << report;
  return kOk;
}

/// Adds "--key value" for every key of the --config JSON document that the
/// chosen subcommand knows and the command line does not already set.
std::vector<std::string> apply_config(CLI::App& app, std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  CLI::App* sub = nullptr;
  for (const auto& a : args)
    if (!a.empty() && a[0] != '-') {
      sub = app.get_subcommand_no_throw(a);
      break;
    }
  if (!sub) return args;
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("config file '" + path + "' is not valid JSON: " + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  if (!doc.is_object()) throw ParseError("config file '" + path + "' must be a JSON object", 0);
  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  for (const auto& [key, value] : doc.items()) {
    const std::string flag = "--" + key;
    if (key == "config" || given(flag) || !sub->get_option_no_throw(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_array()) {
      for (const auto& item : value) {
        if (!text.empty()) text += ',';
        text += item.is_string() ? item.get<std::string>() : item.dump();
      }
    } else {
      text = value.dump();
    }
    args.push_back(flag);
    args.push_back(text);
  }
  return args;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Infer behavioural styles from app usage traces and model-check them.", "tracestyles"};
  app.require_subcommand(1);
  Options o;
  Common& c = o.c;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", "Flat JSON file with the same keys as the flags; flags win");
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "Random seed")->envname("TRACE_STYLES_SEED");
  };
  auto add_fit_flags = [&](CLI::App* sub) {
    sub->add_option("--restarts", c.restarts, "EM restarts")->check(CLI::PositiveNumber);
    sub->add_option("--max-iters", c.max_iters, "EM iterations per restart");
    add_seed(sub);
    sub->add_option("--min-sessions", c.min_sessions, "Drop traces with fewer sessions");
    sub->add_option("--vocab", c.vocab, "JSON array fixing the label vocabulary");
    sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto add_property_flags = [&](CLI::App* sub) {
    sub->add_option("--n-bound", c.n_bound, "Step bound N")->check(CLI::PositiveNumber);
    sub->add_option("--p-threshold", c.p, "Switching threshold p")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--grouping", c.grouping, "JSON object of label groups");
    sub->add_option("--btw", c.btw, "FROM:TO label pairs for the between-state properties")
        ->delimiter(',');
  };

  auto* ingest = app.add_subcommand("ingest", "Parse, repair and normalise a trace file");
  ingest->add_option("--input", c.input, "Raw trace file (NDJSON or JSON array)")->required();
  ingest->add_option("--out", c.out, "Normalised trace file (stdout when omitted)");
  ingest->add_option("--report", o.report, "Repair report JSON (stdout when omitted)");
  add_config(ingest);

  auto* fitc = app.add_subcommand("fit", "Fit a GPAM(K) to a trace file");
  fitc->add_option("--input", c.input, "Trace file")->required();
  fitc->add_option("--intervals", o.interval, "Restrict to one day interval T1:T2");
  fitc->add_option("--k", o.k, "Number of activity patterns")->check(CLI::PositiveNumber);
  fitc->add_option("--out", c.out, "Output directory for model.json and fitreport.json");
  add_fit_flags(fitc);
  add_config(fitc);

  auto* checkc = app.add_subcommand("check", "Evaluate a property file against a fitted model");
  checkc->add_option("--model", o.model, "model.json from fit")->required();
  checkc->add_option("--props", c.props, "Property file, one formula per line")->required();
  checkc->add_option("--out", c.out, "Output file (.csv or .json; CSV on stdout when omitted)");
  add_property_flags(checkc);
  add_config(checkc);

  auto* suite = app.add_subcommand("suite", "Fit and analyse every interval and K");
  suite->add_option("--input", c.input, "Trace file")->required();
  suite->add_option("--intervals", o.intervals, "Day intervals, e.g. 0:1,0:7")->delimiter(',');
  suite->add_option("--k", o.ks, "Values of K, e.g. 2,3")->delimiter(',');
  suite->add_option("--props", c.props, "Extra property file checked for every model");
  suite->add_option("--out", c.out, "Output directory (default: out)");
  add_fit_flags(suite);
  add_property_flags(suite);
  add_config(suite);

  auto* synth = app.add_subcommand("synth", "Sample a synthetic trace corpus from a model");
  synth->add_option("--model", o.model, "model.json")->required();
  synth->add_option("--traces", o.traces, "Number of traces")->check(CLI::PositiveNumber);
  synth->add_option("--sessions", o.sessions, "Sessions per trace, MIN:MAX or COUNT (MIN >= 5)");
  synth->add_option("--max-events", o.max_events, "Longest session before a stop is forced");
  synth->add_option("--gap", o.gap, "Seconds between sessions");
  synth->add_option("--out", c.out, "Trace file (stdout when omitted)");
  synth->add_option("--report", o.report, "Generation report JSON");
  add_seed(synth);
  add_config(synth);

  try {
    args = apply_config(app, std::move(args));
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kParseOrIo;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kParseOrIo;
  }

  const int on_argument = fitc->parsed() || suite->parsed() ? kFitFailed
                          : checkc->parsed()                 ? kPropertyFailed
                                                             : kParseOrIo;
  try {
    if (ingest->parsed()) return cmd_ingest(o, out);
    if (fitc->parsed()) return cmd_fit(o, err);
    if (checkc->parsed()) return cmd_check(o, out, err);
    if (suite->parsed()) return cmd_suite(o, err);
    if (synth->parsed()) return cmd_synth(o, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kParseOrIo;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kParseOrIo;
  } catch (const FormulaError& e) {
    err << "error: " << e.what() << '\n';
    return kPropertyFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return on_argument;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kParseOrIo;
  }
  return kParseOrIo;
}

}  // namespace tracestyles::cli
