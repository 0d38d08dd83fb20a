#include "helpers.hpp"

#include "commands.hpp"
#include "tracestyles/property_suite.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace tracestyles;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

/// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("tracestyles_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& file) const { return (dir / file).string(); }
};

const Vocabulary kVocab({"Main", "Stats", "T&C"});

std::string write_corpus(const Scratch& s, std::size_t traces = 30, std::uint64_t seed = 3) {
  const auto path = s / "traces.ndjson";
  cli::write_file_atomic(path, write_traces(testing::sample_corpus(random_gpam(kVocab, 2, seed), traces, seed)));
  return path;
}

std::string data(const std::string& file) { return std::string(TRACESTYLES_TEST_DATA) + "/" + file; }

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = cli::read_file(e.path().string());
  return files;
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"fit", "--help"}).out.find("--restarts") != std::string::npos);
  CHECK(run({}).code == 2);
  CHECK(run({"fit"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("ingest repairs and reports") {
  Scratch s("ingest");
  cli::write_file_atomic(s / "raw.ndjson",
                         R"({"user":"a","label":"Main","ts":5})" "\n"
                         R"({"user":"a","label":"startS","ts":9})" "\n"
                         R"({"user":"a","label":"Stats","ts":10})" "\n");
  const auto r = run({"ingest", "--input", s / "raw.ndjson", "--out", s / "clean.ndjson", "--report", s / "rep.json"});
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(cli::read_file(s / "rep.json"));
  CHECK(report.at("inserted_start") == 1);
  CHECK(report.at("inserted_stop") == 2);
  const auto clean = parse_traces(cli::read_file(s / "clean.ndjson"));
  CHECK(clean.report.total() == 0);
  CHECK(clean.traces.at(0).sessions.size() == 2);

  CHECK(run({"ingest", "--input", s / "missing.ndjson"}).code == 2);
  cli::write_file_atomic(s / "bad.ndjson", "{nope");
  CHECK(run({"ingest", "--input", s / "bad.ndjson"}).code == 2);
}

TEST_CASE("fit writes a model and is reproducible") {
  Scratch s("fit");
  const auto corpus = write_corpus(s);
  const std::vector<std::string> base{"fit", "--input", corpus, "--k", "2", "--restarts", "3", "--max-iters", "15",
                                      "--seed", "7"};
  auto args = base;
  args.insert(args.end(), {"--out", s / "a"});
  REQUIRE(run(args).code == 0);
  args = base;
  args.insert(args.end(), {"--out", s / "b"});
  REQUIRE(run(args).code == 0);
  CHECK(tree(s.dir / "a") == tree(s.dir / "b"));
  const Gpam m = model_from_json(cli::read_file(s / "a/model.json"));
  CHECK(m.components() == 2);
  CHECK(nlohmann::json::parse(cli::read_file(s / "a/fitreport.json")).contains("restarts"));

  // K = 1 is the smoothed bigram estimate of the corpus.
  REQUIRE(run({"fit", "--input", corpus, "--k", "1", "--out", s / "one"}).code == 0);
  const Gpam one = model_from_json(cli::read_file(s / "one/model.json"));
  const auto traces = filter_min_sessions(parse_traces(cli::read_file(corpus)).traces);
  const Matrix mle = smoothed_bigram_mle(encode_corpus(traces, one.vocab()), one.states());
  CHECK((one.B(0) - mle).cwiseAbs().maxCoeff() <= 1e-12);

  // Nothing left after filtering: a fit failure.
  CHECK(run({"fit", "--input", corpus, "--min-sessions", "1000", "--out", s / "none"}).code == 3);
}

TEST_CASE("check reproduces the suite table and reports formula errors") {
  Scratch s("check");
  const auto corpus = write_corpus(s);
  REQUIRE(run({"fit", "--input", corpus, "--k", "2", "--restarts", "2", "--max-iters", "10", "--out", s / "m"}).code ==
          0);
  const auto model_path = s / "m/model.json";
  const auto r = run({"check", "--model", model_path, "--props", data("suite_table.props"), "--btw", "Main:Stats,Stats:T&C"});
  REQUIRE(r.code == 0);

  const Gpam m = model_from_json(cli::read_file(model_path));
  SuiteParams sp;
  sp.between = {{"Main", "Stats"}, {"Stats", "T&C"}};
  CHECK(r.out == suite_to_csv(run_suite(m, {}, sp)));

  REQUIRE(run({"check", "--model", model_path, "--props", data("suite_table.props"), "--out", s / "t.json"}).code == 0);
  CHECK(nlohmann::json::parse(cli::read_file(s / "t.json")).is_object());

  cli::write_file_atomic(s / "lr.props", "S=?[ x=${i} ]\n");
  const auto lr = run({"check", "--model", model_path, "--props", s / "lr.props"});
  REQUIRE(lr.code == 0);
  CHECK(lr.out.rfind("property,state,x=0,x=1,product\n", 0) == 0);
  CHECK(lr.out.find("x=0,,,") != std::string::npos);

  cli::write_file_atomic(s / "bad.props", "P=?[ true U<= ]\n");
  CHECK(run({"check", "--model", model_path, "--props", s / "bad.props"}).code == 4);
  cli::write_file_atomic(s / "unknown.props", "P=?[ F y=Nowhere ]\n");
  CHECK(run({"check", "--model", model_path, "--props", s / "unknown.props"}).code == 4);
  CHECK(run({"check", "--model", s / "absent.json", "--props", s / "bad.props"}).code == 2);
}

TEST_CASE("check with a grouping file") {
  Scratch s("grouping");
  const Vocabulary v({"OverallUsage", "Stats", "ChartOverall", "ChartStats", "Last7Days", "SelectPeriod",
                      "AppsInPeriod", "ChartAppsInPeriod"});
  cli::write_file_atomic(s / "model.json", model_to_json(random_gpam(v, 2, 1)));
  cli::write_file_atomic(s / "g.props", "Summary: P=?[ F group=Summary ]\nboth: P=?[ X (group=Summary & group=Specific) ]\n");
  const auto r = run({"check", "--model", s / "model.json", "--props", s / "g.props", "--grouping",
                      data("screen_groups.json")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Summary,,1,1") != std::string::npos);
}

TEST_CASE("suite writes one bundle per interval and K, reproducibly") {
  Scratch s("suite");
  const auto corpus = write_corpus(s, 20);
  auto args = [&](const std::string& out) {
    return std::vector<std::string>{"suite", "--input", corpus, "--intervals", "0:1,0:7", "--k", "2",
                                    "--restarts", "2", "--max-iters", "8", "--btw", "Main:Stats",
                                    "--props", data("suite_table.props"), "--out", out};
  };
  REQUIRE(run(args(s / "a")).code == 0);
  REQUIRE(run(args(s / "b")).code == 0);
  const auto a = tree(s.dir / "a");
  CHECK(a == tree(s.dir / "b"));
  for (const char* f : {"0-1/K2/model.json", "0-1/K2/suite.csv", "0-1/K2/suite.json", "0-1/K2/props.csv",
                        "0-7/K2/fitreport.json", "summary.json"})
    CHECK_MESSAGE(a.count(f) == 1, f);
  const auto summary = nlohmann::json::parse(a.at("summary.json"));
  CHECK(summary.at("runs").size() == 2);
}

TEST_CASE("synth: seeds, config files and the environment") {
  Scratch s("synth");
  cli::write_file_atomic(s / "model.json", model_to_json(random_gpam(kVocab, 2, 4)));
  const auto a = run({"synth", "--model", s / "model.json", "--traces", "4", "--sessions", "5:7", "--seed", "3"});
  REQUIRE(a.code == 0);
  CHECK(a.out == run({"synth", "--model", s / "model.json", "--traces", "4", "--sessions", "5:7", "--seed", "3"}).out);
  CHECK(parse_traces(a.out).traces.size() == 4);

  cli::write_file_atomic(s / "cfg.json", R"({"traces": 4, "sessions": "5:7", "seed": 3})");
  CHECK(run({"synth", "--model", s / "model.json", "--config", s / "cfg.json"}).out == a.out);
  // Flags override the config file.
  CHECK(run({"synth", "--model", s / "model.json", "--config", s / "cfg.json", "--seed", "4"}).out != a.out);

  ::setenv("TRACE_STYLES_SEED", "3", 1);
  CHECK(run({"synth", "--model", s / "model.json", "--traces", "4", "--sessions", "5:7"}).out == a.out);
  ::unsetenv("TRACE_STYLES_SEED");

  CHECK(run({"synth", "--model", s / "model.json", "--sessions", "2:3"}).code == 2);
  cli::write_file_atomic(s / "broken.json", "{");
  CHECK(run({"synth", "--model", s / "model.json", "--config", s / "broken.json"}).code == 2);
}
