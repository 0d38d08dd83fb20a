#include "tracestyles/error.hpp"
#include "tracestyles/gpam.hpp"
#include "tracestyles/jenks.hpp"
#include "tracestyles/pctl.hpp"
#include "tracestyles/property_suite.hpp"
#include "tracestyles/synthgen.hpp"
#include "tracestyles/trace.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace tracestyles;

namespace {

// Documents cross the boundary as JSON text and come back as Python objects.
py::object loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

std::vector<UserTrace> traces_from(const std::string& text, std::optional<std::string> interval,
                                   std::size_t min_sessions) {
  auto traces = parse_traces(text).traces;
  if (interval) {
    const auto ti = TimeInterval::parse(*interval);
    for (auto& t : traces) t = segment(t, ti);
  }
  return filter_min_sessions(traces, min_sessions);
}

Dtmc model_dtmc(const Gpam& model, std::optional<std::size_t> pattern, const std::string& grouping) {
  const Grouping g = grouping.empty() ? Grouping{} : Grouping::parse(grouping);
  if (pattern) return to_dtmc(extract_pattern(model, *pattern), g);
  return to_dtmc(product_chain(model), g);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Behavioural styles from app usage traces: GPAM fitting and PCTL checking.";

  // Translators run newest first, so the base class goes in first.
  const auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<FormulaError>(m, "FormulaError", error.ptr());
  py::register_exception<ArgumentError>(m, "ArgumentError", error.ptr());

  m.def(
      "normalize_traces",
      [](const std::string& text) {
        const auto parsed = parse_traces(text);
        return py::make_tuple(write_traces(parsed.traces), loads(repair_report_json(parsed)));
      },
      py::arg("text"), "Parse and repair raw events; returns (NDJSON text, repair report).");

  py::class_<Gpam>(m, "Model")
      .def(py::init([](std::vector<std::string> labels, Vector pi, Matrix A, std::vector<Matrix> B) {
             return Gpam(Vocabulary(std::move(labels)), std::move(pi), std::move(A), std::move(B));
           }),
           py::arg("labels"), py::arg("pi"), py::arg("A"), py::arg("B"))
      .def_static("from_json", [](const std::string& text) { return model_from_json(text); })
      .def("to_json", [](const Gpam& g) { return model_to_json(g); })
      .def_property_readonly("K", &Gpam::components)
      .def_property_readonly("labels", [](const Gpam& g) { return g.vocab().labels(); })
      .def_property_readonly("pi", [](const Gpam& g) { return Vector(g.pi()); })
      .def_property_readonly("A", [](const Gpam& g) { return Matrix(g.A()); })
      .def("B", [](const Gpam& g, std::size_t x) { return Matrix(g.B(x)); }, py::arg("component"))
      .def(
          "log_likelihood",
          [](const Gpam& g, const std::string& traces) {
            return log_likelihood(g, parse_traces(traces).traces);
          },
          py::arg("traces"))
      .def("__repr__", [](const Gpam& g) {
        return "<Model K=" + std::to_string(g.components()) + " n=" + std::to_string(g.states()) + ">";
      });

  m.def(
      "fit",
      [](const std::string& traces, std::size_t k, std::size_t restarts, std::size_t max_iters,
         std::uint64_t seed, std::size_t min_sessions, std::optional<std::string> interval,
         std::size_t threads) {
        const auto corpus = traces_from(traces, interval, min_sessions);
        if (corpus.empty()) throw ArgumentError("no trace has enough sessions to fit");
        FitOptions o{k, restarts, max_iters, seed, threads};
        FitResult r = [&] {
          py::gil_scoped_release release;
          return fit(corpus, build_vocabulary(corpus), o);
        }();
        return py::make_tuple(std::move(r.model), loads(fit_report_to_json(r.report)));
      },
      py::arg("traces"), py::arg("k") = 2, py::arg("restarts") = 200, py::arg("max_iters") = 100,
      py::arg("seed") = 0, py::arg("min_sessions") = 5, py::arg("interval") = py::none(),
      py::arg("threads") = 1, "Fit a GPAM(K); returns (Model, fit report).");

  m.def(
      "check",
      [](const Gpam& model, const std::string& formula, std::optional<std::size_t> pattern,
         const std::string& grouping) {
        return loads(result_to_json(check(model_dtmc(model, pattern, grouping), parse_property(formula))).dump());
      },
      py::arg("model"), py::arg("formula"), py::arg("pattern") = py::none(), py::arg("grouping") = "",
      "Check a property on one activity pattern, or on the product chain when pattern is None.");

  m.def(
      "check_dtmc",
      [](Matrix P, Vector init, std::map<std::string, std::vector<std::size_t>> atoms,
         std::map<std::string, Vector> rewards, const std::string& formula) {
        Labelling labels;
        const auto n = static_cast<std::size_t>(P.rows());
        for (const auto& [name, members] : atoms) {
          StateSet set(n);
          for (auto s : members) {
            if (s >= n) throw ArgumentError("atom '" + name + "' names state " + std::to_string(s));
            set.insert(s);
          }
          labels.atoms.emplace(name, std::move(set));
        }
        labels.rewards = std::move(rewards);
        const Dtmc dtmc(std::move(P), std::move(init), std::move(labels));
        return loads(result_to_json(check(dtmc, parse_property(formula))).dump());
      },
      py::arg("P"), py::arg("init"), py::arg("atoms") = std::map<std::string, std::vector<std::size_t>>{},
      py::arg("rewards") = std::map<std::string, Vector>{}, py::arg("formula"),
      "Check a property on an explicit chain.");

  m.def("format_formula", [](const std::string& text) { return to_string(parse_property(text)); },
        py::arg("text"), "Parse and print a property in canonical form.");

  m.def(
      "run_suite",
      [](const Gpam& model, std::size_t N, double p, const std::string& grouping, std::size_t threads) {
        SuiteParams sp;
        sp.N = N;
        sp.p = p;
        sp.threads = threads;
        const Grouping g = grouping.empty() ? Grouping{} : Grouping::parse(grouping);
        std::string doc;
        {
          py::gil_scoped_release release;
          doc = suite_to_json(run_full_suite(model, g, sp), sp);
        }
        return loads(doc);
      },
      py::arg("model"), py::arg("N") = 50, py::arg("p") = 0.5, py::arg("grouping") = "",
      py::arg("threads") = 1);

  m.def(
      "generate",
      [](const Gpam& model, std::size_t traces, std::size_t min_sessions, std::size_t max_sessions,
         std::uint64_t seed, std::size_t max_events) {
        GeneratorSpec spec;
        spec.num_traces = traces;
        spec.min_sessions = min_sessions;
        spec.max_sessions = max_sessions;
        spec.seed = seed;
        spec.max_events_per_session = max_events;
        const Generated g = generate(model, spec);
        return py::make_tuple(write_traces(g.traces), loads(generation_report_json(g.report)));
      },
      py::arg("model"), py::arg("traces") = 300, py::arg("min_sessions") = 5, py::arg("max_sessions") = 30,
      py::arg("seed") = 0, py::arg("max_events") = 1000,
      "Sample a trace corpus; returns (NDJSON text, generation report).");

  m.def(
      "jenks",
      [](std::vector<double> values, std::size_t k) {
        const auto c = jenks_breaks(std::move(values), k);
        py::dict d;
        d["breaks"] = c.breaks;
        d["classes"] = c.classes;
        d["gvf"] = c.goodness_of_variance_fit;
        return d;
      },
      py::arg("values"), py::arg("k"));
}
