#pragma once

// The named property templates evaluated over every activity pattern of a
// fitted model, result ranking, predominant states and cross-pattern analyses.

#include "tracestyles/gpam.hpp"
#include "tracestyles/jenks.hpp"
#include "tracestyles/pctl.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tracestyles {

enum class SuiteProperty {
  VisitProbInit,
  StepCountInit,
  VisitCountInit,
  SessionLength,
  SessionCount,
  VisitProbBtw,
  StepCountBtw,
  StateToPattern,
  StateToStop,
  LongRunPattern,
};

std::string_view property_name(SuiteProperty property);
/// Formula text with ${N}, ${j}, ${j1}, ${j2}, ${i}, ${i1}, ${i2}, ${p} placeholders.
std::string_view property_template(SuiteProperty property);
/// Substitution values for a template: labels are passed through format_label.
std::map<std::string, std::string> template_values(std::size_t N, double p = 0.5);

struct SuiteParams {
  std::size_t N = 50;
  double p = 0.5;
  /// (j1, j2) label pairs for VisitProbBtw / StepCountBtw.
  std::vector<std::pair<std::string, std::string>> between;
  SolverSettings solver;
  /// Worker threads over patterns; results do not depend on it.
  std::size_t threads = 1;

  void validate() const;
};

enum class Rank { None, Best, Middle, Worst };
std::string_view rank_name(Rank rank);

/// One property/state row: a result and a rank mark per activity pattern.
struct SuiteRow {
  SuiteProperty property;
  std::string state;  // a label, "j1->j2" for between-state rows, "" for session rows
  std::vector<PropertyResult> results;
  std::vector<Rank> ranks;
};

struct PatternResultTable {
  std::size_t patterns = 0;
  std::vector<SuiteRow> rows;

  const SuiteRow* find(SuiteProperty property, std::string_view state) const;
  /// Throws ArgumentError naming the missing cell.
  const PropertyResult& at(SuiteProperty property, std::string_view state, std::size_t pattern) const;
};

/// For every pattern: VisitProbInit, StepCountInit and VisitCountInit for each
/// label, SessionLength and SessionCount (empty state), and the between-state
/// properties for each requested pair. Ranks are attached.
PatternResultTable run_suite(const Gpam& model, const Grouping& grouping, const SuiteParams& params);

/// Rank marks across patterns over the available values: higher is better for
/// visit probabilities and counts, lower for step counts; session properties
/// are unranked. Ties go to the lowest pattern index.
void assign_ranks(PatternResultTable& table);

/// Per pattern, labels that (i) are visited with probability > 0.5, more than
/// once and reached in fewer than N steps in expectation, and (ii) have no other
/// pattern with at least 3x the visits in at most a third of the steps.
/// startS and stopS are never reported. Ordered by visits (desc), steps (asc).
struct PredominanceReport {
  std::vector<std::vector<std::string>> per_pattern;
};

PredominanceReport predominant_states(const PatternResultTable& table, const SuiteParams& params);

/// S=?[ x=i ] on the product chain.
PropertyResult long_run_pattern(const Gpam& model, std::size_t component,
                                const SolverSettings& settings = {});

struct SwitchVerdict {
  PropertyResult holds;       // the template formula at the initial distribution
  PropertyResult likelihood;  // the inner until probability at product state (i1, j)
};

SwitchVerdict state_to_pattern(const Gpam& model, std::size_t i1, std::size_t i2,
                               std::string_view j, double p, const SolverSettings& settings = {});
SwitchVerdict state_to_stop(const Gpam& model, std::size_t i, std::string_view j, double p,
                            const SolverSettings& settings = {});

/// Average inner likelihoods over the product states (i1, j), j != stopS,
/// reachable from the initial distribution. NaN where no such state exists.
struct SwitchingSummary {
  Matrix to_pattern;  // (i1, i2), diagonal NaN
  Vector to_stop;     // per i
};

SwitchingSummary switching_summary(const Gpam& model, const SolverSettings& settings = {});

struct SuiteReport {
  PatternResultTable table;
  PredominanceReport predominance;
  std::vector<PropertyResult> long_run;
  SwitchingSummary switching;
};

SuiteReport run_full_suite(const Gpam& model, const Grouping& grouping, const SuiteParams& params);

/// {"kind": value|boolean|infinite|not-available, "value"?, "reason"?, "text"}.
nlohmann::json result_to_json(const PropertyResult& result);

/// CSV cell text: quoted (with doubled quotes) when it holds a comma, quote or newline.
std::string csv_field(std::string_view text);

/// One row per property x state, one column per pattern ("x=0", "x=1", ...).
std::string suite_to_csv(const PatternResultTable& table);
std::string suite_to_json(const SuiteReport& report, const SuiteParams& params);

}  // namespace tracestyles
