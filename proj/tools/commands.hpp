#pragma once

// Command-line front end. Each subcommand is a thin wrapper over the library;
// the pieces that have no library home (property-file expansion, the run
// summary) live here so tests can call them directly.

#include "tracestyles/gpam.hpp"
#include "tracestyles/pctl.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace tracestyles::cli {

enum ExitCode : int {
  kOk = 0,
  kParseOrIo = 2,
  kFitFailed = 3,
  kPropertyFailed = 4,
  kPartialFailure = 5,
};

/// Runs the tool on argv-style arguments (without the program name).
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

struct CheckParams {
  std::size_t N = 50;
  double p = 0.5;
  /// Pairs for ${j1}/${j2}; every ordered pair of distinct labels when empty.
  std::vector<std::pair<std::string, std::string>> between;
  SolverSettings solver;
};

/// One expanded property line. Formulas over latent atoms (x=...) are checked
/// once on the product chain; all others once per activity pattern.
struct CheckRow {
  std::string property;  // the line's name, or its text when unnamed
  std::string state;     // the parameter binding, e.g. "Stats", "a->b", "x=0"
  std::vector<PropertyResult> per_pattern;
  std::optional<PropertyResult> product;
};

/// Expands and evaluates property-file lines. A line may be named with a
/// "Name: formula" prefix. ${N} and ${p} come from params, ${j} ranges over
/// labels, ${j1}/${j2} over label pairs, ${i} over components and ${i1}/${i2}
/// over ordered pairs of distinct components.
std::vector<CheckRow> check_properties(const Gpam& model, const Grouping& grouping,
                                       const std::vector<std::string>& lines,
                                       const CheckParams& params);

/// Same column layout as the suite CSV; a trailing "product" column appears
/// only when some row was checked on the product chain.
std::string check_rows_to_csv(const std::vector<CheckRow>& rows, std::size_t patterns);
std::string check_rows_to_json(const std::vector<CheckRow>& rows, std::size_t patterns);

/// Writes through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace tracestyles::cli
