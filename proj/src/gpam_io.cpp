#include "tracestyles/error.hpp"
#include "tracestyles/gpam.hpp"

#include <json.hpp>

namespace tracestyles {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from(const json& j, std::size_t rows, std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != rows)
    throw ParseError(std::string("model field '") + what + "' has the wrong shape", 0);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ParseError(std::string("model field '") + what + "' has the wrong shape", 0);
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json report_json(const FitReport& r) {
  return json{{"seed", r.seed},
              {"K", r.components},
              {"max_iters", r.max_iters},
              {"restarts", r.restart_log_likelihood.size()},
              {"chosen_restart", r.chosen_restart},
              {"iterations", r.iterations},
              {"log_likelihood", r.log_likelihood()}};
}

}  // namespace

std::string model_to_json(const Gpam& model, const FitReport* report) {
  json j;
  j["K"] = model.components();
  j["labels"] = model.vocab().labels();
  j["pi"] = std::vector<double>(model.pi().data(), model.pi().data() + model.pi().size());
  j["A"] = matrix_json(model.A());
  json B = json::array();
  for (const auto& b : model.B()) B.push_back(matrix_json(b));
  j["B"] = std::move(B);
  if (report) j["fit"] = report_json(*report);
  return j.dump(1) + "\n";
}

Gpam model_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  try {
    const auto K = j.at("K").get<std::size_t>();
    Vocabulary vocab(j.at("labels").get<std::vector<std::string>>());
    const std::size_t n = vocab.size();
    const auto pi_values = j.at("pi").get<std::vector<double>>();
    if (pi_values.size() != K) throw ParseError("model field 'pi' has the wrong length", 0);
    Vector pi = Eigen::Map<const Vector>(pi_values.data(), K);
    Matrix A = matrix_from(j.at("A"), K, K, "A");
    const auto& Bj = j.at("B");
    if (!Bj.is_array() || Bj.size() != K) throw ParseError("model field 'B' has the wrong shape", 0);
    std::vector<Matrix> B;
    for (std::size_t x = 0; x < K; ++x) B.push_back(matrix_from(Bj[x], n, n, "B"));
    return Gpam(std::move(vocab), std::move(pi), std::move(A), std::move(B));
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid model document: ") + e.what(), 0);
  }
}

std::string fit_report_to_json(const FitReport& report) {
  json j = report_json(report);
  j["restart_log_likelihood"] = report.restart_log_likelihood;
  return j.dump(1) + "\n";
}

}  // namespace tracestyles
