#include "tracestyles/error.hpp"
#include "tracestyles/numeric.hpp"

#include <charconv>
#include <cmath>

namespace tracestyles {

ParseError::ParseError(const std::string& message, std::size_t offset, std::size_t line,
                       std::size_t column)
    : Error(message), offset_(offset), line_(line), column_(column) {}

bool is_row_stochastic(const Matrix& m, double tol) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (!std::isfinite(v) || v < 0.0) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

bool is_distribution(const Vector& v, double tol) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0.0) return false;
    sum += v[i];
  }
  return std::abs(sum - 1.0) <= tol;
}

StateSet StateSet::of(std::size_t size, std::initializer_list<std::size_t> members) {
  StateSet s(size);
  for (auto m : members) s.insert(m);
  return s;
}

std::size_t StateSet::count() const {
  std::size_t n = 0;
  for (bool b : bits_) n += b ? 1 : 0;
  return n;
}

std::vector<std::size_t> StateSet::members() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out.push_back(i);
  return out;
}

StateSet StateSet::operator~() const {
  StateSet out(size());
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = !bits_[i];
  return out;
}

StateSet StateSet::operator&(const StateSet& other) const {
  StateSet out(size());
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] && other.bits_[i];
  return out;
}

StateSet StateSet::operator|(const StateSet& other) const {
  StateSet out(size());
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] || other.bits_[i];
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

}  // namespace tracestyles
