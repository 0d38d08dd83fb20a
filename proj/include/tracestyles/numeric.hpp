#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <vector>

namespace tracestyles {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Tolerance used when validating that rows and distributions sum to one.
inline constexpr double kStochasticTolerance = 1e-9;

/// True if every entry is finite and non-negative and every row sums to 1.
bool is_row_stochastic(const Matrix& m, double tol = kStochasticTolerance);
bool is_distribution(const Vector& v, double tol = kStochasticTolerance);

/// Subset of the states [0, size) of a finite model.
class StateSet {
 public:
  StateSet() = default;
  explicit StateSet(std::size_t size, bool value = false) : bits_(size, value) {}

  static StateSet all(std::size_t size) { return StateSet(size, true); }
  static StateSet of(std::size_t size, std::initializer_list<std::size_t> members);

  std::size_t size() const noexcept { return bits_.size(); }
  bool contains(std::size_t s) const { return bits_[s]; }
  void insert(std::size_t s) { bits_[s] = true; }
  void erase(std::size_t s) { bits_[s] = false; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  std::vector<std::size_t> members() const;

  StateSet operator~() const;
  StateSet operator&(const StateSet& other) const;
  StateSet operator|(const StateSet& other) const;
  bool operator==(const StateSet&) const = default;

 private:
  std::vector<bool> bits_;
};

/// Shortest decimal text that parses back to exactly `value`.
/// Infinities render as "inf"/"-inf", NaN as "nan".
std::string format_double(double value);

}  // namespace tracestyles
