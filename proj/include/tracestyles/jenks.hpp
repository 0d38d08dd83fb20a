#pragma once

#include <cstddef>
#include <vector>

namespace tracestyles {

/// Optimal 1-D partition of a multiset into k contiguous classes.
struct JenksClassification {
  std::vector<double> sorted;                // input values, ascending
  std::size_t k = 0;
  std::vector<double> breaks;                // k-1 class maxima (all classes but the last)
  std::vector<std::vector<double>> classes;  // ascending, contiguous runs of `sorted`
  double within_ssd = 0.0;                   // sum of squared deviations from class means
  double goodness_of_variance_fit = 1.0;     // 1 - within_ssd / total_ssd

  /// Index of the class a value falls into (values above every break go last).
  std::size_t classify(double value) const;
};

/// Exact natural-breaks optimum by dynamic programming, minimising the within-class
/// sum of squared deviations. Classes never split equal values. Among equally
/// good partitions the one with the smallest first break wins (then second, ...).
/// Throws ArgumentError when values is empty, k == 0 or k exceeds the number of
/// distinct values.
JenksClassification jenks_breaks(std::vector<double> values, std::size_t k);

}  // namespace tracestyles
