#include "tracestyles/jenks.hpp"

#include "tracestyles/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tracestyles {

std::size_t JenksClassification::classify(double value) const {
  for (std::size_t c = 0; c < breaks.size(); ++c)
    if (value <= breaks[c]) return c;
  return breaks.size();
}

JenksClassification jenks_breaks(std::vector<double> values, std::size_t k) {
  if (values.empty()) throw ArgumentError("jenks_breaks needs at least one value");
  if (k == 0) throw ArgumentError("jenks_breaks needs k >= 1");
  for (double v : values)
    if (!std::isfinite(v)) throw ArgumentError("jenks_breaks values must be finite");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::size_t runs = 1;
  for (std::size_t i = 1; i < n; ++i)
    if (values[i] != values[i - 1]) ++runs;
  if (k > runs)
    throw ArgumentError("jenks_breaks: k = " + std::to_string(k) + " exceeds the " +
                        std::to_string(runs) + " distinct values");

  // Prefix sums (shifted by the mean for stability) give O(1) class costs.
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = values[i] - mean;
    s1[i + 1] = s1[i] + d;
    s2[i + 1] = s2[i] + d * d;
  }
  auto cost = [&](std::size_t first, std::size_t last) {  // inclusive
    const double count = static_cast<double>(last - first + 1);
    const double a = s1[last + 1] - s1[first];
    return std::max(0.0, (s2[last + 1] - s2[first]) - a * a / count);
  };
  auto can_end = [&](std::size_t last) { return last + 1 == n || values[last] < values[last + 1]; };

  // best[c][i]: minimal cost of splitting values[i..n) into c classes.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best(k + 1, std::vector<double>(n + 1, inf));
  best[0][n] = 0.0;
  for (std::size_t c = 1; c <= k; ++c)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t last = i; last < n; ++last) {
        if (!can_end(last) || best[c - 1][last + 1] == inf) continue;
        best[c][i] = std::min(best[c][i], cost(i, last) + best[c - 1][last + 1]);
      }

  // Rebuild front to back, taking the earliest end whose total is optimal.
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
  JenksClassification out;
  out.sorted = values;
  out.k = k;
  std::size_t first = 0;
  for (std::size_t c = k; c >= 1; --c) {
    std::size_t chosen = n - 1;
    for (std::size_t last = first; last < n; ++last) {
      if (!can_end(last) || best[c - 1][last + 1] == inf) continue;
      if (near(cost(first, last) + best[c - 1][last + 1], best[c][first])) {
        chosen = last;
        break;
      }
    }
    out.classes.emplace_back(values.begin() + static_cast<std::ptrdiff_t>(first),
                             values.begin() + static_cast<std::ptrdiff_t>(chosen + 1));
    out.within_ssd += cost(first, chosen);
    if (c > 1) out.breaks.push_back(values[chosen]);
    first = chosen + 1;
  }
  const double total = cost(0, n - 1);
  out.goodness_of_variance_fit = total > 0.0 ? 1.0 - out.within_ssd / total : 1.0;
  return out;
}

}  // namespace tracestyles
