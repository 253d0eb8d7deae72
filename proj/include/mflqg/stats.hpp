#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "mflqg/error.hpp"

namespace mflqg {

// Welford running mean/variance.
class RunningStats {
 public:
  void add(double v) {
    ++n_;
    const double d = v - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (v - mean_);
  }
  long long count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double standard_error() const noexcept { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  long long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

inline Estimate summarize(std::span<const double> samples) {
  RunningStats s;
  for (double v : samples) s.add(v);
  return {s.mean(), s.standard_error()};
}

// Per-node samples (one row per replication); sup over nodes of the mean,
// with the standard error taken at the maximizing node.
struct SupEstimate {
  double mean = 0.0;
  double se = 0.0;
  int node = 0;
};

inline SupEstimate sup_over_nodes(const std::vector<std::vector<double>>& per_rep) {
  SupEstimate best;
  if (per_rep.empty()) return best;
  const std::size_t nodes = per_rep.front().size();
  bool first = true;
  for (std::size_t k = 0; k < nodes; ++k) {
    RunningStats s;
    for (const auto& row : per_rep) s.add(row[k]);
    if (first || s.mean() > best.mean) {
      best = {s.mean(), s.standard_error(), static_cast<int>(k)};
      first = false;
    }
  }
  return best;
}

struct SlopeFit {
  double slope = 0.0;
  double half_width = 0.0;  // two standard errors of the slope
  double intercept = 0.0;
};

// Least squares on (log N, log estimate).
inline SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw DegenerateData("need at least 3 points");
  for (const auto& [n, v] : points) {
    if (!(n > 0.0) || !(v > 0.0) || !std::isfinite(v)) throw DegenerateData("non-positive value in slope fit");
  }
  const bool all_equal = std::all_of(points.begin(), points.end(), [&](const auto& p) { return p.first == points[0].first; });
  if (all_equal) throw DegenerateData("all abscissae equal");

  const double n = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& [a, b] : points) {
    sx += std::log(a);
    sy += std::log(b);
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& [a, b] : points) {
    const double dx = std::log(a) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(b) - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0;
  for (const auto& [a, b] : points) {
    const double r = std::log(b) - (fit.intercept + fit.slope * std::log(a));
    rss += r * r;
  }
  const double dof = n - 2.0;
  fit.half_width = dof > 0 ? 2.0 * std::sqrt(rss / dof / sxx) : 0.0;
  return fit;
}

inline SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  return fit_loglog_slope(std::span<const std::pair<double, double>>(points));
}

}  // namespace mflqg
