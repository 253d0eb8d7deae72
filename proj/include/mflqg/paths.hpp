#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mflqg/model.hpp"

namespace mflqg {

// Values on the nodes of a TimeGrid. When the producing ODE solver also stores
// node slopes, at() is a C1 cubic Hermite interpolant (fourth-order accurate),
// which is what integrators use to sample one solved path inside another's
// RK4 stages. Without slopes at() is linear.
template <class Value>
class GridPath {
 public:
  GridPath() = default;
  GridPath(TimeGrid grid, std::vector<Value> values, std::vector<Value> slopes = {})
      : grid_(grid), values_(std::move(values)), slopes_(std::move(slopes)) {}

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  const Value& operator[](int k) const { return values_[static_cast<std::size_t>(k)]; }
  const Value& front() const { return values_.front(); }
  const Value& back() const { return values_.back(); }
  const std::vector<Value>& values() const noexcept { return values_; }
  const std::vector<Value>& slopes() const noexcept { return slopes_; }
  bool has_slopes() const noexcept { return !slopes_.empty(); }

  Value at(double t) const {
    const double h = grid_.step();
    const int M = grid_.steps();
    const int k = std::clamp(static_cast<int>(std::floor(t / h)), 0, M - 1);
    const double s = std::clamp((t - grid_.time(k)) / h, 0.0, 1.0);
    const auto i = static_cast<std::size_t>(k);
    if (!has_slopes()) {
      return Value((1.0 - s) * values_[i] + s * values_[i + 1]);
    }
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return Value(h00 * values_[i] + (h10 * h) * slopes_[i] + h01 * values_[i + 1] + (h11 * h) * slopes_[i + 1]);
  }

 private:
  TimeGrid grid_;
  std::vector<Value> values_;
  std::vector<Value> slopes_;
};

using ScalarPath = GridPath<double>;
using MatrixPath3 = GridPath<Eigen::Matrix3d>;
using VectorPath3 = GridPath<Eigen::Vector3d>;

// Node-wise map of one or more scalar paths on the same grid (no slopes).
template <class F>
ScalarPath map_nodes(const TimeGrid& grid, F&& f) {
  std::vector<double> v(static_cast<std::size_t>(grid.nodes()));
  for (int k = 0; k < grid.nodes(); ++k) v[static_cast<std::size_t>(k)] = f(k);
  return ScalarPath(grid, std::move(v));
}

}  // namespace mflqg
