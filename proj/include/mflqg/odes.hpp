#pragma once

#include <cmath>
#include <concepts>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mflqg/error.hpp"
#include "mflqg/paths.hpp"

namespace mflqg {

// A time-dependent scalar coefficient: anything callable as double(double t).
template <class F>
concept TimeFunction = std::invocable<const F&, double> &&
                       std::convertible_to<std::invoke_result_t<const F&, double>, double>;

struct SolverOptions {
  double blowup_bound = 1e12;
  std::string equation = "ode";
};

inline auto constant(double c) {
  return [c](double) { return c; };
}

namespace detail {

inline bool escaped(double v, double bound) { return !std::isfinite(v) || std::abs(v) > bound; }

// Classical RK4 on the model grid. backward == true integrates from t_M down
// to t_0 with the boundary value imposed at T.
template <class Rhs>
ScalarPath rk4_scalar(const TimeGrid& grid, const Rhs& rhs, double boundary, bool backward,
                      const SolverOptions& opt) {
  const int M = grid.steps();
  std::vector<double> v(static_cast<std::size_t>(M + 1));
  std::vector<double> slope(static_cast<std::size_t>(M + 1));
  const int first = backward ? M : 0;
  v[static_cast<std::size_t>(first)] = boundary;
  for (int n = 0; n < M; ++n) {
    const int from = backward ? M - n : n;
    const int to = backward ? from - 1 : from + 1;
    const double t0 = grid.time(from);
    const double t1 = grid.time(to);
    const double tm = 0.5 * (t0 + t1);
    const double s = t1 - t0;
    const double y = v[static_cast<std::size_t>(from)];
    const double k1 = rhs(t0, y);
    const double k2 = rhs(tm, y + 0.5 * s * k1);
    const double k3 = rhs(tm, y + 0.5 * s * k2);
    const double k4 = rhs(t1, y + s * k3);
    const double next = y + s / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (escaped(next, opt.blowup_bound)) throw RiccatiBlowUp(opt.equation, to, t1);
    v[static_cast<std::size_t>(to)] = next;
  }
  for (int k = 0; k <= M; ++k) slope[static_cast<std::size_t>(k)] = rhs(grid.time(k), v[static_cast<std::size_t>(k)]);
  return ScalarPath(grid, std::move(v), std::move(slope));
}

}  // namespace detail

// v' + a v + b v^2 + c = 0 on [0, T], v(T) = terminal.
template <TimeFunction Fa, TimeFunction Fb, TimeFunction Fc>
ScalarPath solve_terminal_scalar_riccati(const TimeGrid& grid, const Fa& a, const Fb& b, const Fc& c,
                                         double terminal, const SolverOptions& opt = {}) {
  auto rhs = [&](double t, double v) { return -(a(t) * v + b(t) * v * v + c(t)); };
  return detail::rk4_scalar(grid, rhs, terminal, true, opt);
}

// v' + a v + c = 0 on [0, T], v(T) = terminal.
template <TimeFunction Fa, TimeFunction Fc>
ScalarPath solve_terminal_linear(const TimeGrid& grid, const Fa& a, const Fc& c, double terminal,
                                 const SolverOptions& opt = {}) {
  auto rhs = [&](double t, double v) { return -(a(t) * v + c(t)); };
  return detail::rk4_scalar(grid, rhs, terminal, true, opt);
}

// v' = a v + b v^2 + c on [0, T], v(0) = initial.
template <TimeFunction Fa, TimeFunction Fb, TimeFunction Fc>
ScalarPath solve_forward_scalar_riccati(const TimeGrid& grid, const Fa& a, const Fb& b, const Fc& c,
                                        double initial, const SolverOptions& opt = {}) {
  auto rhs = [&](double t, double v) { return a(t) * v + b(t) * v * v + c(t); };
  return detail::rk4_scalar(grid, rhs, initial, false, opt);
}

// v' = a v + c on [0, T], v(0) = initial.
template <TimeFunction Fa, TimeFunction Fc>
ScalarPath solve_forward_linear(const TimeGrid& grid, const Fa& a, const Fc& c, double initial,
                                const SolverOptions& opt = {}) {
  auto rhs = [&](double t, double v) { return a(t) * v + c(t); };
  return detail::rk4_scalar(grid, rhs, initial, false, opt);
}

struct MatrixVectorRate {
  Eigen::Matrix3d dpi;
  Eigen::Vector3d dgamma;
};

template <class F>
concept CoupledRhs = std::invocable<const F&, double, const Eigen::Matrix3d&, const Eigen::Vector3d&> &&
                     std::convertible_to<std::invoke_result_t<const F&, double, const Eigen::Matrix3d&,
                                                               const Eigen::Vector3d&>,
                                         MatrixVectorRate>;

struct MatrixVectorPaths {
  MatrixPath3 pi;
  VectorPath3 gamma;
};

// Backward RK4 for a coupled (3x3 matrix, 3-vector) system whose right-hand
// side may depend on the current stage values of both. The matrix is
// re-symmetrized after every step.
template <CoupledRhs F>
MatrixVectorPaths solve_coupled_matrix_system(const TimeGrid& grid, const F& rhs, const Eigen::Matrix3d& terminal_pi,
                                              const Eigen::Vector3d& terminal_gamma, const SolverOptions& opt = {}) {
  using Eigen::Matrix3d;
  using Eigen::Vector3d;
  const int M = grid.steps();
  std::vector<Matrix3d> pi(static_cast<std::size_t>(M + 1));
  std::vector<Vector3d> gamma(static_cast<std::size_t>(M + 1));
  pi[static_cast<std::size_t>(M)] = terminal_pi;
  gamma[static_cast<std::size_t>(M)] = terminal_gamma;
  for (int k = M; k > 0; --k) {
    const double t0 = grid.time(k);
    const double t1 = grid.time(k - 1);
    const double tm = 0.5 * (t0 + t1);
    const double s = t1 - t0;
    const Matrix3d& p = pi[static_cast<std::size_t>(k)];
    const Vector3d& g = gamma[static_cast<std::size_t>(k)];
    const MatrixVectorRate r1 = rhs(t0, p, g);
    const MatrixVectorRate r2 = rhs(tm, Matrix3d(p + 0.5 * s * r1.dpi), Vector3d(g + 0.5 * s * r1.dgamma));
    const MatrixVectorRate r3 = rhs(tm, Matrix3d(p + 0.5 * s * r2.dpi), Vector3d(g + 0.5 * s * r2.dgamma));
    const MatrixVectorRate r4 = rhs(t1, Matrix3d(p + s * r3.dpi), Vector3d(g + s * r3.dgamma));
    Matrix3d next_pi = p + s / 6.0 * (r1.dpi + 2.0 * r2.dpi + 2.0 * r3.dpi + r4.dpi);
    next_pi = (0.5 * (next_pi + next_pi.transpose())).eval();
    Vector3d next_gamma = g + s / 6.0 * (r1.dgamma + 2.0 * r2.dgamma + 2.0 * r3.dgamma + r4.dgamma);
    const double size = std::max(next_pi.cwiseAbs().maxCoeff(), next_gamma.cwiseAbs().maxCoeff());
    if (detail::escaped(size, opt.blowup_bound)) throw RiccatiBlowUp(opt.equation, k - 1, t1);
    pi[static_cast<std::size_t>(k - 1)] = next_pi;
    gamma[static_cast<std::size_t>(k - 1)] = next_gamma;
  }
  std::vector<Matrix3d> dpi(static_cast<std::size_t>(M + 1));
  std::vector<Vector3d> dgamma(static_cast<std::size_t>(M + 1));
  for (int k = 0; k <= M; ++k) {
    const MatrixVectorRate r = rhs(grid.time(k), pi[static_cast<std::size_t>(k)], gamma[static_cast<std::size_t>(k)]);
    dpi[static_cast<std::size_t>(k)] = r.dpi;
    dgamma[static_cast<std::size_t>(k)] = r.dgamma;
  }
  return {MatrixPath3(grid, std::move(pi), std::move(dpi)), VectorPath3(grid, std::move(gamma), std::move(dgamma))};
}

}  // namespace mflqg
