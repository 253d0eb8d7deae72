#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mflqg/consistency_pf.hpp"
#include "mflqg/model.hpp"
#include "mflqg/odes.hpp"
#include "mflqg/paths.hpp"

namespace mflqg {

// Consistency condition of the noisy-observation game.
struct POConsistency {
  ScalarPath Pf;       // filter Riccati, Pf(0) = 0
  MatrixPath3 pi;      // symmetric, pi(T) = diag(G, 0, 0)
  VectorPath3 gamma;   // gamma(T) = 0, deterministic
  ScalarPath A_tilde;  // A + alpha - B^2 R^-1 pi12
  ScalarPath B_tilde;  // -B^2 R^-1 (pi11 + pi13)
  ScalarPath C;        // alpha - B^2 R^-1 pi12 + Pf H^2
  ScalarPath D;        // A - B^2 R^-1 (pi11 + pi13) - Pf H^2
  ScalarPath f;        // -B^2 R^-1 gamma1 + m
  ScalarPath g;        // equal to f
  ScalarPath mean;     // E x0 = E xhat, d mean = [(A_tilde + B_tilde) mean + f] dt
};

// Point values of the coefficients entering the lifted (x_i, x0, xhat) system.
struct POPointCoefficients {
  double A, B, R, alpha, m, Q, H, Pf;
  double b2r() const { return B * B / R; }
};

inline POPointCoefficients po_point(const Model& model, double t, double Pf) {
  const auto& cf = model.coef;
  return {cf(Coef::A, t), cf(Coef::B, t), cf(Coef::R, t), cf.alpha(), cf(Coef::m, t), cf(Coef::Q, t),
          cf(Coef::H, t), Pf};
}

// Drift matrix [[A, alpha, 0], [0, A~, B~], [0, C, D]] with A~, B~, C, D
// substituted from the current pi.
inline Eigen::Matrix3d po_drift_matrix(const POPointCoefficients& p, const Eigen::Matrix3d& pi) {
  const double b2r = p.b2r();
  const double ph2 = p.Pf * p.H * p.H;
  Eigen::Matrix3d A;
  A << p.A, p.alpha, 0.0,                                                  //
      0.0, p.A + p.alpha - b2r * pi(0, 1), -b2r * (pi(0, 0) + pi(0, 2)),  //
      0.0, p.alpha - b2r * pi(0, 1) + ph2, p.A - b2r * (pi(0, 0) + pi(0, 2)) - ph2;
  return A;
}

inline Eigen::Matrix3d po_state_weight(double Q) {
  Eigen::Matrix3d W;
  W << Q, -Q, 0.0, -Q, Q, 0.0, 0.0, 0.0, 0.0;
  return W;
}

// Right-hand side of the substituted system
//   pi'    = -(pi A + A' pi - R^-1 pi B B' pi + Q),
//   gamma' = -((A' - R^-1 pi B B') gamma + pi F(gamma)),   F = (m, f, f).
inline MatrixVectorRate po_rates(const POPointCoefficients& p, const Eigen::Matrix3d& pi, const Eigen::Vector3d& gamma) {
  const Eigen::Matrix3d A = po_drift_matrix(p, pi);
  const double b2r = p.b2r();
  const Eigen::Vector3d pi_col = pi.col(0);
  const double f = -b2r * gamma(0) + p.m;
  const Eigen::Vector3d F(p.m, f, f);
  MatrixVectorRate r;
  r.dpi = -(pi * A + A.transpose() * pi - b2r * pi_col * pi_col.transpose() + po_state_weight(p.Q));
  r.dgamma = -(A.transpose() * gamma - b2r * pi_col * gamma(0) + pi * F);
  return r;
}

inline POConsistency solve_po_consistency(const Model& model) {
  const TimeGrid& grid = model.grid;
  const auto& cf = model.coef;
  if (!cf.has(Coef::H)) throw MissingCoefficient("H");
  if (!cf.has(Coef::H_tilde)) throw MissingCoefficient("H_tilde");
  if (!cf.has(Coef::h)) throw MissingCoefficient("h");

  POConsistency out;
  out.Pf = solve_forward_scalar_riccati(
      grid, [&](double t) { return 2.0 * cf(Coef::A, t); },
      [&](double t) {
        const double H = cf(Coef::H, t);
        return -H * H;
      },
      [&](double t) {
        const double s = cf(Coef::sigma, t);
        const double st = cf(Coef::sigma_tilde, t);
        return s * s + st * st;
      },
      0.0, SolverOptions{.equation = "Pf"});

  const ScalarPath& Pf = out.Pf;
  auto rhs = [&](double t, const Eigen::Matrix3d& pi, const Eigen::Vector3d& gamma) {
    return po_rates(po_point(model, t, Pf.at(t)), pi, gamma);
  };
  Eigen::Matrix3d terminal = Eigen::Matrix3d::Zero();
  terminal(0, 0) = cf.G();
  auto solved = solve_coupled_matrix_system(grid, rhs, terminal, Eigen::Vector3d::Zero(),
                                            SolverOptions{.equation = "pi/gamma"});
  out.pi = std::move(solved.pi);
  out.gamma = std::move(solved.gamma);

  auto b2r = [&](int k) {
    const double b = cf.at(Coef::B, k);
    return b * b / cf.at(Coef::R, k);
  };
  auto ph2 = [&](int k) {
    const double H = cf.at(Coef::H, k);
    return out.Pf[k] * H * H;
  };
  const double alpha = cf.alpha();
  out.A_tilde = map_nodes(grid, [&](int k) { return cf.at(Coef::A, k) + alpha - b2r(k) * out.pi[k](0, 1); });
  out.B_tilde = map_nodes(grid, [&](int k) { return -b2r(k) * (out.pi[k](0, 0) + out.pi[k](0, 2)); });
  out.C = map_nodes(grid, [&](int k) { return alpha - b2r(k) * out.pi[k](0, 1) + ph2(k); });
  out.D = map_nodes(grid, [&](int k) {
    return cf.at(Coef::A, k) - b2r(k) * (out.pi[k](0, 0) + out.pi[k](0, 2)) - ph2(k);
  });
  out.f = map_nodes(grid, [&](int k) { return -b2r(k) * out.gamma[k](0) + cf.at(Coef::m, k); });
  out.g = out.f;

  const MatrixPath3& pi = out.pi;
  const VectorPath3& gamma = out.gamma;
  out.mean = solve_forward_linear(
      grid,
      [&](double t) {
        const Eigen::Matrix3d p = pi.at(t);
        const double b = cf(Coef::B, t);
        const double r = b * b / cf(Coef::R, t);
        return cf(Coef::A, t) + alpha - r * (p(0, 1) + p(0, 0) + p(0, 2));
      },
      [&](double t) {
        const double b = cf(Coef::B, t);
        return -b * b / cf(Coef::R, t) * gamma.at(t)(0) + cf(Coef::m, t);
      },
      cf.x(), SolverOptions{.equation = "mean"});
  return out;
}

inline double po_mean_drift(const POConsistency& c, int k, double mean) {
  return (c.A_tilde[k] + c.B_tilde[k]) * mean + c.f[k];
}

inline std::vector<double> po_mean_anchor(const POConsistency& c) {
  return mean_anchor(c.mean, [&](int k, double v) { return po_mean_drift(c, k, v); });
}

// u = gains . (xhat_i, x0, xhat) + offset.
struct POStrategy {
  std::vector<Eigen::Vector3d> gains;  // -R^-1 B (pi11, pi12, pi13)
  ScalarPath offset;                   // -R^-1 B gamma1

  double control(int k, double filter, double x0, double xhat) const {
    const Eigen::Vector3d& g = gains[static_cast<std::size_t>(k)];
    return g(0) * filter + g(1) * x0 + g(2) * xhat + offset[k];
  }
};

inline POStrategy build_po_strategy(const Model& model, const POConsistency& c) {
  const auto& cf = model.coef;
  POStrategy s;
  s.gains.resize(static_cast<std::size_t>(model.grid.nodes()));
  for (int k = 0; k < model.grid.nodes(); ++k) {
    const double kk = -cf.at(Coef::B, k) / cf.at(Coef::R, k);
    s.gains[static_cast<std::size_t>(k)] = kk * Eigen::Vector3d(c.pi[k](0, 0), c.pi[k](0, 1), c.pi[k](0, 2));
  }
  s.offset = map_nodes(model.grid, [&](int k) { return -cf.at(Coef::B, k) / cf.at(Coef::R, k) * c.gamma[k](0); });
  return s;
}

struct LimitingPairPath {
  ScalarPath x0;
  ScalarPath xhat;
};

// Mean-anchored Euler-Maruyama for
//   dx0   = [A~ x0 + B~ xhat + f] dt + sigma_tilde dW,
//   dxhat = [C x0 + D xhat + g] dt (+ Pf H dW when the common-noise feed is on).
inline LimitingPairPath solve_limiting_pair(const Model& model, const POConsistency& c, std::span<const double> dW,
                                            const std::vector<double>* anchor = nullptr) {
  const TimeGrid& grid = model.grid;
  const auto& cf = model.coef;
  const double h = grid.step();
  const bool feed = model.population.feed == CommonNoiseFeed::FilterGain;
  std::vector<double> local;
  if (anchor == nullptr) {
    local = po_mean_anchor(c);
    anchor = &local;
  }
  std::vector<double> x0(static_cast<std::size_t>(grid.nodes()));
  std::vector<double> xh(static_cast<std::size_t>(grid.nodes()));
  x0[0] = cf.x();
  xh[0] = cf.x();
  for (int k = 0; k < grid.steps(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double a = x0[i];
    const double b = xh[i];
    x0[i + 1] = a + h * (c.A_tilde[k] * a + c.B_tilde[k] * b + c.f[k]) + cf.at(Coef::sigma_tilde, k) * dW[i] +
                (*anchor)[i];
    xh[i + 1] = b + h * (c.C[k] * a + c.D[k] * b + c.g[k]) +
                (feed ? c.Pf[k] * cf.at(Coef::H, k) * dW[i] : 0.0) + (*anchor)[i];
  }
  return {ScalarPath(grid, std::move(x0)), ScalarPath(grid, std::move(xh))};
}

}  // namespace mflqg
