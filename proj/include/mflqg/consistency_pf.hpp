#pragma once

#include <span>
#include <vector>

#include "mflqg/model.hpp"
#include "mflqg/odes.hpp"
#include "mflqg/paths.hpp"

namespace mflqg {

inline auto coefficient_fn(const Model& model, Coef c) {
  return [&table = model.coef, c](double t) { return table(c, t); };
}

// Riccati/linear paths of the partial-filtration consistency condition.
struct PFConsistency {
  ScalarPath P;        // P' + 2AP - B^2 R^-1 P^2 + Q = 0,          P(T) = G
  ScalarPath P_hat;    // Pi - P
  ScalarPath Pi;       // Pi' + (2A + alpha) Pi - B^2 R^-1 Pi^2 = 0,  Pi(T) = G
  ScalarPath Phi;      // Phi' + (A - B^2 R^-1 Pi) Phi + m Pi = 0,     Phi(T) = 0
  ScalarPath beta;     // P sigma
  ScalarPath a_tilde;  // B^2 R^-1 Pi
  ScalarPath b_tilde;  // -B^2 R^-1 Phi + m
  ScalarPath Ex0;      // mean of the limiting state average
};

inline PFConsistency solve_pf_consistency(const Model& model) {
  const TimeGrid& grid = model.grid;
  const CoefficientTable& cf = model.coef;
  const double alpha = cf.alpha();
  auto A = coefficient_fn(model, Coef::A);
  auto m = coefficient_fn(model, Coef::m);
  auto gain = [&cf](double t) {
    const double b = cf(Coef::B, t);
    return b * b / cf(Coef::R, t);
  };

  PFConsistency out;
  out.P = solve_terminal_scalar_riccati(
      grid, [&](double t) { return 2.0 * A(t); }, [&](double t) { return -gain(t); },
      coefficient_fn(model, Coef::Q), cf.G(), SolverOptions{.equation = "P"});
  out.Pi = solve_terminal_scalar_riccati(
      grid, [&](double t) { return 2.0 * A(t) + alpha; }, [&](double t) { return -gain(t); }, constant(0.0),
      cf.G(), SolverOptions{.equation = "Pi"});
  const ScalarPath& Pi = out.Pi;
  out.Phi = solve_terminal_linear(
      grid, [&](double t) { return A(t) - gain(t) * Pi.at(t); }, [&](double t) { return m(t) * Pi.at(t); }, 0.0,
      SolverOptions{.equation = "Phi"});
  const ScalarPath& Phi = out.Phi;
  out.Ex0 = solve_forward_linear(
      grid, [&](double t) { return A(t) + alpha - gain(t) * Pi.at(t); },
      [&](double t) { return -gain(t) * Phi.at(t) + m(t); }, cf.x(), SolverOptions{.equation = "Ex0"});

  out.P_hat = map_nodes(grid, [&](int k) { return out.Pi[k] - out.P[k]; });
  out.beta = map_nodes(grid, [&](int k) { return out.P[k] * cf.at(Coef::sigma, k); });
  out.a_tilde = map_nodes(grid, [&](int k) {
    const double b = cf.at(Coef::B, k);
    return b * b / cf.at(Coef::R, k) * out.Pi[k];
  });
  out.b_tilde = map_nodes(grid, [&](int k) {
    const double b = cf.at(Coef::B, k);
    return -b * b / cf.at(Coef::R, k) * out.Phi[k] + cf.at(Coef::m, k);
  });
  return out;
}

// Drift of the mean ODE d(Ex0) = [(A + alpha - B^2 R^-1 Pi) Ex0 - B^2 R^-1 Phi + m] dt at node k.
inline double pf_mean_drift(const Model& model, const PFConsistency& c, int k, double mean) {
  const auto& cf = model.coef;
  return (cf.at(Coef::A, k) + cf.alpha() - c.a_tilde[k]) * mean + c.b_tilde[k];
}

// Deterministic per-step correction added to every Euler-Maruyama update so
// that the discrete scheme reproduces the RK4 mean path exactly:
// corr_k = mean_{k+1} - mean_k - h * drift_k(mean_k).
template <class Drift>
std::vector<double> mean_anchor(const ScalarPath& mean, const Drift& drift) {
  const TimeGrid& grid = mean.grid();
  const double h = grid.step();
  std::vector<double> corr(static_cast<std::size_t>(grid.steps()));
  for (int k = 0; k < grid.steps(); ++k) {
    corr[static_cast<std::size_t>(k)] = mean[k + 1] - mean[k] - h * drift(k, mean[k]);
  }
  return corr;
}

inline std::vector<double> pf_mean_anchor(const Model& model, const PFConsistency& c) {
  return mean_anchor(c.Ex0, [&](int k, double v) { return pf_mean_drift(model, c, k, v); });
}

// Decentralized control u = gain_filter * xhat_i + gain_mean * Ex0 + offset.
struct PFStrategy {
  ScalarPath gain_filter;  // -R^-1 B P
  ScalarPath gain_mean;    // -R^-1 B (Pi - P)
  ScalarPath offset;       // -R^-1 B Phi
  ScalarPath Ex0;

  double control(int k, double filter) const { return gain_filter[k] * filter + gain_mean[k] * Ex0[k] + offset[k]; }
};

inline PFStrategy build_pf_strategy(const Model& model, const PFConsistency& c) {
  const auto& cf = model.coef;
  const TimeGrid& grid = model.grid;
  auto k_of = [&](int k) { return -cf.at(Coef::B, k) / cf.at(Coef::R, k); };
  PFStrategy s;
  s.gain_filter = map_nodes(grid, [&](int k) { return k_of(k) * c.P[k]; });
  s.gain_mean = map_nodes(grid, [&](int k) { return k_of(k) * (c.Pi[k] - c.P[k]); });
  s.offset = map_nodes(grid, [&](int k) { return k_of(k) * c.Phi[k]; });
  s.Ex0 = c.Ex0;
  return s;
}

// One realization of the limiting state average
//   dx0 = [(A + alpha) x0 - a_tilde Ex0 + b_tilde] dt + sigma_tilde dW,  x0(0) = x,
// by mean-anchored Euler-Maruyama. dW holds the M common-noise increments.
inline ScalarPath solve_limiting_mean_field_sde(const Model& model, const PFConsistency& c,
                                                std::span<const double> dW,
                                                const std::vector<double>* anchor = nullptr) {
  const TimeGrid& grid = model.grid;
  const auto& cf = model.coef;
  const double h = grid.step();
  std::vector<double> local;
  if (anchor == nullptr) {
    local = pf_mean_anchor(model, c);
    anchor = &local;
  }
  std::vector<double> x0(static_cast<std::size_t>(grid.nodes()));
  x0[0] = cf.x();
  for (int k = 0; k < grid.steps(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double drift = (cf.at(Coef::A, k) + cf.alpha()) * x0[i] - c.a_tilde[k] * c.Ex0[k] + c.b_tilde[k];
    x0[i + 1] = x0[i] + h * drift + cf.at(Coef::sigma_tilde, k) * dW[i] + (*anchor)[i];
  }
  return ScalarPath(grid, std::move(x0));
}

}  // namespace mflqg
