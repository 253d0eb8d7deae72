#pragma once

#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mflqg/consistency_pf.hpp"
#include "mflqg/consistency_po.hpp"
#include "mflqg/model.hpp"
#include "mflqg/noise.hpp"
#include "mflqg/stats.hpp"

namespace mflqg {

enum class DeviationKind { Scaled, Shifted, OpenLoop, ZeroControl };

// Unilateral deviation of one agent. The deviating control is built from the
// agent's own equilibrium control, so it stays adapted to the agent's own
// information.
struct DeviationSpec {
  int agent = 0;
  DeviationKind kind = DeviationKind::Scaled;
  double param = 1.0;
  std::vector<double> path;  // OpenLoop control, or Shifted direction (unit when empty)

  static DeviationSpec scaled(double kappa, int agent = 0) { return {agent, DeviationKind::Scaled, kappa, {}}; }
  static DeviationSpec shifted(double delta, std::vector<double> direction = {}, int agent = 0) {
    return {agent, DeviationKind::Shifted, delta, std::move(direction)};
  }
  static DeviationSpec open_loop(std::vector<double> control, int agent = 0) {
    return {agent, DeviationKind::OpenLoop, 0.0, std::move(control)};
  }
  static DeviationSpec zero_control(int agent = 0) { return {agent, DeviationKind::ZeroControl, 0.0, {}}; }

  double apply(int k, double equilibrium) const {
    switch (kind) {
      case DeviationKind::Scaled:
        return param * equilibrium;
      case DeviationKind::Shifted:
        return equilibrium + param * (path.empty() ? 1.0 : path[static_cast<std::size_t>(k)]);
      case DeviationKind::OpenLoop:
        return path[static_cast<std::size_t>(k)];
      case DeviationKind::ZeroControl:
        return 0.0;
    }
    return equilibrium;
  }

  std::string label() const {
    std::ostringstream s;
    switch (kind) {
      case DeviationKind::Scaled:
        s << "scaled(" << param << ")";
        break;
      case DeviationKind::Shifted:
        s << "shifted(" << param << (path.empty() ? ")" : ",path)");
        break;
      case DeviationKind::OpenLoop:
        s << "open_loop";
        break;
      case DeviationKind::ZeroControl:
        s << "zero_control";
        break;
    }
    return s.str();
  }
};

inline double control_for(const std::optional<DeviationSpec>& dev, int agent, int k, double equilibrium) {
  return dev && dev->agent == agent ? dev->apply(k, equilibrium) : equilibrium;
}

// One replication of the finite population together with the same agents in
// the limiting problem (benchmark x0 instead of the state average), both
// driven by one NoiseBundle. Agent tables are N x (M+1) unless noted.
struct PopulationTrajectory {
  TimeGrid grid;
  InfoMode mode = InfoMode::PartialFiltration;
  std::optional<DeviationSpec> deviation;

  AgentTable states;    // x_i under the finite-N coupling
  AgentTable filters;   // xhat_i
  AgentTable controls;  // u_i
  std::vector<double> state_avg;
  std::vector<double> filter_avg;

  AgentTable limit_states;    // the same agents with x0 in place of the state average
  AgentTable limit_filters;   // observation case only (filter built from the limiting sensor)
  AgentTable limit_controls;
  std::vector<double> limit_state_avg;

  ScalarPath x0;
  ScalarPath xhat_limit;      // observation case only

  AgentTable observations;    // observation case: y_i paths, y_i(0) = 0
  AgentTable innovations;     // observation case: N x M increments

  int agents() const noexcept { return states.rows(); }
};

inline std::vector<double> column_average(const AgentTable& t) {
  std::vector<double> avg(static_cast<std::size_t>(t.cols()), 0.0);
  for (int k = 0; k < t.cols(); ++k) {
    double s = 0.0;
    for (int i = 0; i < t.rows(); ++i) s += t(i, k);
    avg[static_cast<std::size_t>(k)] = s / static_cast<double>(t.rows());
  }
  return avg;
}

// Euler-Maruyama for the coupled population under the filtration-structure
// strategy. Each filter follows
//   dxhat_i = [A xhat_i + B u(xhat_i) + alpha Ex0 + m] dt + sigma dW_i,
// which is the decoupled filter equation written through the strategy.
inline PopulationTrajectory simulate_pf_population(const Model& model, const PFConsistency& c,
                                                   const PFStrategy& strategy, const NoiseBundle& noise,
                                                   const std::optional<DeviationSpec>& deviation = std::nullopt) {
  const TimeGrid& grid = model.grid;
  const auto& cf = model.coef;
  const int N = noise.agents();
  const int M = grid.steps();
  const double h = grid.step();
  const double alpha = cf.alpha();
  const std::vector<double> anchor = pf_mean_anchor(model, c);

  PopulationTrajectory tr;
  tr.grid = grid;
  tr.mode = InfoMode::PartialFiltration;
  tr.deviation = deviation;
  tr.states = AgentTable(N, M + 1);
  tr.filters = AgentTable(N, M + 1);
  tr.controls = AgentTable(N, M + 1);
  tr.limit_states = AgentTable(N, M + 1);
  tr.limit_controls = AgentTable(N, M + 1);
  tr.state_avg.assign(static_cast<std::size_t>(M + 1), 0.0);
  tr.x0 = solve_limiting_mean_field_sde(model, c, noise.common, &anchor);

  const double x = cf.x();
  for (int i = 0; i < N; ++i) {
    tr.states(i, 0) = x;
    tr.filters(i, 0) = x;
    tr.limit_states(i, 0) = x;
  }
  tr.state_avg[0] = column_average(tr.states)[0];

  for (int k = 0; k <= M; ++k) {
    for (int i = 0; i < N; ++i) {
      const double u = control_for(deviation, i, k, strategy.control(k, tr.filters(i, k)));
      tr.controls(i, k) = u;
      tr.limit_controls(i, k) = u;
    }
    if (k == M) break;
    const auto kk = static_cast<std::size_t>(k);
    const double A = cf.at(Coef::A, k);
    const double B = cf.at(Coef::B, k);
    const double m = cf.at(Coef::m, k);
    const double sig = cf.at(Coef::sigma, k);
    const double sigt = cf.at(Coef::sigma_tilde, k);
    const double ex0 = c.Ex0[k];
    const double x0 = tr.x0[k];
    const double xN = tr.state_avg[kk];
    const double common = sigt * noise.common[kk];
    const double corr = anchor[kk];
    double sum = 0.0;
    for (int i = 0; i < N; ++i) {
      const double dWi = sig * noise.idiosyncratic(i, k);
      const double xh = tr.filters(i, k);
      const double ueq = strategy.control(k, xh);
      const double u = tr.controls(i, k);
      tr.filters(i, k + 1) = xh + h * (A * xh + B * ueq + alpha * ex0 + m) + dWi + corr;
      const double y = tr.states(i, k);
      const double ynext = y + h * (A * y + B * u + alpha * xN + m) + dWi + common + corr;
      tr.states(i, k + 1) = ynext;
      sum += ynext;
      const double xb = tr.limit_states(i, k);
      tr.limit_states(i, k + 1) = xb + h * (A * xb + B * u + alpha * x0 + m) + dWi + common + corr;
    }
    tr.state_avg[kk + 1] = sum / static_cast<double>(N);
  }
  tr.filter_avg = column_average(tr.filters);
  tr.limit_state_avg = column_average(tr.limit_states);
  return tr;
}

// Euler-Maruyama for the population with noisy sensors
//   dy_i = [H x_i + H~ x^(N) + h] dt + dV_i,
// each agent filtering with the limiting gain Pf H against the limiting pair.
inline PopulationTrajectory simulate_po_population(const Model& model, const POStrategy& strategy,
                                                   const POConsistency& c, const NoiseBundle& noise,
                                                   const std::optional<DeviationSpec>& deviation = std::nullopt) {
  const TimeGrid& grid = model.grid;
  const auto& cf = model.coef;
  const int N = noise.agents();
  const int M = grid.steps();
  const double h = grid.step();
  const double alpha = cf.alpha();
  const bool feed = model.population.feed == CommonNoiseFeed::FilterGain;
  const std::vector<double> anchor = po_mean_anchor(c);
  if (noise.observation.empty()) throw ConfigError("observation noise missing from the noise bundle");

  PopulationTrajectory tr;
  tr.grid = grid;
  tr.mode = InfoMode::PartialObservation;
  tr.deviation = deviation;
  for (AgentTable* t : {&tr.states, &tr.filters, &tr.controls, &tr.limit_states, &tr.limit_filters,
                        &tr.limit_controls, &tr.observations}) {
    *t = AgentTable(N, M + 1);
  }
  tr.innovations = AgentTable(N, M);
  tr.state_avg.assign(static_cast<std::size_t>(M + 1), 0.0);
  {
    LimitingPairPath pair = solve_limiting_pair(model, c, noise.common, &anchor);
    tr.x0 = std::move(pair.x0);
    tr.xhat_limit = std::move(pair.xhat);
  }

  const double x = cf.x();
  for (int i = 0; i < N; ++i) {
    tr.states(i, 0) = x;
    tr.filters(i, 0) = x;
    tr.limit_states(i, 0) = x;
    tr.limit_filters(i, 0) = x;
  }
  tr.state_avg[0] = column_average(tr.states)[0];

  for (int k = 0; k <= M; ++k) {
    const double x0 = tr.x0[k];
    const double xhl = tr.xhat_limit[k];
    for (int i = 0; i < N; ++i) {
      tr.controls(i, k) = control_for(deviation, i, k, strategy.control(k, tr.filters(i, k), x0, xhl));
      tr.limit_controls(i, k) = control_for(deviation, i, k, strategy.control(k, tr.limit_filters(i, k), x0, xhl));
    }
    if (k == M) break;
    const auto kk = static_cast<std::size_t>(k);
    const double A = cf.at(Coef::A, k);
    const double B = cf.at(Coef::B, k);
    const double m = cf.at(Coef::m, k);
    const double sig = cf.at(Coef::sigma, k);
    const double sigt = cf.at(Coef::sigma_tilde, k);
    const double H = cf.at(Coef::H, k);
    const double Ht = cf.at(Coef::H_tilde, k);
    const double hs = cf.at(Coef::h, k);
    const double gain = c.Pf[k] * H;
    const double xN = tr.state_avg[kk];
    const double dW = noise.common[kk];
    const double common = sigt * dW;
    const double feed_term = feed ? gain * dW : 0.0;
    const double corr = anchor[kk];
    double sum = 0.0;
    for (int i = 0; i < N; ++i) {
      const double dWi = sig * noise.idiosyncratic(i, k);
      const double dV = noise.observation(i, k);

      const double xi = tr.states(i, k);
      const double xh = tr.filters(i, k);
      const double u = tr.controls(i, k);
      const double dy = (H * xi + Ht * xN + hs) * h + dV;
      const double innov = dy - (H * xh + Ht * x0 + hs) * h;
      tr.observations(i, k + 1) = tr.observations(i, k) + dy;
      tr.innovations(i, k) = innov;
      const double xnext = xi + h * (A * xi + B * u + alpha * xN + m) + dWi + common + corr;
      tr.states(i, k + 1) = xnext;
      sum += xnext;
      tr.filters(i, k + 1) = xh + h * (A * xh + B * u + alpha * x0 + m) + feed_term + gain * innov + corr;

      const double xb = tr.limit_states(i, k);
      const double xbh = tr.limit_filters(i, k);
      const double ub = tr.limit_controls(i, k);
      const double dyb = (H * xb + Ht * x0 + hs) * h + dV;
      tr.limit_states(i, k + 1) = xb + h * (A * xb + B * ub + alpha * x0 + m) + dWi + common + corr;
      tr.limit_filters(i, k + 1) =
          xbh + h * (A * xbh + B * ub + alpha * x0 + m) + feed_term + gain * (dyb - (H * xbh + Ht * x0 + hs) * h) + corr;
    }
    tr.state_avg[kk + 1] = sum / static_cast<double>(N);
  }
  tr.filter_avg = column_average(tr.filters);
  tr.limit_state_avg = column_average(tr.limit_states);
  return tr;
}

enum class CostMode { Population, Limiting };

// Realized cost of one agent on one replication: trapezoidal quadrature of
// Q (x_i - benchmark)^2 + R u_i^2 plus G x_i(T)^2. The benchmark is the state
// average (population) or x0 (limiting problem).
inline double realized_cost(const PopulationTrajectory& tr, const Model& model, CostMode mode, int agent) {
  const auto& cf = model.coef;
  const TimeGrid& grid = tr.grid;
  const int M = grid.steps();
  const bool pop = mode == CostMode::Population;
  const AgentTable& xs = pop ? tr.states : tr.limit_states;
  const AgentTable& us = pop ? tr.controls : tr.limit_controls;
  auto integrand = [&](int k) {
    const double bench = pop ? tr.state_avg[static_cast<std::size_t>(k)] : tr.x0[k];
    const double d = xs(agent, k) - bench;
    const double u = us(agent, k);
    return cf.at(Coef::Q, k) * d * d + cf.at(Coef::R, k) * u * u;
  };
  double s = 0.5 * (integrand(0) + integrand(M));
  for (int k = 1; k < M; ++k) s += integrand(k);
  const double xT = xs(agent, M);
  return s * grid.step() + cf.G() * xT * xT;
}

struct CostEstimate {
  double mean = 0.0;
  double se = 0.0;
  int reps = 0;
};

inline CostEstimate estimate_cost(std::span<const PopulationTrajectory> runs, const Model& model, CostMode mode,
                                  int agent) {
  RunningStats s;
  for (const auto& tr : runs) s.add(realized_cost(tr, model, mode, agent));
  return {s.mean(), s.standard_error(), static_cast<int>(runs.size())};
}

}  // namespace mflqg
