#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mflqg/error.hpp"

namespace mflqg {

// Uniform grid t_k = k T / M, k = 0..M.
class TimeGrid {
 public:
  TimeGrid() = default;

  TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw AssumptionViolation("T>0", -1);
    }
    if (steps < 2) {
      throw AssumptionViolation("M>=2", -1);
    }
  }

  double horizon() const noexcept { return horizon_; }
  int steps() const noexcept { return steps_; }
  int nodes() const noexcept { return steps_ + 1; }
  double step() const noexcept { return horizon_ / steps_; }
  double time(int k) const noexcept {
    return k == steps_ ? horizon_ : horizon_ * static_cast<double>(k) / steps_;
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double horizon_ = 1.0;
  int steps_ = 2;
};

enum class Coef { A, B, m, sigma, sigma_tilde, Q, R, H, H_tilde, h };

inline constexpr std::array<Coef, 10> kAllCoefs = {Coef::A,     Coef::B,           Coef::m, Coef::sigma,
                                                   Coef::sigma_tilde, Coef::Q, Coef::R, Coef::H,
                                                   Coef::H_tilde, Coef::h};

inline constexpr std::string_view coef_name(Coef c) {
  switch (c) {
    case Coef::A: return "A";
    case Coef::B: return "B";
    case Coef::m: return "m";
    case Coef::sigma: return "sigma";
    case Coef::sigma_tilde: return "sigma_tilde";
    case Coef::Q: return "Q";
    case Coef::R: return "R";
    case Coef::H: return "H";
    case Coef::H_tilde: return "H_tilde";
    case Coef::h: return "h";
  }
  return "?";
}

inline std::optional<Coef> coef_from_name(std::string_view name) {
  for (Coef c : kAllCoefs) {
    if (coef_name(c) == name) return c;
  }
  return std::nullopt;
}

enum class InfoMode { PartialFiltration, PartialObservation };

// Whether the observation-case filter and the limiting filter average are fed
// Pf*H*dW from the common noise. Off keeps Pf equal to the filter error variance.
enum class CommonNoiseFeed { Off, FilterGain };

// Time-varying coefficients held as node values on the model grid, evaluated
// between nodes by linear interpolation. Immutable after construction.
class CoefficientTable {
 public:
  CoefficientTable() = default;

  CoefficientTable(TimeGrid grid, std::map<Coef, std::vector<double>> node_values, double alpha,
                   double terminal_weight, double initial_state)
      : grid_(grid), alpha_(alpha), G_(terminal_weight), x_(initial_state) {
    for (auto& [c, values] : node_values) {
      values_[static_cast<std::size_t>(c)] = std::move(values);
    }
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  double alpha() const noexcept { return alpha_; }
  double G() const noexcept { return G_; }
  double x() const noexcept { return x_; }

  bool has(Coef c) const noexcept { return !values_[static_cast<std::size_t>(c)].empty(); }

  const std::vector<double>& nodes(Coef c) const {
    const auto& v = values_[static_cast<std::size_t>(c)];
    if (v.empty()) throw MissingCoefficient(std::string(coef_name(c)));
    return v;
  }

  double at(Coef c, int k) const { return nodes(c)[static_cast<std::size_t>(k)]; }

  double operator()(Coef c, double t) const {
    const double T = grid_.horizon();
    if (!(t >= 0.0) || t > T + 1e-12 * std::max(1.0, T)) throw OutOfDomain(t);
    const auto& v = nodes(c);
    const double h = grid_.step();
    const int M = grid_.steps();
    int k = std::clamp(static_cast<int>(std::floor(t / h)), 0, M - 1);
    double w = std::clamp((t - grid_.time(k)) / h, 0.0, 1.0);
    return (1.0 - w) * v[static_cast<std::size_t>(k)] + w * v[static_cast<std::size_t>(k) + 1];
  }

 private:
  TimeGrid grid_;
  std::array<std::vector<double>, kAllCoefs.size()> values_;
  double alpha_ = 0.0;
  double G_ = 0.0;
  double x_ = 0.0;
};

inline double eval_coefficient(const CoefficientTable& table, Coef c, double t) { return table(c, t); }

struct PopulationConfig {
  int agents = 64;
  int reps = 1;
  std::uint64_t seed = 1;
  InfoMode mode = InfoMode::PartialFiltration;
  CommonNoiseFeed feed = CommonNoiseFeed::Off;
};

struct Model {
  TimeGrid grid;
  CoefficientTable coef;
  PopulationConfig population;
  double r_floor = 1e-8;
};

// Raw, unvalidated description of a model. Sampled coefficients are spread
// uniformly over [0, T]; a single sample means a constant.
struct ModelSpec {
  double horizon = 1.0;
  int steps = 1000;
  std::map<std::string, std::vector<double>> samples;
  std::optional<double> alpha;
  std::optional<double> G;
  std::optional<double> x;
  PopulationConfig population;
  double r_floor = 1e-8;

  ModelSpec& set(std::string name, std::vector<double> s) {
    samples[std::move(name)] = std::move(s);
    return *this;
  }
  ModelSpec& set(std::string name, double constant) { return set(std::move(name), std::vector<double>{constant}); }
};

namespace detail {

inline std::vector<double> resample_to_grid(const std::vector<double>& samples, const TimeGrid& grid) {
  std::vector<double> out(static_cast<std::size_t>(grid.nodes()));
  const std::size_t n = samples.size();
  for (int k = 0; k < grid.nodes(); ++k) {
    if (n == 1) {
      out[static_cast<std::size_t>(k)] = samples[0];
      continue;
    }
    const double s = grid.time(k) / grid.horizon() * static_cast<double>(n - 1);
    std::size_t j = std::min(static_cast<std::size_t>(std::floor(s)), n - 2);
    const double w = s - static_cast<double>(j);
    out[static_cast<std::size_t>(k)] = (1.0 - w) * samples[j] + w * samples[j + 1];
  }
  return out;
}

}  // namespace detail

// Validates a raw spec against the standing assumptions and evaluates every
// coefficient on the grid nodes.
inline Model build_model(const ModelSpec& spec) {
  Model model;
  model.grid = TimeGrid(spec.horizon, spec.steps);
  model.population = spec.population;
  model.r_floor = spec.r_floor;
  if (!(spec.r_floor > 0.0)) throw AssumptionViolation("R_floor>0", -1);
  if (spec.population.agents < 1) throw AssumptionViolation("N>=1", -1);
  if (spec.population.reps < 1) throw AssumptionViolation("reps>=1", -1);

  std::vector<Coef> required = {Coef::A, Coef::B, Coef::m, Coef::sigma, Coef::sigma_tilde, Coef::Q, Coef::R};
  if (spec.population.mode == InfoMode::PartialObservation) {
    required.insert(required.end(), {Coef::H, Coef::H_tilde, Coef::h});
  }

  std::map<Coef, std::vector<double>> node_values;
  for (Coef c : required) {
    auto it = spec.samples.find(std::string(coef_name(c)));
    if (it == spec.samples.end() || it->second.empty()) throw MissingCoefficient(std::string(coef_name(c)));
    node_values[c] = detail::resample_to_grid(it->second, model.grid);
  }
  // Observation coefficients are kept when supplied even in the filtration case.
  for (Coef c : {Coef::H, Coef::H_tilde, Coef::h}) {
    if (node_values.count(c)) continue;
    auto it = spec.samples.find(std::string(coef_name(c)));
    if (it != spec.samples.end() && !it->second.empty()) node_values[c] = detail::resample_to_grid(it->second, model.grid);
  }
  for (const auto& [name, s] : spec.samples) {
    if (!coef_from_name(name)) throw ConfigError("unknown coefficient: " + name);
  }

  if (!spec.alpha) throw MissingCoefficient("alpha");
  if (!spec.G) throw MissingCoefficient("G");
  if (!spec.x) throw MissingCoefficient("x");

  for (const auto& [c, values] : node_values) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (!std::isfinite(values[k])) {
        throw AssumptionViolation(std::string(coef_name(c)) + " finite", static_cast<int>(k));
      }
    }
  }
  for (std::size_t k = 0; k < node_values[Coef::Q].size(); ++k) {
    if (node_values[Coef::Q][k] < 0.0) throw AssumptionViolation("Q>=0", static_cast<int>(k));
  }
  for (std::size_t k = 0; k < node_values[Coef::R].size(); ++k) {
    if (!(node_values[Coef::R][k] >= spec.r_floor)) throw AssumptionViolation("R>0", static_cast<int>(k));
  }
  if (!std::isfinite(*spec.alpha)) throw AssumptionViolation("alpha finite", -1);
  if (!std::isfinite(*spec.G) || *spec.G < 0.0) throw AssumptionViolation("G>=0", -1);
  if (!std::isfinite(*spec.x)) throw AssumptionViolation("x finite", -1);

  model.coef = CoefficientTable(model.grid, std::move(node_values), *spec.alpha, *spec.G, *spec.x);
  return model;
}

}  // namespace mflqg
