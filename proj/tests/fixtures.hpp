#pragma once

#include <cmath>
#include <vector>

#include "mflqg/model.hpp"

namespace mflqg::testing {

// Constant coefficients, the filtration case used by the rate studies.
inline ModelSpec pf_spec(int steps = 100, double alpha = 2.0) {
  ModelSpec s;
  s.horizon = 1.0;
  s.steps = steps;
  s.alpha = alpha;
  s.G = 0.5;
  s.x = 1.0;
  s.set("A", 0.2).set("B", 1.0).set("m", 0.2).set("sigma", 0.5).set("sigma_tilde", 0.3).set("Q", 1.0).set("R", 1.0);
  return s;
}

inline ModelSpec po_spec(int steps = 100, double alpha = 0.5) {
  ModelSpec s = pf_spec(steps, alpha);
  s.set("H", 1.0).set("H_tilde", 0.5).set("h", 0.0);
  s.population.mode = InfoMode::PartialObservation;
  return s;
}

// Every drift, cost weight and noise switched off.
inline ModelSpec zero_spec(InfoMode mode, int steps = 50) {
  ModelSpec s;
  s.horizon = 1.0;
  s.steps = steps;
  s.alpha = 0.0;
  s.G = 0.0;
  s.x = 1.0;
  s.set("A", 0.0).set("B", 1.0).set("m", 0.0).set("sigma", 0.0).set("sigma_tilde", 0.0).set("Q", 0.0).set("R", 1.0);
  if (mode == InfoMode::PartialObservation) s.set("H", 1.0).set("H_tilde", 0.0).set("h", 0.0);
  s.population.mode = mode;
  return s;
}

// Time-varying coefficients, smooth on [0, T]; two samples give exact linear
// interpolation.
inline ModelSpec smooth_po_spec(int steps) {
  ModelSpec s = po_spec(steps);
  s.set("m", std::vector<double>{0.1, 0.5}).set("Q", std::vector<double>{1.0, 1.5});
  s.set("sigma", std::vector<double>{0.4, 0.6}).set("H", std::vector<double>{1.0, 0.8});
  return s;
}

inline ModelSpec smooth_pf_spec(int steps) {
  ModelSpec s = pf_spec(steps, 0.5);
  s.set("A", std::vector<double>{0.2, -0.1}).set("m", std::vector<double>{0.1, 0.5});
  s.set("Q", std::vector<double>{1.0, 1.5}).set("R", std::vector<double>{1.0, 0.7});
  return s;
}

// Five-point central difference of node values at interior node k.
template <class Path>
auto five_point(const Path& v, int k, double h) {
  return (-v[k + 2] + 8.0 * v[k + 1] - 8.0 * v[k - 1] + v[k - 2]) / (12.0 * h);
}

inline double observed_order(double coarse_error, double fine_error, double ratio = 2.0) {
  return std::log(coarse_error / fine_error) / std::log(ratio);
}

}  // namespace mflqg::testing
