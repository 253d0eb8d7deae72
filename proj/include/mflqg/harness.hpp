#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mflqg/consistency_pf.hpp"
#include "mflqg/consistency_po.hpp"
#include "mflqg/model.hpp"
#include "mflqg/noise.hpp"
#include "mflqg/parallel.hpp"
#include "mflqg/population.hpp"
#include "mflqg/stats.hpp"

namespace mflqg {

// Solved equilibrium of either information structure, ready to simulate.
class EquilibriumSimulator {
 public:
  explicit EquilibriumSimulator(Model model) : model_(std::move(model)) {
    if (mode() == InfoMode::PartialFiltration) {
      pf_ = solve_pf_consistency(model_);
      pf_strategy_ = build_pf_strategy(model_, *pf_);
    } else {
      po_ = solve_po_consistency(model_);
      po_strategy_ = build_po_strategy(model_, *po_);
    }
  }

  const Model& model() const noexcept { return model_; }
  InfoMode mode() const noexcept { return model_.population.mode; }
  const PFConsistency& pf() const { return *pf_; }
  const POConsistency& po() const { return *po_; }

  NoiseBundle noise(int agents, std::uint64_t seed, std::uint64_t replication) const {
    PopulationConfig cfg = model_.population;
    cfg.agents = agents;
    cfg.seed = seed;
    return generate_noise(cfg, model_.grid, replication);
  }

  PopulationTrajectory run(const NoiseBundle& noise, const std::optional<DeviationSpec>& dev = std::nullopt) const {
    if (pf_) return simulate_pf_population(model_, *pf_, *pf_strategy_, noise, dev);
    return simulate_po_population(model_, *po_strategy_, *po_, noise, dev);
  }

  // Reference path for the filter average: Ex0 (filtration) or the limiting
  // xhat of the same replication (observation).
  double filter_reference(const PopulationTrajectory& tr, int k) const { return pf_ ? pf_->Ex0[k] : tr.xhat_limit[k]; }

 private:
  Model model_;
  std::optional<PFConsistency> pf_;
  std::optional<PFStrategy> pf_strategy_;
  std::optional<POConsistency> po_;
  std::optional<POStrategy> po_strategy_;
};

struct QuantityEstimate {
  int agents = 0;
  double mean = 0.0;
  double se = 0.0;
  int node = -1;  // maximizing node for sup-over-time quantities
  bool precise = true;
};

struct QuantitySeries {
  std::string name;
  std::string description;
  std::vector<QuantityEstimate> per_n;
  std::optional<SlopeFit> fit;
  std::string degenerate;  // reason when no slope could be fitted
};

struct StudyResult {
  InfoMode mode = InfoMode::PartialFiltration;
  std::vector<int> agents;
  int reps = 0;
  std::uint64_t seed = 0;
  std::string deviation;  // deviation used for the deviating-agent cost gap
  std::vector<QuantitySeries> quantities;

  const QuantitySeries& at(const std::string& name) const {
    for (const auto& q : quantities) {
      if (q.name == name) return q;
    }
    throw ConfigError("no quantity named " + name);
  }
};

struct StudyOptions {
  std::vector<int> agents = {16, 64, 256, 1024};
  int reps = 400;
  std::uint64_t seed = 1;
  int threads = 1;
  bool enforce_precision = true;
  double precision = 0.3;  // allowed standard error relative to the estimate
  DeviationSpec deviation = DeviationSpec::shifted(0.5);
  bool antithetic = true;  // pair each replication with its idiosyncratic mirror
};

inline bool is_precise(double mean, double se, double rel) { return se <= rel * std::abs(mean); }

// Acceptance window for a fitted slope around its theoretical value. The
// half-width shrinks with the Monte Carlo noise once reps >= 2000.
struct SlopeWindow {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double s) const { return s >= lo && s <= hi; }
};

inline SlopeWindow slope_window(double center, double half_width, int reps) {
  if (reps >= 2000) half_width *= std::max(0.5, std::sqrt(400.0 / reps));
  return {center - half_width, center + half_width};
}

inline void fit_series(QuantitySeries& q) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& e : q.per_n) pts.emplace_back(e.agents, e.mean);
  try {
    q.fit = fit_loglog_slope(pts);
  } catch (const DegenerateData& e) {
    q.degenerate = e.what();
  }
}

namespace detail {

inline void check_precision(const std::vector<QuantitySeries>& qs) {
  for (const auto& q : qs) {
    for (const auto& e : q.per_n) {
      if (!e.precise) {
        throw InsufficientReplications(q.name + " at N=" + std::to_string(e.agents) + ": standard error " +
                                       std::to_string(e.se) + " vs estimate " + std::to_string(e.mean));
      }
    }
  }
}

struct ConvergenceSample {
  std::vector<std::vector<double>> node_values;  // per sup-over-time quantity
  double cost_gap = 0.0;                         // agent-averaged population minus limiting cost
  double deviation_cost_gap = 0.0;
};

}  // namespace detail

inline const std::vector<std::pair<std::string, std::string>>& convergence_quantities() {
  static const std::vector<std::pair<std::string, std::string>> q = {
      {"filter_avg_vs_reference", "sup_t E|filter average - reference|^2"},
      {"limit_avg_vs_x0", "sup_t E|limiting state average - x0|^2"},
      {"state_avg_vs_x0", "sup_t E|state average - x0|^2"},
      {"state_vs_limit", "sup_t E|x_i - limiting x_i|^2"},
      {"square_gap", "sup_t E||x_i|^2 - |limiting x_i|^2|"},
      {"cost_gap", "|population cost - limiting cost| at equilibrium"},
      {"deviation_cost_gap", "|population cost - limiting cost| of a deviating agent"},
  };
  return q;
}

// Mean-square distances between the finite population and its limit, and the
// matching cost gaps, for each N.
inline StudyResult run_convergence_study(const EquilibriumSimulator& sim, const StudyOptions& opt) {
  const Model& model = sim.model();
  const int nodes = model.grid.nodes();
  StudyResult result;
  result.mode = sim.mode();
  result.agents = opt.agents;
  result.reps = opt.reps;
  result.seed = opt.seed;
  result.deviation = opt.deviation.label();
  for (const auto& [name, desc] : convergence_quantities()) result.quantities.push_back({name, desc, {}, {}, {}});

  for (int N : opt.agents) {
    std::vector<detail::ConvergenceSample> samples(static_cast<std::size_t>(opt.reps));
    auto sample_of = [&](const NoiseBundle& noise) {
      const PopulationTrajectory tr = sim.run(noise);
      detail::ConvergenceSample s;
      s.node_values.assign(5, std::vector<double>(static_cast<std::size_t>(nodes)));
      for (int k = 0; k < nodes; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const double d1 = tr.filter_avg[kk] - sim.filter_reference(tr, k);
        const double d2 = tr.limit_state_avg[kk] - tr.x0[k];
        const double d3 = tr.state_avg[kk] - tr.x0[k];
        double sq = 0.0, ab = 0.0;
        for (int i = 0; i < N; ++i) {
          const double y = tr.states(i, k);
          const double xb = tr.limit_states(i, k);
          sq += (y - xb) * (y - xb);
          ab += std::abs(y * y - xb * xb);
        }
        s.node_values[0][kk] = d1 * d1;
        s.node_values[1][kk] = d2 * d2;
        s.node_values[2][kk] = d3 * d3;
        s.node_values[3][kk] = sq / N;
        s.node_values[4][kk] = ab / N;
      }
      double gap = 0.0;
      for (int i = 0; i < N; ++i) {
        gap += realized_cost(tr, model, CostMode::Population, i) - realized_cost(tr, model, CostMode::Limiting, i);
      }
      s.cost_gap = gap / N;
      const PopulationTrajectory dev = sim.run(noise, opt.deviation);
      const int a = opt.deviation.agent;
      s.deviation_cost_gap =
          realized_cost(dev, model, CostMode::Population, a) - realized_cost(dev, model, CostMode::Limiting, a);
      return s;
    };
    parallel_for(opt.reps, opt.threads, [&](int r) {
      const NoiseBundle noise = sim.noise(N, opt.seed, static_cast<std::uint64_t>(r));
      detail::ConvergenceSample s = sample_of(noise);
      if (opt.antithetic) {
        const detail::ConvergenceSample t = sample_of(mirrored(noise));
        for (std::size_t q = 0; q < s.node_values.size(); ++q) {
          for (std::size_t k = 0; k < s.node_values[q].size(); ++k) {
            s.node_values[q][k] = 0.5 * (s.node_values[q][k] + t.node_values[q][k]);
          }
        }
        s.cost_gap = 0.5 * (s.cost_gap + t.cost_gap);
        s.deviation_cost_gap = 0.5 * (s.deviation_cost_gap + t.deviation_cost_gap);
      }
      samples[static_cast<std::size_t>(r)] = std::move(s);
    });

    for (int q = 0; q < 5; ++q) {
      std::vector<std::vector<double>> rows;
      rows.reserve(samples.size());
      for (auto& s : samples) rows.push_back(std::move(s.node_values[static_cast<std::size_t>(q)]));
      const SupEstimate e = sup_over_nodes(rows);
      result.quantities[static_cast<std::size_t>(q)].per_n.push_back(
          {N, e.mean, e.se, e.node, is_precise(e.mean, e.se, opt.precision)});
    }
    std::vector<double> g, dg;
    for (const auto& s : samples) {
      g.push_back(s.cost_gap);
      dg.push_back(s.deviation_cost_gap);
    }
    const Estimate eg = summarize(g);
    const Estimate edg = summarize(dg);
    result.quantities[5].per_n.push_back({N, std::abs(eg.mean), eg.se, -1, is_precise(eg.mean, eg.se, opt.precision)});
    result.quantities[6].per_n.push_back(
        {N, std::abs(edg.mean), edg.se, -1, is_precise(edg.mean, edg.se, opt.precision)});
  }
  for (auto& q : result.quantities) fit_series(q);
  if (opt.enforce_precision) detail::check_precision(result.quantities);
  return result;
}

inline StudyResult run_convergence_study(const Model& model, const StudyOptions& opt) {
  return run_convergence_study(EquilibriumSimulator(model), opt);
}

// Scaled kappa in {0, 0.5, 0.9, 1.1, 1.5} and Shifted delta in {+-0.5, +-0.1}.
inline std::vector<DeviationSpec> default_deviation_family(int agent = 0) {
  std::vector<DeviationSpec> f;
  for (double k : {0.0, 0.5, 0.9, 1.1, 1.5}) f.push_back(DeviationSpec::scaled(k, agent));
  for (double d : {0.5, -0.5, 0.1, -0.1}) f.push_back(DeviationSpec::shifted(d, {}, agent));
  return f;
}

struct DeviationGap {
  std::string label;
  Estimate deviated_cost;  // population cost of the deviating agent
  Estimate gap;            // equilibrium cost minus deviated cost, paired over replications
  Estimate limiting_gap;   // the same difference in the limiting problem
};

struct NashRow {
  int agents = 0;
  Estimate equilibrium_cost;
  std::vector<DeviationGap> gaps;
  double epsilon_raw = 0.0;  // largest mean gap, may be negative
  double epsilon = 0.0;      // clamped at 0
  double epsilon_se = 0.0;
  bool precise = true;
};

struct NashGapReport {
  InfoMode mode = InfoMode::PartialFiltration;
  int reps = 0;
  std::uint64_t seed = 0;
  std::vector<NashRow> rows;
  std::optional<SlopeFit> epsilon_fit;
  std::string degenerate;
};

struct NashOptions {
  std::vector<int> agents = {16, 64, 256, 1024};
  int reps = 400;
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<DeviationSpec> family = default_deviation_family();
  bool antithetic = true;  // pair each replication with its fully mirrored noise
  bool enforce_precision = true;
  double precision = 0.3;
};

// Unilateral deviations under common random numbers: every deviation reuses
// the equilibrium run's noise.
inline NashGapReport run_nash_gap_study(const EquilibriumSimulator& sim, const NashOptions& opt) {
  const Model& model = sim.model();
  const std::size_t D = opt.family.size();
  NashGapReport report;
  report.mode = sim.mode();
  report.reps = opt.reps;
  report.seed = opt.seed;

  for (int N : opt.agents) {
    // Per replication: equilibrium (population, limiting), then per deviation.
    std::vector<std::vector<double>> pop(static_cast<std::size_t>(opt.reps)), lim(pop.size());
    auto costs_of = [&](const NoiseBundle& noise, std::vector<double>& p, std::vector<double>& l) {
      const PopulationTrajectory eq = sim.run(noise);
      const int a0 = opt.family.empty() ? 0 : opt.family.front().agent;
      p.push_back(realized_cost(eq, model, CostMode::Population, a0));
      l.push_back(realized_cost(eq, model, CostMode::Limiting, a0));
      for (const auto& dev : opt.family) {
        const PopulationTrajectory tr = sim.run(noise, dev);
        p.push_back(realized_cost(tr, model, CostMode::Population, dev.agent));
        l.push_back(realized_cost(tr, model, CostMode::Limiting, dev.agent));
      }
    };
    parallel_for(opt.reps, opt.threads, [&](int r) {
      const NoiseBundle noise = sim.noise(N, opt.seed, static_cast<std::uint64_t>(r));
      auto& p = pop[static_cast<std::size_t>(r)];
      auto& l = lim[static_cast<std::size_t>(r)];
      costs_of(noise, p, l);
      if (opt.antithetic) {
        std::vector<double> p2, l2;
        costs_of(mirrored(noise, true), p2, l2);
        for (std::size_t j = 0; j < p.size(); ++j) {
          p[j] = 0.5 * (p[j] + p2[j]);
          l[j] = 0.5 * (l[j] + l2[j]);
        }
      }
    });

    NashRow row;
    row.agents = N;
    std::vector<double> col(pop.size());
    auto column = [&](const std::vector<std::vector<double>>& t, std::size_t j) {
      for (std::size_t r = 0; r < t.size(); ++r) col[r] = t[r][j];
      return summarize(col);
    };
    auto paired = [&](const std::vector<std::vector<double>>& t, std::size_t j) {
      for (std::size_t r = 0; r < t.size(); ++r) col[r] = t[r][0] - t[r][j];
      return summarize(col);
    };
    row.equilibrium_cost = column(pop, 0);
    std::size_t best = 0;
    for (std::size_t d = 0; d < D; ++d) {
      DeviationGap g;
      g.label = opt.family[d].label();
      g.deviated_cost = column(pop, d + 1);
      g.gap = paired(pop, d + 1);
      g.limiting_gap = paired(lim, d + 1);
      if (d == 0 || g.gap.mean > row.gaps[best].gap.mean) best = d;
      row.gaps.push_back(std::move(g));
    }
    if (D > 0) {
      row.epsilon_raw = row.gaps[best].gap.mean;
      row.epsilon_se = row.gaps[best].gap.se;
      row.epsilon = std::max(0.0, row.epsilon_raw);
      row.precise = row.epsilon == 0.0 || is_precise(row.epsilon, row.epsilon_se, opt.precision);
    }
    report.rows.push_back(std::move(row));
  }

  std::vector<std::pair<double, double>> pts;
  for (const auto& r : report.rows) pts.emplace_back(r.agents, r.epsilon);
  try {
    report.epsilon_fit = fit_loglog_slope(pts);
  } catch (const DegenerateData& e) {
    report.degenerate = e.what();
  }
  if (opt.enforce_precision) {
    for (const auto& r : report.rows) {
      if (!r.precise) {
        throw InsufficientReplications("epsilon at N=" + std::to_string(r.agents) + ": standard error " +
                                       std::to_string(r.epsilon_se) + " vs estimate " + std::to_string(r.epsilon));
      }
    }
  }
  return report;
}

inline NashGapReport run_nash_gap_study(const Model& model, const NashOptions& opt) {
  return run_nash_gap_study(EquilibriumSimulator(model), opt);
}

// Every gap lies below epsilon plus `k` standard errors.
inline bool gaps_within_epsilon(const NashGapReport& report, double k = 2.0) {
  for (const auto& r : report.rows) {
    for (const auto& g : r.gaps) {
      if (g.gap.mean > r.epsilon + k * std::hypot(g.gap.se, r.epsilon_se)) return false;
    }
  }
  return true;
}

// Directional difference quotients of the limiting cost at the equilibrium
// control, u = u_bar + delta * v, under common random numbers.
struct StationarityPoint {
  double delta = 0.0;
  Estimate forward;      // (J(u + delta v) - J(u)) / delta
  Estimate central;      // (J(u + delta v) - J(u - delta v)) / (2 delta)
  Estimate second;       // J(u + delta v) + J(u - delta v) - 2 J(u)
};

struct StationarityReport {
  std::vector<StationarityPoint> points;
  std::optional<SlopeFit> order;  // log |forward| against log delta
  std::string degenerate;
};

inline StationarityReport run_stationarity_check(const EquilibriumSimulator& sim, const std::vector<double>& direction,
                                                 const std::vector<double>& deltas, int reps, std::uint64_t seed,
                                                 int threads, bool antithetic = true) {
  const Model& model = sim.model();
  const std::size_t D = deltas.size();
  std::vector<std::vector<double>> costs(static_cast<std::size_t>(reps));
  auto costs_of = [&](const NoiseBundle& noise) {
    std::vector<double> c;
    c.push_back(realized_cost(sim.run(noise), model, CostMode::Limiting, 0));
    for (double d : deltas) {
      for (double s : {d, -d}) {
        c.push_back(realized_cost(sim.run(noise, DeviationSpec::shifted(s, direction)), model, CostMode::Limiting, 0));
      }
    }
    return c;
  };
  parallel_for(reps, threads, [&](int r) {
    const NoiseBundle noise = sim.noise(1, seed, static_cast<std::uint64_t>(r));
    auto& c = costs[static_cast<std::size_t>(r)];
    c = costs_of(noise);
    if (antithetic) {
      const std::vector<double> m = costs_of(mirrored(noise, true));
      for (std::size_t j = 0; j < c.size(); ++j) c[j] = 0.5 * (c[j] + m[j]);
    }
  });
  StationarityReport rep;
  std::vector<double> f(costs.size()), cd(costs.size()), sd(costs.size());
  std::vector<std::pair<double, double>> pts;
  for (std::size_t j = 0; j < D; ++j) {
    const double d = deltas[j];
    for (std::size_t r = 0; r < costs.size(); ++r) {
      const double j0 = costs[r][0];
      const double jp = costs[r][1 + 2 * j];
      const double jm = costs[r][2 + 2 * j];
      f[r] = (jp - j0) / d;
      cd[r] = (jp - jm) / (2.0 * d);
      sd[r] = jp + jm - 2.0 * j0;
    }
    StationarityPoint p{d, summarize(f), summarize(cd), summarize(sd)};
    pts.emplace_back(d, std::abs(p.forward.mean));
    rep.points.push_back(p);
  }
  try {
    rep.order = fit_loglog_slope(pts);
  } catch (const DegenerateData& e) {
    rep.degenerate = e.what();
  }
  return rep;
}

// --- JSON views -------------------------------------------------------------

inline const char* mode_name(InfoMode m) { return m == InfoMode::PartialFiltration ? "pf" : "po"; }

inline nlohmann::json to_json(const SlopeFit& f) {
  return {{"slope", f.slope}, {"half_width", f.half_width}, {"intercept", f.intercept}};
}

inline nlohmann::json to_json(const Estimate& e) { return {{"mean", e.mean}, {"stderr", e.se}}; }

inline nlohmann::json to_json(const StudyResult& r) {
  nlohmann::json j;
  j["mode"] = mode_name(r.mode);
  j["N"] = r.agents;
  j["reps"] = r.reps;
  j["seed"] = r.seed;
  j["deviation"] = r.deviation;
  j["quantities"] = nlohmann::json::array();
  for (const auto& q : r.quantities) {
    nlohmann::json jq;
    jq["name"] = q.name;
    jq["description"] = q.description;
    for (const auto& e : q.per_n) {
      jq["estimates"].push_back(
          {{"N", e.agents}, {"mean", e.mean}, {"stderr", e.se}, {"node", e.node}, {"precise", e.precise}});
    }
    if (q.fit) {
      jq["fit"] = to_json(*q.fit);
    } else {
      jq["fit"] = nullptr;
      jq["degenerate"] = q.degenerate;
    }
    j["quantities"].push_back(jq);
  }
  return j;
}

inline nlohmann::json to_json(const NashGapReport& r) {
  nlohmann::json j;
  j["mode"] = mode_name(r.mode);
  j["reps"] = r.reps;
  j["seed"] = r.seed;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json jr;
    jr["N"] = row.agents;
    jr["equilibrium_cost"] = to_json(row.equilibrium_cost);
    jr["epsilon_raw"] = row.epsilon_raw;
    jr["epsilon"] = row.epsilon;
    jr["epsilon_stderr"] = row.epsilon_se;
    jr["precise"] = row.precise;
    for (const auto& g : row.gaps) {
      jr["deviations"].push_back({{"label", g.label},
                                  {"cost", to_json(g.deviated_cost)},
                                  {"gap", to_json(g.gap)},
                                  {"limiting_gap", to_json(g.limiting_gap)}});
    }
    j["rows"].push_back(jr);
  }
  if (r.epsilon_fit) {
    j["epsilon_fit"] = to_json(*r.epsilon_fit);
  } else {
    j["epsilon_fit"] = nullptr;
    j["degenerate"] = r.degenerate;
  }
  return j;
}

}  // namespace mflqg
