#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "fixtures.hpp"
#include "mflqg/harness.hpp"

using namespace mflqg;
using namespace mflqg::testing;

TEST(SlopeFit, ExactPowerLaw) {
  const SlopeFit f = fit_loglog_slope({{10, 1}, {100, 0.1}, {1000, 0.01}});
  EXPECT_NEAR(f.slope, -1.0, 1e-14);
  EXPECT_NEAR(f.half_width, 0.0, 1e-12);
}

TEST(SlopeFit, HalfPowerLaw) {
  EXPECT_NEAR(fit_loglog_slope({{10, 1}, {100, 0.316228}, {1000, 0.1}}).slope, -0.5, 1e-6);
}

TEST(SlopeFit, Degenerate) {
  EXPECT_THROW(fit_loglog_slope({{10, 1}, {100, 0.0}, {1000, 0.01}}), DegenerateData);
  EXPECT_THROW(fit_loglog_slope({{10, 1}, {100, -0.1}, {1000, 0.01}}), DegenerateData);
  EXPECT_THROW(fit_loglog_slope({{10, 1}, {100, 0.1}}), DegenerateData);
  EXPECT_THROW(fit_loglog_slope({{10, 1}, {10, 0.1}, {10, 0.01}}), DegenerateData);
}

TEST(SlopeFit, NoisyHalfWidth) {
  const SlopeFit f = fit_loglog_slope({{16, 1.1}, {64, 0.24}, {256, 0.07}, {1024, 0.015}});
  EXPECT_GT(f.half_width, 0.0);
  EXPECT_LT(std::abs(f.slope + 1.0), f.half_width + 0.1);
}

TEST(Stats, SupPicksLargestMeanNode) {
  const SupEstimate e = sup_over_nodes({{0.0, 1.0, 3.0}, {0.0, 2.0, 1.0}});
  EXPECT_EQ(e.node, 2);
  EXPECT_DOUBLE_EQ(e.mean, 2.0);
  EXPECT_DOUBLE_EQ(e.se, 1.0);
}

TEST(Stats, Summarize) {
  const std::vector<double> v{1, 2, 3, 4};
  const Estimate e = summarize(v);
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_NEAR(e.se, std::sqrt((1.25 * 4 + 0.0) / 3.0 / 4.0), 1e-15);
}

TEST(Parallel, LowestFailureWins) {
  try {
    parallel_for(50, 4, [](int i) {
      if (i == 7 || i == 31) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "7");
  }
}

TEST(Parallel, ThreadResolution) {
  EXPECT_EQ(resolve_threads(3), 3);
  setenv("MFLQG_THREADS", "5", 1);
  EXPECT_EQ(resolve_threads(), 5);
  EXPECT_EQ(resolve_threads(2), 2);
  unsetenv("MFLQG_THREADS");
  EXPECT_GE(resolve_threads(), 1);
}

TEST(ConvergenceStudy, DeterministicSymmetricSystemIsDegenerate) {
  StudyOptions opt;
  opt.agents = {4, 8, 16};
  opt.reps = 5;
  opt.deviation = DeviationSpec::scaled(1.0);
  const StudyResult r = run_convergence_study(build_model(zero_spec(InfoMode::PartialFiltration)), opt);
  for (const auto& q : r.quantities) {
    for (const auto& e : q.per_n) EXPECT_NEAR(e.mean, 0.0, 1e-24) << q.name;
    EXPECT_FALSE(q.fit.has_value()) << q.name;
    EXPECT_FALSE(q.degenerate.empty());
  }
}

TEST(ConvergenceStudy, InsufficientReplications) {
  StudyOptions opt;
  opt.agents = {4, 8, 16};
  opt.reps = 2;
  opt.antithetic = false;
  EXPECT_THROW(run_convergence_study(build_model(pf_spec(20)), opt), InsufficientReplications);
  opt.enforce_precision = false;
  EXPECT_NO_THROW(run_convergence_study(build_model(pf_spec(20)), opt));
}

TEST(ConvergenceStudy, IdenticalUnderAnyThreadCount) {
  StudyOptions opt;
  opt.agents = {4, 8, 16};
  opt.reps = 12;
  opt.enforce_precision = false;
  const EquilibriumSimulator sim(build_model(po_spec(30)));
  opt.threads = 1;
  const std::string a = to_json(run_convergence_study(sim, opt)).dump();
  opt.threads = 4;
  const std::string b = to_json(run_convergence_study(sim, opt)).dump();
  EXPECT_EQ(a, b);
}

TEST(NashStudy, NoDeviationMeansNoGap) {
  NashOptions opt;
  opt.agents = {4, 8, 16};
  opt.reps = 10;
  opt.family = {DeviationSpec::scaled(1.0), DeviationSpec::shifted(0.0)};
  const NashGapReport r = run_nash_gap_study(build_model(pf_spec(30)), opt);
  for (const auto& row : r.rows) {
    for (const auto& g : row.gaps) {
      EXPECT_EQ(g.gap.mean, 0.0);
      EXPECT_EQ(g.gap.se, 0.0);
    }
    EXPECT_EQ(row.epsilon, 0.0);
  }
  EXPECT_FALSE(r.epsilon_fit.has_value());
}

TEST(NashStudy, ZeroControlIsWorseAndMatchesLimit) {
  for (InfoMode mode : {InfoMode::PartialFiltration, InfoMode::PartialObservation}) {
    NashOptions opt;
    opt.agents = {256};
    opt.reps = 200;
    opt.family = {DeviationSpec::zero_control()};
    opt.enforce_precision = false;
    const Model model = build_model(mode == InfoMode::PartialFiltration ? pf_spec(50) : po_spec(50));
    const NashGapReport r = run_nash_gap_study(model, opt);
    const DeviationGap& g = r.rows[0].gaps[0];
    EXPECT_LT(g.gap.mean + 3.0 * g.gap.se, 0.0);
    EXPECT_LT(std::abs(g.gap.mean - g.limiting_gap.mean), 3.0 * std::hypot(g.gap.se, g.limiting_gap.se) + 0.02 * std::abs(g.gap.mean));
  }
}

TEST(NashStudy, ScaledGapsPeakAtEquilibrium) {
  NashOptions opt;
  opt.agents = {64};
  opt.reps = 100;
  opt.family = {DeviationSpec::scaled(0.0), DeviationSpec::scaled(0.5), DeviationSpec::scaled(0.9),
                DeviationSpec::scaled(1.0), DeviationSpec::scaled(1.1), DeviationSpec::scaled(1.5)};
  opt.enforce_precision = false;
  const NashGapReport r = run_nash_gap_study(build_model(pf_spec(50, 0.5)), opt);
  const auto& g = r.rows[0].gaps;
  for (std::size_t j = 0; j + 1 < g.size(); ++j) {
    const double slack = 2.0 * std::hypot(g[j].gap.se, g[j + 1].gap.se);
    if (j < 3) {
      EXPECT_LT(g[j].gap.mean, g[j + 1].gap.mean + slack) << g[j].label;
    } else {
      EXPECT_GT(g[j].gap.mean + slack, g[j + 1].gap.mean) << g[j].label;
    }
  }
}

TEST(NashStudy, EpsilonBoundsEveryGap) {
  NashOptions opt;
  opt.agents = {8, 16, 32};
  opt.reps = 20;
  opt.enforce_precision = false;
  const NashGapReport r = run_nash_gap_study(build_model(pf_spec(30)), opt);
  EXPECT_TRUE(gaps_within_epsilon(r));
  for (const auto& row : r.rows) {
    EXPECT_GE(row.epsilon, 0.0);
    EXPECT_EQ(row.gaps.size(), default_deviation_family().size());
  }
  const auto j = to_json(r);
  EXPECT_EQ(j["rows"].size(), 3u);
  EXPECT_EQ(j["rows"][0]["deviations"].size(), 9u);
}

TEST(NashStudy, IdenticalUnderAnyThreadCount) {
  NashOptions opt;
  opt.agents = {4, 8, 16};
  opt.reps = 8;
  opt.enforce_precision = false;
  const EquilibriumSimulator sim(build_model(pf_spec(30)));
  opt.threads = 1;
  const std::string a = to_json(run_nash_gap_study(sim, opt)).dump();
  opt.threads = 3;
  EXPECT_EQ(a, to_json(run_nash_gap_study(sim, opt)).dump());
}

TEST(Stationarity, ConvexAndShrinking) {
  const Model model = build_model(pf_spec(200, 0.5));
  const EquilibriumSimulator sim(model);
  std::vector<double> v;
  for (int k = 0; k <= 200; ++k) v.push_back(std::cos(M_PI * model.grid.time(k)));
  const StationarityReport r = run_stationarity_check(sim, v, {0.1, 0.05, 0.025}, 8, 3, 1);
  ASSERT_EQ(r.points.size(), 3u);
  for (const auto& p : r.points) EXPECT_GT(p.second.mean, 0.0);
  EXPECT_LT(std::abs(r.points[2].forward.mean), std::abs(r.points[0].forward.mean));
  // The centred quotient carries only the O(h) time-discretization gradient.
  for (const auto& p : r.points) EXPECT_LT(std::abs(p.central.mean), 0.05);
  ASSERT_TRUE(r.order.has_value());
  EXPECT_GT(r.order->slope, 0.5);
}

TEST(SlopeWindow, TightensWithReplications) {
  const SlopeWindow w = slope_window(-1.0, 0.35, 400);
  EXPECT_DOUBLE_EQ(w.lo, -1.35);
  EXPECT_DOUBLE_EQ(w.hi, -0.65);
  EXPECT_TRUE(w.contains(-1.0));
  EXPECT_FALSE(w.contains(-0.5));
  const SlopeWindow t = slope_window(-0.5, 0.3, 4000);
  EXPECT_LT(t.hi - t.lo, 0.6);
  EXPECT_GE(t.hi - t.lo, 0.3 - 1e-12);
}
