#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mflqg/config.hpp"
#include "mflqg/model.hpp"

using namespace mflqg;

namespace {

ModelSpec flat_spec() {
  ModelSpec s;
  s.horizon = 1.0;
  s.steps = 1000;
  s.alpha = 0.0;
  s.G = 0.0;
  s.x = 1.0;
  s.set("A", 0.0).set("B", 1.0).set("R", 1.0).set("Q", 1.0).set("sigma", 0.1).set("sigma_tilde", 0.1).set("m", 0.0);
  return s;
}

}  // namespace

TEST(TimeGrid, UniformNodes) {
  TimeGrid g(2.0, 8);
  EXPECT_EQ(g.nodes(), 9);
  EXPECT_DOUBLE_EQ(g.step(), 0.25);
  for (int k = 0; k < g.steps(); ++k) EXPECT_LT(g.time(k), g.time(k + 1));
  EXPECT_DOUBLE_EQ(g.time(8), 2.0);
}

TEST(TimeGrid, RejectsTooFewSteps) { EXPECT_THROW(TimeGrid(1.0, 1), AssumptionViolation); }

TEST(BuildModel, ConstantTableIsValid) {
  const Model m = build_model(flat_spec());
  EXPECT_EQ(m.grid.steps(), 1000);
  EXPECT_DOUBLE_EQ(m.coef.at(Coef::Q, 500), 1.0);
  EXPECT_FALSE(m.coef.has(Coef::H));
}

TEST(BuildModel, ZeroRAtOneNode) {
  ModelSpec s = flat_spec();
  s.steps = 4;
  s.set("R", std::vector<double>{1.0, 1.0, 0.0, 1.0, 1.0});
  try {
    build_model(s);
    FAIL() << "expected AssumptionViolation";
  } catch (const AssumptionViolation& e) {
    EXPECT_EQ(e.condition(), "R>0");
    EXPECT_EQ(e.node(), 2);
    EXPECT_EQ(e.kind(), "AssumptionViolation");
  }
}

TEST(BuildModel, NegativeQ) {
  ModelSpec s = flat_spec();
  s.set("Q", -0.1);
  EXPECT_THROW(build_model(s), AssumptionViolation);
}

TEST(BuildModel, ObservationModeNeedsH) {
  ModelSpec s = flat_spec();
  s.population.mode = InfoMode::PartialObservation;
  s.set("H_tilde", 0.0).set("h", 0.0);
  try {
    build_model(s);
    FAIL() << "expected MissingCoefficient";
  } catch (const MissingCoefficient& e) {
    EXPECT_EQ(e.name(), "H");
  }
}

TEST(BuildModel, MissingScalar) {
  ModelSpec s = flat_spec();
  s.alpha.reset();
  EXPECT_THROW(build_model(s), MissingCoefficient);
}

TEST(EvalCoefficient, ConstantSample) {
  ModelSpec s = flat_spec();
  s.set("A", 2.0);
  const Model m = build_model(s);
  for (double t : {0.0, 0.123, 0.5, 1.0}) EXPECT_DOUBLE_EQ(eval_coefficient(m.coef, Coef::A, t), 2.0);
}

TEST(EvalCoefficient, LinearMidpoint) {
  ModelSpec s = flat_spec();
  s.set("A", std::vector<double>{0.0, 1.0});
  const Model m = build_model(s);
  EXPECT_NEAR(eval_coefficient(m.coef, Coef::A, 0.5), 0.5, 1e-15);
  EXPECT_NEAR(eval_coefficient(m.coef, Coef::A, 0.2501), 0.2501, 1e-14);
}

TEST(EvalCoefficient, OutsideHorizon) {
  const Model m = build_model(flat_spec());
  EXPECT_THROW(eval_coefficient(m.coef, Coef::A, -0.1), OutOfDomain);
  EXPECT_THROW(eval_coefficient(m.coef, Coef::A, 1.1), OutOfDomain);
}

TEST(EvalCoefficient, ExactAtNodes) {
  ModelSpec s = flat_spec();
  s.steps = 10;
  s.set("m", std::vector<double>{0.0, 3.0, -1.0});
  const Model m = build_model(s);
  for (int k = 0; k <= 10; ++k) EXPECT_DOUBLE_EQ(m.coef(Coef::m, m.grid.time(k)), m.coef.at(Coef::m, k));
}

TEST(Config, ParsesSampledCoefficients) {
  const auto spec = parse_model_spec(R"({
    // comment
    "mode": "po", "T": 2.0, "M": 40, "x": 1, "alpha": 0.5, "G": 0.25,
    "A": 0.2, "B": 1, "m": [0, 1], "sigma": 0.5, "sigma_tilde": 0.3, "Q": 1, "R": 1,
    "H": 1, "H_tilde": 0.5, "h": 0, "N": 8, "reps": 3, "seed": 42, "po_common_noise_feed": "gain"
  })");
  const Model m = build_model(spec);
  EXPECT_EQ(m.population.mode, InfoMode::PartialObservation);
  EXPECT_EQ(m.population.feed, CommonNoiseFeed::FilterGain);
  EXPECT_EQ(m.population.agents, 8);
  EXPECT_EQ(m.population.seed, 42u);
  EXPECT_DOUBLE_EQ(m.grid.horizon(), 2.0);
  EXPECT_NEAR(m.coef(Coef::m, 1.0), 0.5, 1e-15);
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_THROW(parse_model_spec(R"({"A": 1, "bogus": 2})"), ConfigError);
  EXPECT_THROW(parse_model_spec("not json"), ConfigError);
  EXPECT_THROW(parse_model_spec(R"({"mode": "mixed"})"), ConfigError);
}
