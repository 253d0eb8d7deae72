#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "mflqg/odes.hpp"

using namespace mflqg;
using mflqg::testing::observed_order;

namespace {

double max_error(const ScalarPath& v, double (*exact)(double)) {
  double e = 0.0;
  for (int k = 0; k < v.grid().nodes(); ++k) e = std::max(e, std::abs(v[k] - exact(v.grid().time(k))));
  return e;
}

// v' = v^2, v(T) = 1 on [0, 1]: v = 1 / (2 - t).
ScalarPath bernoulli(int M) {
  return solve_terminal_scalar_riccati(TimeGrid(1.0, M), constant(0.0), constant(-1.0), constant(0.0), 1.0);
}

}  // namespace

TEST(TerminalRiccati, BernoulliClosedForm) {
  const ScalarPath v = bernoulli(1000);
  EXPECT_NEAR(v[0], 0.5, 1e-8);
  EXPECT_LT(max_error(v, [](double t) { return 1.0 / (2.0 - t); }), 1e-8);
}

TEST(TerminalRiccati, TanhClosedForm) {
  // P' = P^2 - 1, P(T) = 0, i.e. a = 0, b = -1, c = +1 in v' + a v + b v^2 + c = 0.
  const ScalarPath v =
      solve_terminal_scalar_riccati(TimeGrid(1.0, 1000), constant(0.0), constant(-1.0), constant(1.0), 0.0);
  EXPECT_NEAR(v[0], std::tanh(1.0), 1e-8);
  EXPECT_NEAR(v[0], 0.761594, 1e-6);
  EXPECT_LT(max_error(v, [](double t) { return std::tanh(1.0 - t); }), 1e-8);
}

TEST(TerminalRiccati, ZeroIsFixed) {
  const ScalarPath v =
      solve_terminal_scalar_riccati(TimeGrid(1.0, 50), constant(0.7), constant(-1.0), constant(0.0), 0.0);
  for (double x : v.values()) EXPECT_EQ(x, 0.0);
}

TEST(TerminalRiccati, ReportsBlowUp) {
  // v' = -v^2 from v(T) = 1 backward explodes at t = T - 1.
  try {
    solve_terminal_scalar_riccati(TimeGrid(2.0, 200), constant(0.0), constant(1.0), constant(0.0), 1.0,
                                  SolverOptions{.blowup_bound = 1e6, .equation = "test"});
    FAIL() << "expected RiccatiBlowUp";
  } catch (const RiccatiBlowUp& e) {
    EXPECT_EQ(e.equation(), "test");
    EXPECT_LT(e.time(), 1.05);
  }
}

TEST(TerminalRiccati, FourthOrder) {
  auto err = [](int M) {
    const ScalarPath v =
        solve_terminal_scalar_riccati(TimeGrid(1.0, M), constant(0.0), constant(-1.0), constant(0.0), 1.9);
    double e = 0.0;
    for (int k = 0; k <= M; ++k) {
      const double t = v.grid().time(k);
      e = std::max(e, std::abs(v[k] - 1.0 / (1.0 / 1.9 + 1.0 - t)));
    }
    return e;
  };
  EXPECT_GE(observed_order(err(16), err(32)), 3.8);
  EXPECT_GE(observed_order(err(32), err(64)), 3.8);
}

TEST(TerminalLinear, ZeroSource) {
  const ScalarPath v = solve_terminal_linear(TimeGrid(1.0, 20), constant(1.3), constant(0.0), 0.0);
  for (double x : v.values()) EXPECT_EQ(x, 0.0);
}

TEST(TerminalLinear, PureIntegration) {
  const ScalarPath v = solve_terminal_linear(TimeGrid(1.0, 1000), constant(0.0), constant(1.0), 0.0);
  EXPECT_NEAR(v[0], 1.0, 1e-10);
  EXPECT_NEAR(v[500], 0.5, 1e-10);
}

TEST(TerminalLinear, Exponential) {
  const ScalarPath v = solve_terminal_linear(TimeGrid(1.0, 1000), constant(1.0), constant(0.0), 2.0);
  EXPECT_NEAR(v[0], 2.0 * std::exp(1.0), 1e-8);
}

TEST(ForwardRiccati, TanhClosedForm) {
  const ScalarPath v =
      solve_forward_scalar_riccati(TimeGrid(1.0, 1000), constant(0.0), constant(-1.0), constant(1.0), 0.0);
  EXPECT_NEAR(v[1000], 0.761594, 1e-6);
  EXPECT_LT(max_error(v, [](double t) { return std::tanh(t); }), 1e-8);
}

TEST(ForwardRiccati, ZeroSource) {
  const ScalarPath v = solve_forward_scalar_riccati(TimeGrid(1.0, 30), constant(0.4), constant(-1.0), constant(0.0), 0.0);
  for (double x : v.values()) EXPECT_EQ(x, 0.0);
}

TEST(ForwardRiccati, LinearCaseMatchesQuadrature) {
  // v' = 2a v + c, v(0) = 0: v(t) = integral_0^t exp(2a(t - s)) c ds, by composite Simpson.
  const double a = 0.3, c = 0.34;
  const ScalarPath v = solve_forward_scalar_riccati(TimeGrid(1.0, 1000), constant(2.0 * a), constant(0.0), constant(c), 0.0);
  for (int k : {100, 450, 1000}) {
    const double t = v.grid().time(k);
    const int n = 2000;
    const double dh = t / n;
    double s = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double w = (j == 0 || j == n) ? 1.0 : (j % 2 ? 4.0 : 2.0);
      s += w * std::exp(2.0 * a * (t - j * dh)) * c;
    }
    EXPECT_NEAR(v[k], s * dh / 3.0, 1e-8);
  }
}

TEST(GridPath, HermiteMatchesCubic) {
  // A cubic is reproduced exactly by Hermite interpolation.
  const TimeGrid g(1.0, 4);
  auto p = [](double t) { return 1.0 + t - 2.0 * t * t + 0.5 * t * t * t; };
  auto dp = [](double t) { return 1.0 - 4.0 * t + 1.5 * t * t; };
  std::vector<double> v, s;
  for (int k = 0; k < g.nodes(); ++k) {
    v.push_back(p(g.time(k)));
    s.push_back(dp(g.time(k)));
  }
  const ScalarPath path(g, v, s);
  for (double t : {0.0, 0.1, 0.37, 0.5, 0.99, 1.0}) EXPECT_NEAR(path.at(t), p(t), 1e-14);
  const ScalarPath lin(g, v);
  EXPECT_NEAR(lin.at(0.125), 0.5 * (v[0] + v[1]), 1e-15);
}

TEST(CoupledSystem, ZeroData) {
  auto rhs = [](double, const Eigen::Matrix3d& pi, const Eigen::Vector3d& g) {
    return MatrixVectorRate{-(pi + pi.transpose() - pi * pi), -(pi * g)};
  };
  const auto s = solve_coupled_matrix_system(TimeGrid(1.0, 40), rhs, Eigen::Matrix3d::Zero(), Eigen::Vector3d::Zero());
  for (int k = 0; k <= 40; ++k) {
    EXPECT_EQ(s.pi[k].norm(), 0.0);
    EXPECT_EQ(s.gamma[k].norm(), 0.0);
  }
}

TEST(CoupledSystem, DiagonalReducesToScalarRiccati) {
  // pi' + pi A + A' pi - pi^2 + Q = 0 with diagonal A, Q and terminal: each
  // diagonal entry solves v' + 2a v - v^2 + q = 0.
  const Eigen::Vector3d a(0.2, -0.4, 0.0), q(1.0, 0.5, 2.0), term(0.5, 0.0, 1.0);
  auto rhs = [&](double, const Eigen::Matrix3d& pi, const Eigen::Vector3d& g) {
    const Eigen::Matrix3d A = a.asDiagonal();
    const Eigen::Matrix3d Q = q.asDiagonal();
    return MatrixVectorRate{-(pi * A + A.transpose() * pi - pi * pi + Q), -(A.transpose() * g)};
  };
  const TimeGrid grid(1.0, 200);
  const Eigen::Matrix3d T = term.asDiagonal();
  const auto s = solve_coupled_matrix_system(grid, rhs, T, Eigen::Vector3d::Zero());
  for (int d = 0; d < 3; ++d) {
    const ScalarPath v = solve_terminal_scalar_riccati(grid, constant(2.0 * a(d)), constant(-1.0), constant(q(d)), term(d));
    for (int k = 0; k <= 200; ++k) EXPECT_NEAR(s.pi[k](d, d), v[k], 1e-10);
  }
}

TEST(CoupledSystem, FourthOrderUnderRefinement) {
  Eigen::Matrix3d A;
  A << 0.2, 0.5, 0.0, 0.0, -0.3, 0.4, 0.1, 0.0, 0.1;
  Eigen::Matrix3d Q = Eigen::Matrix3d::Identity();
  Q(0, 1) = Q(1, 0) = -0.5;
  auto rhs = [&](double t, const Eigen::Matrix3d& pi, const Eigen::Vector3d& g) {
    const Eigen::Vector3d F(std::sin(t), 1.0, t);
    return MatrixVectorRate{-(pi * A + A.transpose() * pi - pi.col(0) * pi.col(0).transpose() + Q),
                            -(A.transpose() * g - pi.col(0) * g(0) + pi * F)};
  };
  Eigen::Matrix3d term = Eigen::Matrix3d::Zero();
  term(0, 0) = 1.0;
  auto pi0 = [&](int M) {
    const auto s = solve_coupled_matrix_system(TimeGrid(2.0, M), rhs, term, Eigen::Vector3d::Zero());
    return std::pair{s.pi[0], s.gamma[0]};
  };
  const auto [p1, g1] = pi0(10);
  const auto [p2, g2] = pi0(20);
  const auto [p3, g3] = pi0(40);
  const auto [pr, gr] = pi0(2560);
  EXPECT_GE(observed_order((p1 - pr).norm(), (p2 - pr).norm()), 3.8);
  EXPECT_GE(observed_order((p2 - pr).norm(), (p3 - pr).norm()), 3.8);
  EXPECT_GE(observed_order((g2 - gr).norm(), (g3 - gr).norm()), 3.8);
  EXPECT_LE((pr - pr.transpose()).cwiseAbs().maxCoeff(), 1e-10);
}
