#include <gtest/gtest.h>

#include "msense/dynamics.hpp"

using namespace msense;
using Mat = Matrix<double>;

namespace {

const SensingProblem<double>& small_problem() {
  static const auto prob = make_problem<double>(8, 2, 24, 17);
  return prob;
}

}  // namespace

TEST(InitFactor, RankNormAndDeterminism) {
  const Mat u = init_factor<double>(10, 6, 3, 2.5, 4);
  EXPECT_EQ(u.rows(), 10);
  EXPECT_EQ(u.cols(), 6);
  EXPECT_NEAR(u.norm(), 2.5, 1e-12);
  EXPECT_EQ(numerical_rank(u), 3);
  EXPECT_EQ(u, init_factor<double>(10, 6, 3, 2.5, 4));
  EXPECT_THROW(init_factor<double>(10, 6, 7, 1.0, 4), ParameterError);
  EXPECT_THROW(init_factor<double>(10, 6, 2, 0.0, 4), ParameterError);
}

TEST(GdStep, MatchesUpdateRule) {
  const auto& prob = small_problem();
  const Mat u = init_factor<double>(8, 8, 4, 0.5, 1);
  const auto next = gd_step<double>({u, 3}, prob.op, prob.instance.b, 1e-3);
  const Mat expect = u - 1e-3 * 4 * adjoint(prob.op, residuals(prob.op, prob.instance.b, u).raw) * u;
  EXPECT_EQ(next.k, 4);
  EXPECT_LT((next.U - expect).norm(), 1e-14);
}

TEST(RunGd, LoggingGrid) {
  const auto& prob = small_problem();
  const Mat u0 = init_factor<double>(8, 8, 8, 0.1, 2);
  const auto traj = run_gd(prob.op, prob.instance.b, prob.instance.x_star, u0, 1e-4, 250, 100);
  ASSERT_EQ(traj.records.size(), 4u);
  EXPECT_EQ(traj.records[0].k, 0);
  EXPECT_EQ(traj.records[1].k, 100);
  EXPECT_EQ(traj.records[2].k, 200);
  EXPECT_EQ(traj.records[3].k, 250);
  EXPECT_EQ(traj.stop, StopReason::Budget);
  EXPECT_NEAR(traj.records[0].fro_norm, 0.1, 1e-12);
  EXPECT_NEAR(traj.records[0].test_err, test_error(u0, prob.instance.x_star), 1e-14);
}

TEST(RunGd, ReplaysGdStep) {
  const auto& prob = small_problem();
  const Mat u0 = init_factor<double>(8, 8, 8, 0.1, 2);
  FactorState<double> s{u0, 0};
  for (int k = 0; k < 37; ++k) s = gd_step(s, prob.op, prob.instance.b, 1e-3);
  const auto traj = run_gd(prob.op, prob.instance.b, prob.instance.x_star, u0, 1e-3, 37, 10);
  EXPECT_EQ(traj.final_U, s.U);
}

TEST(RunGd, StopsWhenConverged) {
  const auto& prob = small_problem();
  const Mat u0 = init_factor<double>(8, 2, 2, 0.5, 3);
  const auto traj =
      run_gd(prob.op, prob.instance.b, prob.instance.x_star, u0, 2e-3, 200000, 1000);
  EXPECT_EQ(traj.stop, StopReason::Converged);
  EXPECT_LT(traj.last().k, 200000);
  EXPECT_LT(traj.last().train_f, convergence_threshold(prob.instance.b));
}

TEST(RunGd, OverflowKeepsFinitePrefix) {
  const auto& prob = small_problem();
  const Mat u0 = init_factor<double>(8, 8, 8, 1e3, 2);
  try {
    run_gd(prob.op, prob.instance.b, prob.instance.x_star, u0, 1e-4, 1000, 100);
    FAIL() << "expected overflow";
  } catch (const NumericalOverflow<double>& e) {
    const auto& partial = e.partial();
    ASSERT_FALSE(partial.records.empty());
    EXPECT_EQ(partial.stop, StopReason::Overflow);
    for (const auto& rec : partial.records) EXPECT_TRUE(std::isfinite(rec.test_err));
    EXPECT_EQ(partial.records.back().k, e.last_finite().k);
    EXPECT_TRUE(e.last_finite().U.allFinite());
  }
}

TEST(RunGd, RankNeverGrows) {
  const auto& prob = small_problem();
  for (int r0 : {2, 3, 5}) {
    const Mat u0 = init_factor<double>(8, 8, r0, 0.2, static_cast<Seed>(r0));
    const auto traj = run_gd(prob.op, prob.instance.b, prob.instance.x_star, u0, 1e-3, 3000, 25);
    for (const auto& rec : traj.records) EXPECT_LE(rec.num_rank, r0) << "k=" << rec.k;
  }
}

TEST(RunGd, Validation) {
  const auto& prob = small_problem();
  const Mat u0 = init_factor<double>(8, 2, 2, 0.5, 3);
  EXPECT_THROW(run_gd(prob.op, prob.instance.b, prob.instance.x_star, u0, -1.0, 10), ParameterError);
  EXPECT_THROW(run_gd(prob.op, prob.instance.b, prob.instance.x_star, u0, 1e-3, 0), ParameterError);
  EXPECT_THROW(run_gd(prob.op, prob.instance.b, prob.instance.x_star, Mat(Mat::Zero(7, 2)), 1e-3, 5),
               ShapeError);
}

TEST(Rk4, FourthOrderRichardson) {
  const auto prob = make_problem<double>(6, 2, 15, 8);
  Mat u0 = init_factor<double>(6, 3, 3, 0.5, 1);
  auto solve = [&](double dt) {
    Mat u = u0;
    for (long s = 0; s < std::lround(0.4 / dt); ++s) u = rk4_step(prob.op, prob.instance.b, u, dt);
    return u;
  };
  const Mat ref = solve(0.02 / 64);
  const double ratio = (solve(0.02) - ref).norm() / (solve(0.01) - ref).norm();
  EXPECT_GT(ratio, 12.0);
  EXPECT_LT(ratio, 20.0);
}

TEST(Rk4, EulerConvergesToFlow) {
  // GD on f with step eta follows the flow on G = f / 8 at time 8 * eta per step.
  const auto prob = make_problem<double>(6, 2, 15, 8);
  const Mat u0 = init_factor<double>(6, 3, 3, 0.5, 1);
  const double t_end = 0.2;
  Mat flow = u0;
  for (int s = 0; s < 400; ++s) flow = rk4_step(prob.op, prob.instance.b, flow, t_end / 400);
  auto euler = [&](long steps) {
    const double eta = t_end / steps / 8;
    return run_gd(prob.op, prob.instance.b, prob.instance.x_star, u0, eta, steps, steps).final_U;
  };
  const double e1 = (euler(500) - flow).norm();
  const double e2 = (euler(1000) - flow).norm();
  EXPECT_LT(e2, 1e-3);
  EXPECT_NEAR(e1 / e2, 2.0, 0.2);
}

TEST(IntegrateFlow, LogsAndMatchesSteps) {
  const auto& prob = small_problem();
  const Mat u0 = init_factor<double>(8, 4, 4, 0.3, 5);
  const auto traj =
      integrate_flow_rk4(prob.op, prob.instance.b, prob.instance.x_star, u0, 1e-3, 30, 10);
  Mat u = u0;
  for (int s = 0; s < 30; ++s) u = rk4_step(prob.op, prob.instance.b, u, 1e-3);
  EXPECT_EQ(traj.final_U, u);
  ASSERT_EQ(traj.records.size(), 4u);
  EXPECT_EQ(traj.last().k, 30);
}

TEST(SvOde, PredictedRatesMatchFiniteDifference) {
  const auto& prob = small_problem();
  CounterRng rng(4, "sv");
  int checked = 0;
  for (int t = 0; t < 5; ++t) {
    const Mat u = gaussian_matrix<double>(rng, 8, 3) * 0.2;
    for (const auto& e : sv_ode_check(prob.op, prob.instance.b, u, 1e-7)) {
      if (e.skipped) continue;
      EXPECT_NEAR(e.predicted, e.finite_diff, 1e-3 * (1 + std::abs(e.predicted)));
      ++checked;
    }
  }
  EXPECT_GE(checked, 15);
}

TEST(SvOde, ZeroEigenvaluesHaveZeroRate) {
  const auto& prob = small_problem();
  const Mat u = init_factor<double>(8, 3, 3, 0.5, 6);
  const auto rates = sv_ode_check(prob.op, prob.instance.b, u, 1e-7);
  for (int i = 3; i < 8; ++i) EXPECT_NEAR(rates[i].predicted, 0.0, 1e-12);
}

TEST(RunGd, FloatInstantiation) {
  const auto prob = make_problem<float>(6, 2, 20, 3);
  const Matrix<float> u0 = init_factor<float>(6, 2, 2, 0.5f, 1);
  const auto traj = run_gd(prob.op, prob.instance.b, prob.instance.x_star, u0, 1e-3f, 2000, 500);
  EXPECT_LT(traj.last().train_f, traj.records.front().train_f);
}
