#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "msense/restart.hpp"

using namespace msense;
using Mat = Matrix<double>;

namespace {

const SensingProblem<double>& problem() {
  static const auto prob = make_problem<double>(10, 2, 60, 12);
  return prob;
}

RestartConfig base_config() {
  RestartConfig cfg;
  cfg.eta = 1e-3;
  cfg.K = 600;
  cfg.W = 20;
  cfg.tau = 0.5;
  cfg.r0 = 10;
  cfg.rho0 = 1.0;
  cfg.delta_rank = 3;
  cfg.factor = 0.5;
  cfg.r = 2;
  cfg.seed = 77;
  cfg.log_every = 50;
  return cfg;
}

}  // namespace

TEST(WindowRatio, MaxOfConsecutiveRatios) {
  const std::vector<double> h = {8, 4, 3, 2.7};
  const auto wr = window_ratio(h);
  EXPECT_FALSE(wr.converged);
  EXPECT_DOUBLE_EQ(wr.ratio, 0.9);
}

TEST(WindowRatio, ZeroDenominatorMeansConverged) {
  const std::vector<double> h = {1, 0, 0};
  EXPECT_TRUE(window_ratio(h).converged);
  EXPECT_THROW(window_ratio(std::vector<double>{1.0}), ParameterError);
}

TEST(RunRestart, TauZeroIsPlainGd) {
  const auto& prob = problem();
  auto cfg = base_config();
  cfg.tau = 0;
  const auto res = run_restart(prob.op, prob.instance.b, prob.instance.x_star, 10, cfg);
  const Mat u0 = init_factor<double>(10, 10, cfg.r0, cfg.rho0, cfg.seed);
  const auto gd = run_gd(prob.op, prob.instance.b, prob.instance.x_star, u0, cfg.eta, cfg.K,
                         cfg.log_every);
  EXPECT_TRUE(res.events.empty());
  EXPECT_EQ(res.trajectory.final_U, gd.final_U);
  ASSERT_EQ(res.trajectory.records.size(), gd.records.size());
  for (std::size_t i = 0; i < gd.records.size(); ++i) {
    EXPECT_EQ(res.trajectory.records[i].k, gd.records[i].k);
    EXPECT_EQ(res.trajectory.records[i].train_f, gd.records[i].train_f);
  }
}

TEST(RunRestart, WindowOfOneNeverChecks) {
  const auto& prob = problem();
  auto cfg = base_config();
  cfg.W = 1;
  cfg.tau = 10;  // would restart at every check
  const auto res = run_restart(prob.op, prob.instance.b, prob.instance.x_star, 10, cfg);
  EXPECT_TRUE(res.events.empty());
}

TEST(RunRestart, RankFloorAndNormSchedule) {
  const auto& prob = problem();
  auto cfg = base_config();
  cfg.tau = std::numeric_limits<double>::infinity();  // every check restarts
  const auto res = run_restart(prob.op, prob.instance.b, prob.instance.x_star, 10, cfg);
  // checks at k = W+1, 2W+1, ... < K; the fresh factor sits at k+1
  const long expected = (cfg.K - 1 - (cfg.W + 1)) / cfg.W + 1;
  ASSERT_EQ(static_cast<long>(res.events.size()), expected);
  for (std::size_t i = 0; i < res.events.size(); ++i) {
    const auto& e = res.events[i];
    EXPECT_EQ(e.k, static_cast<long>(i + 1) * cfg.W + 2);
    EXPECT_EQ(e.new_r0, std::max(cfg.r0 - static_cast<int>(i + 1) * cfg.delta_rank, cfg.r));
    EXPECT_NEAR(e.new_rho0, cfg.rho0 * std::pow(cfg.factor, static_cast<double>(i + 1)), 1e-15);
  }
  // the record at each event iteration shows the fresh factor
  std::size_t seen = 0;
  for (const auto& rec : res.trajectory.records) {
    if (rec.event != Event::Restart) continue;
    const auto& e = res.events[seen++];
    EXPECT_EQ(rec.k, e.k);
    EXPECT_NEAR(rec.fro_norm, e.new_rho0, 1e-12 * e.new_rho0);
    EXPECT_EQ(rec.num_rank, e.new_r0);
  }
  EXPECT_EQ(seen, res.events.size());
  EXPECT_EQ(res.trajectory.last().k, cfg.K);
}

TEST(RunRestart, FreshFactorDrawnFromRestartStream) {
  const auto& prob = problem();
  auto cfg = base_config();
  cfg.tau = std::numeric_limits<double>::infinity();
  cfg.K = cfg.W + 2;  // the run ends on the fresh factor
  const auto res = run_restart(prob.op, prob.instance.b, prob.instance.x_star, 10, cfg);
  ASSERT_EQ(res.events.size(), 1u);
  const Mat fresh = init_factor<double>(10, 10, res.events[0].new_r0, res.events[0].new_rho0,
                                        restart_seed(cfg.seed, 0));
  EXPECT_EQ(res.trajectory.final_U, fresh);
}

TEST(RunRestart, Deterministic) {
  const auto& prob = problem();
  const auto cfg = base_config();
  const auto a = run_restart(prob.op, prob.instance.b, prob.instance.x_star, 10, cfg);
  const auto b = run_restart(prob.op, prob.instance.b, prob.instance.x_star, 10, cfg);
  EXPECT_EQ(a.trajectory.final_U, b.trajectory.final_U);
  EXPECT_EQ(a.events.size(), b.events.size());
}

TEST(RunRestart, OverflowIsReportedNotThrown) {
  const auto& prob = problem();
  auto cfg = base_config();
  cfg.rho0 = 1e4;
  const auto res = run_restart(prob.op, prob.instance.b, prob.instance.x_star, 10, cfg);
  EXPECT_TRUE(res.overflowed);
  EXPECT_FALSE(res.trajectory.records.empty());
}

TEST(RestartConfig, Validation) {
  auto cfg = base_config();
  EXPECT_NO_THROW(cfg.validate(10, 10));
  cfg.r = 11;
  EXPECT_THROW(cfg.validate(10, 10), ParameterError);
  cfg = base_config();
  cfg.factor = 1.0;
  EXPECT_THROW(cfg.validate(10, 10), ParameterError);
  cfg = base_config();
  cfg.W = 0;
  EXPECT_THROW(cfg.validate(10, 10), ParameterError);
  cfg = base_config();
  EXPECT_THROW(cfg.validate(10, 8), ParameterError);  // r0 > p
}
