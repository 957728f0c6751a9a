#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "msense/harness/csv.hpp"
#include "msense/harness/experiment.hpp"

using namespace msense;
using namespace msense::harness;
namespace fs = std::filesystem;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.name = "small";
  spec.d = 6;
  spec.p = 6;
  spec.m = 24;
  spec.rank_planted = 2;
  spec.master_seed = 31;
  spec.trials = 3;
  spec.run_kind = RunKind::Gd;
  spec.gd.eta = 2e-3;
  spec.gd.iters = 3000;
  spec.gd.log_every = 100;
  spec.gd.init_ranks = {2, 6};
  spec.gd.init_fro_norm = 0.05;
  return spec;
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("msense_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TrialOutcome synthetic(int trial, std::vector<std::pair<long, double>> points, StopReason stop,
                       bool overflowed = false) {
  TrialOutcome t;
  t.trial = trial;
  t.overflowed = overflowed;
  t.trajectory.stop = stop;
  for (auto [k, v] : points) {
    TrajectoryRecord<double> r;
    r.k = k;
    r.train_f = v;
    r.test_err = 10 * v;
    t.trajectory.records.push_back(r);
  }
  return t;
}

}  // namespace

TEST(Aggregate, SingleTrialHasZeroStd) {
  const auto t = synthetic(0, {{0, 4}, {10, 2}, {20, 1}}, StopReason::Budget);
  const auto curve = aggregate({t});
  ASSERT_EQ(curve.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(curve.rows[i].k, t.trajectory.records[i].k);
    EXPECT_EQ(curve.rows[i].train_mean, t.trajectory.records[i].train_f);
    EXPECT_EQ(curve.rows[i].test_mean, t.trajectory.records[i].test_err);
    EXPECT_EQ(curve.rows[i].train_std, 0.0);
    EXPECT_EQ(curve.rows[i].test_std, 0.0);
  }
}

TEST(Aggregate, PopulationStd) {
  const auto a = synthetic(0, {{0, 1}, {10, 2}}, StopReason::Budget);
  const auto b = synthetic(1, {{0, 3}, {10, 6}}, StopReason::Budget);
  const auto curve = aggregate({a, b});
  EXPECT_DOUBLE_EQ(curve.rows[0].train_mean, 2.0);
  EXPECT_DOUBLE_EQ(curve.rows[0].train_std, 1.0);
  EXPECT_DOUBLE_EQ(curve.rows[1].test_std, 20.0);
}

TEST(Aggregate, ConvergedCarriesOverflowedStops) {
  const auto done = synthetic(0, {{0, 4}, {5, 1e-30}}, StopReason::Converged);
  const auto running = synthetic(1, {{0, 8}, {10, 4}, {20, 2}}, StopReason::Budget);
  const auto blown = synthetic(2, {{0, 6}, {3, 1e200}}, StopReason::Overflow, true);
  const auto curve = aggregate({done, running, blown});
  std::map<long, int> n;
  for (const auto& r : curve.rows) n[r.k] = r.n;
  EXPECT_EQ(n.at(0), 3);
  EXPECT_EQ(n.at(3), 3);
  EXPECT_EQ(n.at(5), 2);  // overflowed trial stops contributing after k = 3
  EXPECT_EQ(n.at(10), 2);
  EXPECT_EQ(n.at(20), 2);
  EXPECT_DOUBLE_EQ(curve.rows.back().train_mean, (1e-30 + 2) / 2);
}

TEST(Aggregate, TrialOrderIrrelevant) {
  const auto a = synthetic(0, {{0, 1}, {10, 2}, {20, 0.5}}, StopReason::Budget);
  const auto b = synthetic(1, {{0, 3}, {10, 6}}, StopReason::Converged);
  const auto c = synthetic(2, {{0, 5}, {10, 7}, {20, 1}}, StopReason::Budget);
  const auto x = aggregate({a, b, c});
  const auto y = aggregate({c, a, b});
  ASSERT_EQ(x.rows.size(), y.rows.size());
  for (std::size_t i = 0; i < x.rows.size(); ++i) {
    EXPECT_NEAR(x.rows[i].train_mean, y.rows[i].train_mean, 1e-15);
    EXPECT_NEAR(x.rows[i].test_std, y.rows[i].test_std, 1e-12);
  }
}

TEST(RunExperiment, AggregateMatchesPerTrialCsvs) {
  const auto result = run_experiment(small_spec());
  const auto dir = temp_dir("agg");
  const auto files = write_experiment(result, dir);
  ASSERT_EQ(files.trial_csvs.size(), 6u);
  ASSERT_EQ(files.aggregate_csvs.size(), 2u);
  EXPECT_TRUE(fs::exists(files.svg));
  for (const auto& series : result.series) {
    std::vector<SeriesData> trials;
    for (int t = 0; t < 3; ++t)
      trials.push_back(read_series_csv(dir / ("small_" + series.label + "_trial" +
                                              std::to_string(t) + ".csv")));
    const auto agg = read_series_csv(dir / ("small_" + series.label + "_agg.csv"));
    for (std::size_t row = 0; row < agg.iter.size(); ++row) {
      const long k = agg.iter[row];
      std::vector<double> vals;
      for (std::size_t t = 0; t < trials.size(); ++t) {
        const auto& tr = trials[t];
        const bool converged =
            result.series[&series - &result.series[0]].trials[t].trajectory.stop ==
            StopReason::Converged;
        if (tr.iter.front() > k || (k > tr.iter.back() && !converged)) continue;
        std::size_t j = 0;
        while (j + 1 < tr.iter.size() && tr.iter[j + 1] <= k) ++j;
        vals.push_back(tr.test_mean[j]);
      }
      double mean = 0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double var = 0;
      for (double v : vals) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(vals.size()));
      EXPECT_NEAR(agg.test_mean[row], mean, 1e-12 * (1 + std::abs(mean)));
      EXPECT_NEAR(agg.test_std[row], sd, 1e-12 * (1 + sd));
    }
  }
}

TEST(RunExperiment, ByteIdenticalReruns) {
  const auto spec = small_spec();
  const auto d1 = temp_dir("rerun1");
  const auto d2 = temp_dir("rerun2");
  const auto f1 = write_experiment(run_experiment(spec), d1);
  const auto f2 = write_experiment(run_experiment(spec), d2);
  for (std::size_t i = 0; i < f1.trial_csvs.size(); ++i)
    EXPECT_EQ(slurp(f1.trial_csvs[i]), slurp(f2.trial_csvs[i]));
  for (std::size_t i = 0; i < f1.aggregate_csvs.size(); ++i)
    EXPECT_EQ(slurp(f1.aggregate_csvs[i]), slurp(f2.aggregate_csvs[i]));
  EXPECT_EQ(slurp(f1.svg), slurp(f2.svg));
}

TEST(RunExperiment, TrialsUseDistinctSeeds) {
  const auto result = run_experiment(small_spec());
  const auto& s = result.series[0];
  EXPECT_NE(s.trials[0].seed, s.trials[1].seed);
  EXPECT_NE(s.trials[0].trajectory.records[0].test_err, s.trials[1].trajectory.records[0].test_err);
  // both series share the instance but not the start
  EXPECT_EQ(result.series[0].trials[0].seed, result.series[1].trials[0].seed);
}

TEST(RunExperiment, RestartAndGdShareStart) {
  auto spec = small_spec();
  spec.run_kind = RunKind::Restart;
  spec.trials = 2;
  spec.restart.eta = 1e-3;
  spec.restart.K = 800;
  spec.restart.W = 50;
  spec.restart.tau = 0.99;
  spec.restart.r0 = 6;
  spec.restart.rho0 = 1.0;
  spec.restart.delta_rank = 2;
  spec.restart.factor = 0.5;
  spec.restart.r = 2;
  spec.restart.log_every = 50;
  const auto result = run_experiment(spec);
  const auto* restart = result.find("restart");
  const auto* gd = result.find("gd");
  ASSERT_NE(restart, nullptr);
  ASSERT_NE(gd, nullptr);
  for (int t = 0; t < 2; ++t) {
    const auto& a = restart->trials[t].trajectory.records.front();
    const auto& b = gd->trials[t].trajectory.records.front();
    EXPECT_EQ(a.train_f, b.train_f);
    EXPECT_EQ(a.test_err, b.test_err);
  }
}

TEST(RunExperiment, OverflowIsRecorded) {
  auto spec = small_spec();
  spec.gd.init_fro_norm = 1e4;
  spec.gd.init_ranks = {2};
  const auto result = run_experiment(spec);
  EXPECT_TRUE(result.all_overflowed());
  for (const auto& t : result.series[0].trials) EXPECT_FALSE(t.trajectory.records.empty());
}
