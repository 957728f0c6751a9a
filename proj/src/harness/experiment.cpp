#include "msense/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <set>

#include "msense/harness/csv.hpp"
#include "msense/harness/plot.hpp"

namespace msense::harness {

Seed instance_seed(Seed master_seed) { return substream_key(master_seed, "instance"); }

Seed trial_seed(Seed master_seed, int trial) {
  return substream_key(master_seed, "trial", static_cast<std::uint64_t>(trial));
}

SensingProblem<double> make_problem(const ExperimentSpec& spec) {
  return msense::make_problem<double>(spec.d, spec.rank_planted, spec.m,
                                      instance_seed(spec.master_seed));
}

AggregateCurve aggregate(const std::vector<TrialOutcome>& trials) {
  AggregateCurve curve;
  std::set<long> grid;
  for (const auto& t : trials)
    for (const auto& rec : t.trajectory.records) grid.insert(rec.k);

  std::vector<std::size_t> cursor(trials.size(), 0);
  std::vector<double> train, test;
  for (long k : grid) {
    train.clear();
    test.clear();
    for (std::size_t i = 0; i < trials.size(); ++i) {
      const auto& recs = trials[i].trajectory.records;
      if (recs.empty() || recs.front().k > k) continue;
      while (cursor[i] + 1 < recs.size() && recs[cursor[i] + 1].k <= k) ++cursor[i];
      const bool past_end = k > recs.back().k;
      const bool carries = trials[i].trajectory.stop == StopReason::Converged &&
                           !trials[i].overflowed;
      if (past_end && !carries) continue;
      train.push_back(recs[cursor[i]].train_f);
      test.push_back(recs[cursor[i]].test_err);
    }
    if (train.empty()) continue;
    auto stats = [](const std::vector<double>& v) {
      double mean = 0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0;
      for (double x : v) var += (x - mean) * (x - mean);
      var /= static_cast<double>(v.size());
      return std::pair{mean, std::sqrt(var)};
    };
    const auto [tr_mean, tr_std] = stats(train);
    const auto [te_mean, te_std] = stats(test);
    curve.rows.push_back({k, tr_mean, tr_std, te_mean, te_std, static_cast<int>(train.size())});
  }
  return curve;
}

const SeriesResult* ExperimentResult::find(const std::string& label) const {
  for (const auto& s : series)
    if (s.label == label) return &s;
  return nullptr;
}

bool ExperimentResult::all_overflowed() const {
  for (const auto& s : series)
    for (const auto& t : s.trials)
      if (!t.overflowed) return false;
  return true;
}

namespace {

using TrialFn = std::function<TrialOutcome(int)>;

std::vector<TrialOutcome> run_trials(int n, const TrialFn& fn) {
  std::vector<std::future<TrialOutcome>> futures;
  futures.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) futures.push_back(std::async(std::launch::async, fn, t));
  std::vector<TrialOutcome> out;
  out.reserve(futures.size());
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

template <typename Run>
TrialOutcome guarded(TrialOutcome base, Run&& run) {
  try {
    base.trajectory = run();
  } catch (NumericalOverflow<double>& e) {
    base.trajectory = std::move(e.partial());
    base.overflowed = true;
  }
  return base;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const SensingProblem<double> problem = make_problem(spec);
  const auto& op = problem.op;
  const auto& inst = problem.instance;

  ExperimentResult result;
  result.spec = spec;
  result.x_star_norm_sq = inst.x_star.squaredNorm();
  result.b_norm_sq = inst.b.squaredNorm();

  auto add_series = [&](std::string label, const TrialFn& fn) {
    SeriesResult s;
    s.label = std::move(label);
    s.trials = run_trials(spec.trials, fn);
    s.aggregate = aggregate(s.trials);
    result.series.push_back(std::move(s));
  };

  if (spec.run_kind == RunKind::Restart) {
    const RestartConfig& rc = spec.restart;
    add_series("restart", [&](int t) {
      RestartConfig cfg = rc;
      cfg.seed = trial_seed(spec.master_seed, t);
      auto res = run_restart(op, inst.b, inst.x_star, spec.p, cfg);
      TrialOutcome out{t, cfg.seed, rc.r0, std::move(res.trajectory), std::move(res.events),
                       res.overflowed};
      return out;
    });
    add_series("gd", [&](int t) {
      const Seed seed = trial_seed(spec.master_seed, t);
      const Matrix<double> u0 = init_factor<double>(spec.d, spec.p, rc.r0, rc.rho0, seed);
      return guarded(TrialOutcome{t, seed, rc.r0, {}, {}, false}, [&] {
        return run_gd(op, inst.b, inst.x_star, u0, rc.eta, rc.K, rc.log_every, seed);
      });
    });
    return result;
  }

  for (int rank : spec.gd.init_ranks) {
    add_series("rank" + std::to_string(rank), [&, rank](int t) {
      const Seed seed = trial_seed(spec.master_seed, t);
      const Matrix<double> u0 =
          init_factor<double>(spec.d, spec.p, rank, spec.gd.init_fro_norm, seed);
      return guarded(TrialOutcome{t, seed, rank, {}, {}, false}, [&] {
        if (spec.run_kind == RunKind::Flow)
          return integrate_flow_rk4(op, inst.b, inst.x_star, u0, spec.gd.eta, spec.gd.iters,
                                    spec.gd.log_every, seed);
        return run_gd(op, inst.b, inst.x_star, u0, spec.gd.eta, spec.gd.iters,
                      spec.gd.log_every, seed);
      });
    });
  }
  return result;
}

WrittenFiles write_experiment(const ExperimentResult& result,
                              const std::filesystem::path& out_dir, bool y_log) {
  std::filesystem::create_directories(out_dir);
  WrittenFiles files;
  const std::string& name = result.spec.name;
  for (const auto& s : result.series) {
    for (const auto& t : s.trials) {
      auto path = out_dir / (name + "_" + s.label + "_trial" + std::to_string(t.trial) + ".csv");
      write_trial_csv(path, t.trial, t.trajectory);
      files.trial_csvs.push_back(std::move(path));
    }
    auto agg = out_dir / (name + "_" + s.label + "_agg.csv");
    write_aggregate_csv(agg, s.aggregate);
    files.aggregate_csvs.push_back(std::move(agg));
  }
  files.svg = out_dir / (name + ".svg");
  render_plot(files.aggregate_csvs, files.svg, y_log, Metric::Both);
  return files;
}

}  // namespace msense::harness
