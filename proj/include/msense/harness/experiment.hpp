#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "msense/dynamics.hpp"
#include "msense/harness/config.hpp"
#include "msense/restart.hpp"
#include "msense/sensing.hpp"

namespace msense::harness {

/// Seed of the planted model and operator shared by all trials.
Seed instance_seed(Seed master_seed);
/// Seed of trial t (initial factor and restart draws).
Seed trial_seed(Seed master_seed, int trial);

SensingProblem<double> make_problem(const ExperimentSpec& spec);

struct TrialOutcome {
  int trial = 0;
  Seed seed = 0;
  int init_rank = 0;
  Trajectory<double> trajectory;
  std::vector<RestartEvent> events;
  bool overflowed = false;
};

struct AggregateRow {
  long k = 0;
  double train_mean = 0;
  double train_std = 0;
  double test_mean = 0;
  double test_std = 0;
  int n = 0;  // trials contributing to this row
};

struct AggregateCurve {
  std::vector<AggregateRow> rows;
  const AggregateRow& final_row() const { return rows.back(); }
};

/// Mean and population standard deviation across trials on the union of
/// the logged iterations. A trial contributes its most recent record at or
/// before k; a converged trial keeps contributing its final values after it
/// stops, an overflowed or budget-stopped one does not.
AggregateCurve aggregate(const std::vector<TrialOutcome>& trials);

struct SeriesResult {
  std::string label;
  std::vector<TrialOutcome> trials;
  AggregateCurve aggregate;
};

struct ExperimentResult {
  ExperimentSpec spec;
  double x_star_norm_sq = 0;
  double b_norm_sq = 0;
  std::vector<SeriesResult> series;

  const SeriesResult* find(const std::string& label) const;
  bool all_overflowed() const;
};

/// Runs every series of the experiment. Trials run concurrently; results are
/// joined in trial order, so outputs do not depend on scheduling.
ExperimentResult run_experiment(const ExperimentSpec& spec);

struct WrittenFiles {
  std::vector<std::filesystem::path> trial_csvs;
  std::vector<std::filesystem::path> aggregate_csvs;
  std::filesystem::path svg;
};

/// Writes <name>_<series>_trial<t>.csv, <name>_<series>_agg.csv and
/// <name>.svg under out_dir.
WrittenFiles write_experiment(const ExperimentResult& result,
                              const std::filesystem::path& out_dir, bool y_log = true);

}  // namespace msense::harness
