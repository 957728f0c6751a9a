#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "msense/dynamics.hpp"

namespace msense::harness {

struct AggregateCurve;

inline constexpr const char* kTrialHeader =
    "trial,iter,train_error,test_error,fro_norm,num_rank,event";
inline constexpr const char* kAggregateHeader = "iter,train_mean,train_std,test_mean,test_std";

/// Shortest decimal form that round-trips a double.
std::string format_double(double v);

std::string trial_csv(int trial, const Trajectory<double>& traj);
std::string aggregate_csv(const AggregateCurve& curve);

void write_trial_csv(const std::filesystem::path& path, int trial,
                     const Trajectory<double>& traj);
void write_aggregate_csv(const std::filesystem::path& path, const AggregateCurve& curve);

class CsvSchemaError : public std::runtime_error {
 public:
  CsvSchemaError(const std::string& what, std::string column)
      : std::runtime_error(what), column_(std::move(column)) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

/// A curve read back from either CSV schema. Per-trial files yield zero
/// standard deviations.
struct SeriesData {
  std::string label;
  std::vector<long> iter;
  std::vector<double> train_mean, train_std, test_mean, test_std;
};

/// Series label from a file name: "<exp>_<series>_agg.csv" -> "<series>",
/// "<exp>_<series>_trial<t>.csv" -> "<series> (trial t)"; else the stem.
std::string series_label(const std::filesystem::path& path);

SeriesData read_series_csv(const std::filesystem::path& path);

}  // namespace msense::harness
