#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "msense/restart.hpp"
#include "msense/types.hpp"

namespace msense::harness {

enum class RunKind { Gd, Restart, Flow };

std::string to_string(RunKind kind);

/// Settings of plain gradient descent (and of the RK4 flow, where `eta` is
/// the time step).
struct GdSpec {
  double eta = 1e-4;
  long iters = 200000;
  long log_every = 100;
  std::vector<int> init_ranks;
  double init_fro_norm = 1e-3;
};

struct ExperimentSpec {
  std::string name;
  int d = 0;
  int p = 0;
  int m = 0;
  int rank_planted = 0;
  Seed master_seed = 0;
  int trials = 1;
  RunKind run_kind = RunKind::Gd;
  GdSpec gd;
  RestartConfig restart;  // seed is filled per trial

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parse or validation failure. `line` is 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string field = {}, int line = 0)
      : std::runtime_error(what), field_(std::move(field)), line_(line) {}
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

/// Parses the `key = value` format with [experiment], [gd] and [restart]
/// sections. `#` and `;` start comments.
ExperimentSpec parse_config(const std::string& text);
ExperimentSpec load_config(const std::filesystem::path& path);

}  // namespace msense::harness
