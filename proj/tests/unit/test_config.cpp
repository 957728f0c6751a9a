#include <gtest/gtest.h>

#include <string>

#include "msense/harness/config.hpp"

using namespace msense::harness;

namespace {

const std::string kValid = R"([experiment]
name = small
d = 6
m = 20
rank_planted = 2
master_seed = 9
trials = 2
run_kind = gd

[gd]
eta = 1e-3
iters = 500
log_every = 50
init_ranks = 2, 6
init_fro_norm = 0.1
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

ConfigError parse_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "expected ConfigError";
  return ConfigError("none");
}

}  // namespace

TEST(Config, ParsesValidText) {
  const auto spec = parse_config(kValid);
  EXPECT_EQ(spec.name, "small");
  EXPECT_EQ(spec.d, 6);
  EXPECT_EQ(spec.p, 6);  // defaults to d
  EXPECT_EQ(spec.m, 20);
  EXPECT_EQ(spec.master_seed, 9u);
  EXPECT_EQ(spec.run_kind, RunKind::Gd);
  EXPECT_EQ(spec.gd.init_ranks, (std::vector<int>{2, 6}));
  EXPECT_DOUBLE_EQ(spec.gd.eta, 1e-3);
  EXPECT_EQ(spec.gd.iters, 500);
}

TEST(Config, Example1Preset) {
  const auto spec = load_config(std::string(MSENSE_CONFIG_DIR) + "/example1_lownorm.ini");
  EXPECT_EQ(spec.d, 30);
  EXPECT_EQ(spec.m, 240);
  EXPECT_EQ(spec.rank_planted, 2);
  EXPECT_EQ(spec.trials, 3);
  EXPECT_DOUBLE_EQ(spec.gd.eta, 1e-4);
  EXPECT_DOUBLE_EQ(spec.gd.init_fro_norm, 1e-3);
  EXPECT_EQ(spec.gd.init_ranks, (std::vector<int>{2, 30}));
}

TEST(Config, AllPresetsLoad) {
  for (const char* name : {"example1_lownorm", "example1_midnorm", "example1_highnorm", "restart_vs_gd"}) {
    EXPECT_NO_THROW(load_config(std::string(MSENSE_CONFIG_DIR) + "/" + name + ".ini")) << name;
  }
  const auto rvg = load_config(std::string(MSENSE_CONFIG_DIR) + "/restart_vs_gd.ini");
  EXPECT_EQ(rvg.run_kind, RunKind::Restart);
  EXPECT_DOUBLE_EQ(rvg.restart.eta, 5e-6);
  EXPECT_EQ(rvg.restart.W, 100);
  EXPECT_DOUBLE_EQ(rvg.restart.tau, 0.998);
  EXPECT_EQ(rvg.restart.r0, 30);
  EXPECT_DOUBLE_EQ(rvg.restart.rho0, 10.0);
  EXPECT_EQ(rvg.restart.delta_rank, 3);
  EXPECT_DOUBLE_EQ(rvg.restart.factor, 0.5);
  EXPECT_EQ(rvg.restart.r, 2);
}

TEST(Config, MissingKeyNamesField) {
  const auto e = parse_error(replace(kValid, "d = 6\n", ""));
  EXPECT_EQ(e.field(), "d");
}

TEST(Config, ZeroTrialsRejected) {
  const auto e = parse_error(replace(kValid, "trials = 2", "trials = 0"));
  EXPECT_EQ(e.field(), "trials");
}

TEST(Config, UnknownKeyCarriesLine) {
  const auto e = parse_error(replace(kValid, "trials = 2", "trials = 2\ncolour = red"));
  EXPECT_EQ(e.field(), "colour");
  EXPECT_EQ(e.line(), 8);
}

TEST(Config, UnknownSectionAndDuplicates) {
  EXPECT_THROW(parse_config(kValid + "[plot]\n"), ConfigError);
  const auto e = parse_error(replace(kValid, "m = 20", "m = 20\nm = 30"));
  EXPECT_EQ(e.field(), "m");
}

TEST(Config, BadNumberCarriesLine) {
  const auto e = parse_error(replace(kValid, "d = 6", "d = six"));
  EXPECT_EQ(e.field(), "d");
  EXPECT_EQ(e.line(), 3);
}

TEST(Config, WidthBelowPlantedRank) {
  const auto e = parse_error(replace(kValid, "d = 6", "d = 6\np = 1"));
  EXPECT_EQ(e.field(), "p");
}

TEST(Config, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/config.ini"), ConfigError);
}
