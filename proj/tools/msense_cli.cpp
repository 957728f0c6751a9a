// Command-line front end for the matrix sensing experiments.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "msense/harness/capture.hpp"
#include "msense/harness/config.hpp"
#include "msense/harness/experiment.hpp"
#include "msense/harness/plot.hpp"
#include "msense/harness/report_io.hpp"
#include "msense/harness/verify.hpp"
#include "msense/sensing.hpp"

namespace fs = std::filesystem;
using namespace msense;
using namespace msense::harness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerify = 2;
constexpr int kExitOverflow = 3;
constexpr Seed kDefaultSeed = 1;

struct Globals {
  std::optional<Seed> seed;
  std::string out_dir = ".";
  std::string config;
};

nlohmann::ordered_json matrix_json(const Matrix<double>& m) {
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

ExperimentSpec require_config(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required for this command", "config");
  ExperimentSpec spec = load_config(g.config);
  if (g.seed) spec.master_seed = *g.seed;
  return spec;
}

int report_experiment(const ExperimentResult& result, const WrittenFiles& files) {
  for (const auto& s : result.series) {
    int overflowed = 0;
    for (const auto& t : s.trials) overflowed += t.overflowed ? 1 : 0;
    const auto& row = s.aggregate.final_row();
    std::cout << result.spec.name << ' ' << s.label << ": final k=" << row.k
              << " train_mean=" << row.train_mean << " test_mean=" << row.test_mean
              << " overflowed=" << overflowed << '/' << s.trials.size() << '\n';
  }
  std::cout << "wrote " << files.trial_csvs.size() + files.aggregate_csvs.size()
            << " CSV files and " << files.svg.string() << '\n';
  return result.all_overflowed() ? kExitOverflow : kExitOk;
}

int cmd_run(const Globals& g, bool restart_only) {
  ExperimentSpec spec = require_config(g);
  if (restart_only && spec.run_kind != RunKind::Restart)
    throw ConfigError("the restart command needs run_kind = restart", "run_kind");
  const ExperimentResult result = run_experiment(spec);
  const WrittenFiles files = write_experiment(result, g.out_dir);
  return report_experiment(result, files);
}

int cmd_gen(const Globals& g, int d, int r, int m, const std::string& name) {
  const Seed seed = g.seed.value_or(kDefaultSeed);
  const auto prob = msense::make_problem<double>(d, r, m, instance_seed(seed));
  nlohmann::ordered_json j;
  j["d"] = d;
  j["rank"] = r;
  j["m"] = m;
  j["seed"] = seed;
  j["xi"] = prob.instance.xi;
  j["x_star"] = matrix_json(prob.instance.x_star);
  j["b"] = std::vector<double>(prob.instance.b.data(),
                               prob.instance.b.data() + prob.instance.b.size());
  auto mats = nlohmann::ordered_json::array();
  for (const auto& a : prob.op.mats()) mats.push_back(matrix_json(a));
  j["operator"] = std::move(mats);
  fs::create_directories(g.out_dir);
  const fs::path path = fs::path(g.out_dir) / (name + ".json");
  write_text(path, j.dump(2) + "\n");
  std::cout << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_capture(const Globals& g, int d, int p, int r, int m, double scale,
                const CaptureSettings& settings) {
  const Seed seed = g.seed.value_or(kDefaultSeed);
  VerificationReport report;
  report.add(run_capture_experiment(d, p, r, m, scale, seed, settings));
  fs::create_directories(g.out_dir);
  const fs::path path = fs::path(g.out_dir) / "capture_report.json";
  write_report_json(path, report);
  const auto& c = report.entries.front();
  std::cout << "capture " << c.dims << ": " << (c.pass ? "converged" : "not converged");
  for (const auto& [k, v] : c.values) std::cout << ' ' << k << '=' << v;
  std::cout << "\nwrote " << path.string() << '\n';
  return c.pass ? kExitOk : kExitVerify;
}

int cmd_verify(const Globals& g) {
  const Seed seed = g.seed.value_or(kDefaultSeed);
  const VerificationReport report = run_verify_suite(seed);
  fs::create_directories(g.out_dir);
  write_report_json(fs::path(g.out_dir) / "verify_report.json", report);
  write_report_csv(fs::path(g.out_dir) / "verify_report.csv", report);
  for (const auto& c : report.entries)
    std::cout << (c.pass ? "ok   " : (c.hard ? "FAIL " : "warn ")) << c.id
              << (c.note.empty() ? "" : "  (" + c.note + ")") << '\n';
  std::cout << "wrote " << (fs::path(g.out_dir) / "verify_report.json").string() << '\n';
  return report.all_hard_pass() ? kExitOk : kExitVerify;
}

int cmd_plot(const Globals& g, const std::vector<std::string>& inputs, const std::string& output,
             bool linear, const std::string& metric) {
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  Metric which = Metric::Both;
  if (metric == "train") which = Metric::Train;
  else if (metric == "test") which = Metric::Test;
  fs::path out = output;
  if (out.is_relative()) {
    fs::create_directories(g.out_dir);
    out = fs::path(g.out_dir) / out;
  }
  render_plot(paths, out, !linear, which);
  std::cout << "wrote " << out.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank matrix sensing experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master seed (overrides the config value)");
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--config", g.config, "Experiment config file");

  int d = 30, r = 2, m = 240, p = 2;
  std::string gen_name = "instance";
  auto* gen = app.add_subcommand("gen", "Generate a planted instance and write it as JSON");
  gen->add_option("--d", d, "Matrix dimension")->capture_default_str();
  gen->add_option("--rank", r, "Rank of the planted matrix")->capture_default_str();
  gen->add_option("--m", m, "Number of measurements")->capture_default_str();
  gen->add_option("--name", gen_name, "Output file stem")->capture_default_str();

  auto* run = app.add_subcommand("run", "Run the experiment described by --config");
  auto* restart = app.add_subcommand("restart", "Run a restart-vs-GD comparison from --config");

  double scale = 0.05;
  CaptureSettings cap;
  auto* capture = app.add_subcommand("capture", "Gradient descent from a perturbed solution");
  capture->add_option("--d", d, "Matrix dimension")->capture_default_str();
  capture->add_option("--p", p, "Factor width")->capture_default_str();
  capture->add_option("--rank", r, "Rank of the planted matrix")->capture_default_str();
  capture->add_option("--m", m, "Number of measurements")->capture_default_str();
  capture->add_option("--scale", scale, "Perturbation size relative to the solution norm")
      ->capture_default_str();
  capture->add_option("--eta", cap.eta, "Learning rate")->capture_default_str();
  capture->add_option("--max-iters", cap.max_iters, "Iteration budget")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "Run the property suite, write verify_report.json");

  std::vector<std::string> inputs;
  std::string output = "plot.svg";
  std::string metric = "both";
  bool linear = false;
  auto* plot = app.add_subcommand("plot", "Render CSV files to SVG");
  plot->add_option("inputs", inputs, "Trial or aggregate CSV files")->required();
  plot->add_option("-o,--output", output, "SVG path (relative paths go under --out-dir)")
      ->capture_default_str();
  plot->add_option("--metric", metric, "train, test or both")
      ->check(CLI::IsMember({"train", "test", "both"}))
      ->capture_default_str();
  plot->add_flag("--linear", linear, "Linear y axis instead of logarithmic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(g, d, r, m, gen_name);
    if (*run) return cmd_run(g, false);
    if (*restart) return cmd_run(g, true);
    if (*capture) return cmd_capture(g, d, p, r, m, scale, cap);
    if (*verify) return cmd_verify(g);
    if (*plot) return cmd_plot(g, inputs, output, linear, metric);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
