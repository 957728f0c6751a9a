#include "msense/harness/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "msense/harness/experiment.hpp"

namespace msense::harness {

std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string trial_csv(int trial, const Trajectory<double>& traj) {
  std::ostringstream out;
  out << kTrialHeader << '\n';
  for (const auto& r : traj.records) {
    out << trial << ',' << r.k << ',' << format_double(r.train_f) << ','
        << format_double(r.test_err) << ',' << format_double(r.fro_norm) << ','
        << r.num_rank << ',' << (r.event == Event::Restart ? "restart" : "") << '\n';
  }
  return out.str();
}

std::string aggregate_csv(const AggregateCurve& curve) {
  std::ostringstream out;
  out << kAggregateHeader << '\n';
  for (const auto& r : curve.rows) {
    out << r.k << ',' << format_double(r.train_mean) << ',' << format_double(r.train_std)
        << ',' << format_double(r.test_mean) << ',' << format_double(r.test_std) << '\n';
  }
  return out.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, const std::string& column, const std::string& file) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw CsvSchemaError(file + ": column \"" + column + "\" holds non-numeric value \"" +
                             s + "\"",
                         column);
  return v;
}

}  // namespace

void write_trial_csv(const std::filesystem::path& path, int trial,
                     const Trajectory<double>& traj) {
  write_file(path, trial_csv(trial, traj));
}

void write_aggregate_csv(const std::filesystem::path& path, const AggregateCurve& curve) {
  write_file(path, aggregate_csv(curve));
}

std::string series_label(const std::filesystem::path& path) {
  const std::string stem = path.stem().string();
  const auto agg = stem.rfind("_agg");
  const auto first = stem.find('_');
  if (agg != std::string::npos && agg + 4 == stem.size() && first != std::string::npos &&
      first < agg) {
    const auto start = stem.rfind('_', agg - 1);
    return stem.substr(start + 1, agg - start - 1);
  }
  const auto trial = stem.rfind("_trial");
  if (trial != std::string::npos && trial > 0) {
    const auto start = stem.rfind('_', trial - 1);
    if (start != std::string::npos)
      return stem.substr(start + 1, trial - start - 1) + " (trial " + stem.substr(trial + 6) + ")";
  }
  return stem;
}

SeriesData read_series_csv(const std::filesystem::path& path) {
  const std::string file = path.string();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + file);
  std::string header;
  if (!std::getline(in, header) || header.empty())
    throw CsvSchemaError(file + ": empty file", "");
  if (!header.empty() && header.back() == '\r') header.pop_back();

  const auto cols = split(header);
  const auto expect_trial = split(kTrialHeader);
  const auto expect_agg = split(kAggregateHeader);
  const bool is_agg = cols.size() == expect_agg.size() && cols[0] == "iter";
  const auto& expect = is_agg ? expect_agg : expect_trial;
  for (std::size_t i = 0; i < std::max(cols.size(), expect.size()); ++i) {
    const std::string got = i < cols.size() ? cols[i] : "<missing>";
    const std::string want = i < expect.size() ? expect[i] : "<none>";
    if (got != want)
      throw CsvSchemaError(file + ": unexpected column \"" + got + "\" (expected \"" + want +
                               "\")",
                           got);
  }

  SeriesData data;
  data.label = series_label(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != expect.size())
      throw CsvSchemaError(file + ": row has " + std::to_string(cells.size()) +
                               " cells, expected " + std::to_string(expect.size()),
                           "");
    if (is_agg) {
      data.iter.push_back(static_cast<long>(to_double(cells[0], "iter", file)));
      data.train_mean.push_back(to_double(cells[1], "train_mean", file));
      data.train_std.push_back(to_double(cells[2], "train_std", file));
      data.test_mean.push_back(to_double(cells[3], "test_mean", file));
      data.test_std.push_back(to_double(cells[4], "test_std", file));
    } else {
      data.iter.push_back(static_cast<long>(to_double(cells[1], "iter", file)));
      data.train_mean.push_back(to_double(cells[2], "train_error", file));
      data.train_std.push_back(0.0);
      data.test_mean.push_back(to_double(cells[3], "test_error", file));
      data.test_std.push_back(0.0);
    }
  }
  if (data.iter.empty()) throw CsvSchemaError(file + ": no data rows", "");
  return data;
}

}  // namespace msense::harness
