#include "msense/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace msense::harness {

std::string to_string(RunKind kind) {
  switch (kind) {
    case RunKind::Gd: return "gd";
    case RunKind::Restart: return "restart";
    case RunKind::Flow: return "flow";
  }
  return "gd";
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment",
       {"name", "d", "p", "m", "rank_planted", "master_seed", "trials", "run_kind"}},
      {"gd", {"eta", "iters", "log_every", "init_ranks", "init_fro_norm"}},
      {"restart",
       {"eta", "K", "W", "tau", "r0", "rho0", "delta_rank", "factor", "r", "log_every"}},
  };
  return keys;
}

class Reader {
 public:
  Reader(const std::map<std::string, Section>& sections) : sections_(sections) {}

  bool has(const std::string& sec, const std::string& key) const {
    auto it = sections_.find(sec);
    return it != sections_.end() && it->second.count(key);
  }

  const Entry& raw(const std::string& sec, const std::string& key) const {
    auto it = sections_.find(sec);
    if (it == sections_.end() || !it->second.count(key))
      throw ConfigError("missing required key \"" + key + "\" in [" + sec + "]", key);
    return it->second.at(key);
  }

  template <typename T>
  T number(const std::string& sec, const std::string& key) const {
    const Entry& e = raw(sec, key);
    return parse<T>(e.value, key, e.line);
  }

  template <typename T>
  T number_or(const std::string& sec, const std::string& key, T fallback) const {
    return has(sec, key) ? number<T>(sec, key) : fallback;
  }

  template <typename T>
  static T parse(const std::string& text, const std::string& key, int line) {
    T out{};
    if constexpr (std::is_floating_point_v<T>) {
      // from_chars for double is unavailable on older libstdc++
      std::istringstream is(text);
      is >> out;
      if (!is || !is.eof())
        throw ConfigError("line " + std::to_string(line) + ": key \"" + key +
                              "\" expects a number, got \"" + text + "\"",
                          key, line);
    } else {
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
      if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError("line " + std::to_string(line) + ": key \"" + key +
                              "\" expects an integer, got \"" + text + "\"",
                          key, line);
    }
    return out;
  }

 private:
  const std::map<std::string, Section>& sections_;
};

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("invalid \"" + field + "\": " + what, field);
}

}  // namespace

ExperimentSpec parse_config(const std::string& text) {
  std::map<std::string, Section> sections;
  std::istringstream in(text);
  std::string line;
  std::string current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header",
                          {}, lineno);
      current = trim(line.substr(1, line.size() - 2));
      if (!allowed_keys().count(current))
        throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" +
                              current + "]",
                          current, lineno);
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value", {},
                        lineno);
    if (current.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": key outside of a section",
                        {}, lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!allowed_keys().at(current).count(key))
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key \"" + key +
                            "\" in [" + current + "]",
                        key, lineno);
    if (sections[current].count(key))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key \"" + key + "\"",
                        key, lineno);
    sections[current][key] = {value, lineno};
  }

  const Reader rd(sections);
  ExperimentSpec spec;
  spec.name = rd.raw("experiment", "name").value;
  spec.d = rd.number<int>("experiment", "d");
  spec.m = rd.number<int>("experiment", "m");
  spec.p = rd.number_or<int>("experiment", "p", spec.d);
  spec.rank_planted = rd.number<int>("experiment", "rank_planted");
  spec.master_seed = rd.number<Seed>("experiment", "master_seed");
  spec.trials = rd.number<int>("experiment", "trials");
  const Entry& kind = rd.raw("experiment", "run_kind");
  if (kind.value == "gd") {
    spec.run_kind = RunKind::Gd;
  } else if (kind.value == "restart") {
    spec.run_kind = RunKind::Restart;
  } else if (kind.value == "flow") {
    spec.run_kind = RunKind::Flow;
  } else {
    throw ConfigError("line " + std::to_string(kind.line) +
                          ": run_kind must be gd, restart or flow",
                      "run_kind", kind.line);
  }

  if (spec.run_kind == RunKind::Restart) {
    auto& rc = spec.restart;
    rc.eta = rd.number<double>("restart", "eta");
    rc.K = rd.number<long>("restart", "K");
    rc.W = rd.number<long>("restart", "W");
    rc.tau = rd.number<double>("restart", "tau");
    rc.r0 = rd.number<int>("restart", "r0");
    rc.rho0 = rd.number<double>("restart", "rho0");
    rc.delta_rank = rd.number<int>("restart", "delta_rank");
    rc.factor = rd.number<double>("restart", "factor");
    rc.r = rd.number<int>("restart", "r");
    rc.log_every = rd.number_or<long>("restart", "log_every", 100);
  } else {
    auto& gd = spec.gd;
    gd.eta = rd.number<double>("gd", "eta");
    gd.iters = rd.number<long>("gd", "iters");
    gd.log_every = rd.number_or<long>("gd", "log_every", 100);
    gd.init_fro_norm = rd.number<double>("gd", "init_fro_norm");
    const Entry& ranks = rd.raw("gd", "init_ranks");
    std::istringstream list(ranks.value);
    std::string item;
    while (std::getline(list, item, ','))
      gd.init_ranks.push_back(Reader::parse<int>(trim(item), "init_ranks", ranks.line));
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void ExperimentSpec::validate() const {
  check(!name.empty(), "name", "must not be empty");
  check(name.find_first_of("/\\ ") == std::string::npos, "name",
        "must not contain spaces or path separators");
  check(d >= 1, "d", "must be positive");
  check(p >= 1, "p", "must be positive");
  check(m >= 1, "m", "must be positive");
  check(rank_planted >= 1 && rank_planted <= d, "rank_planted", "must lie in [1, d]");
  check(p >= rank_planted, "p", "must be at least rank_planted");
  check(trials >= 1, "trials", "must be >= 1");
  if (run_kind == RunKind::Restart) {
    check(restart.r >= rank_planted, "r", "rank floor must be at least rank_planted");
    try {
      restart.validate(d, p);
    } catch (const ParameterError& e) {
      throw ConfigError(e.what(), "restart");
    }
  } else {
    check(gd.eta > 0, "eta", "must be > 0");
    check(gd.iters >= 1, "iters", "must be >= 1");
    check(gd.log_every >= 1, "log_every", "must be >= 1");
    check(gd.init_fro_norm > 0, "init_fro_norm", "must be > 0");
    check(!gd.init_ranks.empty(), "init_ranks", "must list at least one rank");
    for (int r : gd.init_ranks)
      check(r >= 1 && r <= std::min(d, p), "init_ranks", "each rank must lie in [1, min(d, p)]");
  }
}

}  // namespace msense::harness
