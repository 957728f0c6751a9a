#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace msense {

/// One named verification result. `values` keeps insertion order so the
/// serialized report is stable.
struct CheckResult {
  std::string id;
  std::uint64_t seed = 0;
  std::string dims;  // e.g. "d=8,p=4,m=20"
  std::vector<std::pair<std::string, double>> values;
  double tolerance = 0;
  bool pass = false;
  bool hard = true;  // soft checks are observational and never fail the suite
  std::string note;

  CheckResult& value(std::string name, double v) {
    values.emplace_back(std::move(name), v);
    return *this;
  }
};

struct VerificationReport {
  std::vector<CheckResult> entries;

  void add(CheckResult r) { entries.push_back(std::move(r)); }

  bool all_hard_pass() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const CheckResult& c) { return !c.hard || c.pass; });
  }

  const CheckResult* find(const std::string& id) const {
    for (const auto& e : entries)
      if (e.id == id) return &e;
    return nullptr;
  }
};

}  // namespace msense
