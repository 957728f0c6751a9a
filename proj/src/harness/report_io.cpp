#include "msense/harness/report_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "msense/harness/csv.hpp"

namespace msense::harness {

namespace {

nlohmann::ordered_json entry_json(const CheckResult& c) {
  nlohmann::ordered_json j;
  j["id"] = c.id;
  j["seed"] = c.seed;
  j["dims"] = c.dims;
  nlohmann::ordered_json values = nlohmann::ordered_json::object();
  for (const auto& [name, v] : c.values) values[name] = v;
  j["values"] = std::move(values);
  j["tolerance"] = c.tolerance;
  j["pass"] = c.pass;
  j["hard"] = c.hard;
  j["note"] = c.note;
  return j;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string report_json(const VerificationReport& report) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : report.entries) arr.push_back(entry_json(c));
  return arr.dump(2) + "\n";
}

std::string report_csv(const VerificationReport& report) {
  std::ostringstream out;
  out << "check,seed,dims,name,value,tolerance,pass,hard,note\n";
  for (const auto& c : report.entries) {
    auto row = [&](const std::string& name, const std::string& value) {
      out << c.id << ',' << c.seed << ',' << quote(c.dims) << ',' << name << ',' << value << ','
          << format_double(c.tolerance) << ',' << (c.pass ? 1 : 0) << ',' << (c.hard ? 1 : 0)
          << ',' << quote(c.note) << '\n';
    };
    if (c.values.empty()) row("", "");
    for (const auto& [name, v] : c.values) row(name, format_double(v));
  }
  return out.str();
}

void write_report_json(const std::filesystem::path& path, const VerificationReport& report) {
  write_text(path, report_json(report));
}

void write_report_csv(const std::filesystem::path& path, const VerificationReport& report) {
  write_text(path, report_csv(report));
}

}  // namespace msense::harness
