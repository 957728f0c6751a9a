#pragma once

#include <filesystem>
#include <string>

#include "msense/report.hpp"

namespace msense::harness {

/// JSON array with one object per check. Key order and number formatting
/// are fixed, so equal reports serialize to equal bytes.
std::string report_json(const VerificationReport& report);

/// One row per (check, value) pair:
/// check,seed,dims,name,value,tolerance,pass,hard,note
std::string report_csv(const VerificationReport& report);

void write_report_json(const std::filesystem::path& path, const VerificationReport& report);
void write_report_csv(const std::filesystem::path& path, const VerificationReport& report);

}  // namespace msense::harness
