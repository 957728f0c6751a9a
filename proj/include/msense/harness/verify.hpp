#pragma once

#include <string>
#include <vector>

#include "msense/report.hpp"
#include "msense/types.hpp"

namespace msense::harness {

/// Ids of the checks run by run_verify_suite, in report order.
const std::vector<std::string>& registered_checks();

/// Runs every registered geometry and dynamics check at fixed small sizes.
/// Each check draws from its own substream of `seed`. Failures are recorded
/// in the report, never thrown.
VerificationReport run_verify_suite(Seed seed);

/// Runs a single registered check; throws ParameterError for unknown ids.
CheckResult run_check(const std::string& id, Seed seed);

}  // namespace msense::harness
