#pragma once

#include "msense/dynamics.hpp"
#include "msense/report.hpp"
#include "msense/types.hpp"

namespace msense::harness {

inline constexpr double kCaptureTrainRel = 1e-20;
inline constexpr double kCaptureTestRel = 1e-8;

struct CaptureSettings {
  double eta = 1e-4;
  long max_iters = 100000;
};

struct CaptureOutcome {
  CheckResult check;
  Trajectory<double> trajectory;
  int init_rank = 0;
  bool overflowed = false;
};

/// Starts gradient descent from a perturbed, rotated factorization of the
/// planted matrix: U0 = U_nat R + E with ||E||_F = perturb_scale ||U_nat||_F.
/// Passes when the final training error is below 1e-20 ||b||^2 and the final
/// test error below 1e-8 ||X||_F^2. Failures and overflow are recorded in
/// the returned entry, never thrown.
CaptureOutcome run_capture(int d, int p, int r, int m, double perturb_scale, Seed seed,
                           const CaptureSettings& settings = {});

/// The report entry of run_capture.
CheckResult run_capture_experiment(int d, int p, int r, int m, double perturb_scale, Seed seed,
                                   const CaptureSettings& settings = {});

}  // namespace msense::harness
