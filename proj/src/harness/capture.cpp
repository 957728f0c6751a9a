#include "msense/harness/capture.hpp"

#include <Eigen/Eigenvalues>

#include "msense/dynamics.hpp"
#include "msense/harness/experiment.hpp"
#include "msense/sensing.hpp"

namespace msense::harness {

namespace {

std::string dims_string(int d, int p, int r, int m) {
  return "d=" + std::to_string(d) + ",p=" + std::to_string(p) + ",r=" + std::to_string(r) +
         ",m=" + std::to_string(m);
}

}  // namespace

CaptureOutcome run_capture(int d, int p, int r, int m, double perturb_scale, Seed seed,
                           const CaptureSettings& settings) {
  detail::require(p >= r, "run_capture_experiment: p must be >= r");
  detail::require(perturb_scale >= 0, "run_capture_experiment: perturb_scale must be >= 0");
  const auto problem = msense::make_problem<double>(d, r, m, instance_seed(seed));
  const auto& op = problem.op;
  const auto& inst = problem.instance;

  // top-r factor of the planted matrix, zero-padded to p columns
  Eigen::SelfAdjointEigenSolver<Matrix<double>> es(inst.x_star);
  Matrix<double> u_nat = Matrix<double>::Zero(d, p);
  for (int j = 0; j < r; ++j) {
    const Eigen::Index idx = d - 1 - j;
    u_nat.col(j) = es.eigenvectors().col(idx) * std::sqrt(std::max(0.0, es.eigenvalues()(idx)));
  }

  CounterRng rng(seed, "capture");
  const Matrix<double> rot = random_rotation<double>(rng, p);
  Matrix<double> u0 = u_nat * rot;
  if (perturb_scale > 0) {
    Matrix<double> e = gaussian_matrix<double>(rng, d, p);
    e *= perturb_scale * u_nat.norm() / e.norm();
    u0 += e;
  }

  const double b_sq = inst.b.squaredNorm();
  const double x_sq = inst.x_star.squaredNorm();
  CaptureOutcome outcome;
  outcome.init_rank = numerical_rank(u0);
  CheckResult& out = outcome.check;
  out.id = "capture";
  out.seed = seed;
  out.dims = dims_string(d, p, r, m);
  out.tolerance = kCaptureTestRel;
  out.value("perturb_scale", perturb_scale);

  Trajectory<double>& traj = outcome.trajectory;
  bool& overflowed = outcome.overflowed;
  try {
    traj = run_gd(op, inst.b, inst.x_star, u0, settings.eta, settings.max_iters,
                  settings.max_iters);
  } catch (NumericalOverflow<double>& e) {
    traj = std::move(e.partial());
    overflowed = true;
  }
  const auto& last = traj.last();
  out.value("iterations", static_cast<double>(last.k))
      .value("train_error", last.train_f)
      .value("test_error", last.test_err)
      .value("train_rel", last.train_f / b_sq)
      .value("test_rel", last.test_err / x_sq);
  out.pass = !overflowed && last.train_f < kCaptureTrainRel * b_sq &&
             last.test_err < kCaptureTestRel * x_sq;
  if (overflowed)
    out.note = "overflow";
  else if (!out.pass)
    out.note = "not converged";
  return outcome;
}

CheckResult run_capture_experiment(int d, int p, int r, int m, double perturb_scale, Seed seed,
                                   const CaptureSettings& settings) {
  return run_capture(d, p, r, m, perturb_scale, seed, settings).check;
}

}  // namespace msense::harness
