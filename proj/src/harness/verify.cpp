#include "msense/harness/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "msense/dynamics.hpp"
#include "msense/geometry.hpp"
#include "msense/procrustes.hpp"
#include "msense/sensing.hpp"

namespace msense::harness {

namespace {

using Mat = Matrix<double>;
using Vec = Vector<double>;
using CheckFn = std::function<CheckResult(Seed)>;

std::string dims(std::initializer_list<std::pair<const char*, int>> kv) {
  std::string out;
  for (const auto& [k, v] : kv) {
    if (!out.empty()) out += ',';
    out += k;
    out += '=';
    out += std::to_string(v);
  }
  return out;
}

CheckResult start(const std::string& id, Seed seed, std::string dim, double tol) {
  CheckResult c;
  c.id = id;
  c.seed = seed;
  c.dims = std::move(dim);
  c.tolerance = tol;
  return c;
}

Mat random_symmetric(CounterRng& rng, int d) {
  Mat g = gaussian_matrix<double>(rng, d, d);
  return (g + g.transpose()) / 2;
}

SensingProblem<double> problem(int d, int r, int m, Seed seed, std::uint64_t index = 0) {
  return msense::make_problem<double>(d, r, m, substream_key(seed, "problem", index));
}

// Polar factor by the scaled-free Newton iteration Q <- (Q + Q^{-T}) / 2.
Mat polar_newton(const Mat& m) {
  Mat q = m;
  for (int it = 0; it < 100; ++it) {
    const Mat next = (q + q.inverse().transpose()) / 2;
    const double change = (next - q).norm();
    q = next;
    if (change < 1e-15 * q.norm()) break;
  }
  return q;
}

CheckResult adjoint_identity(Seed seed) {
  const int d = 8, m = 20;
  auto c = start("adjoint_identity", seed, dims({{"d", d}, {"m", m}}), 1e-10);
  const auto op = gen_operator<double>(d, m, substream_key(seed, "operator"));
  CounterRng rng(seed, "pairs");
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const Mat x = random_symmetric(rng, d);
    const Vec y = gaussian_matrix<double>(rng, m, 1);
    const double lhs = apply(op, x).dot(y);
    const double rhs = (x.array() * adjoint(op, y).array()).sum();
    worst = std::max(worst, std::abs(lhs - rhs) / (apply(op, x).norm() * y.norm()));
  }
  c.value("pairs", 100).value("max_rel_error", worst);
  c.pass = worst <= c.tolerance;
  return c;
}

CheckResult operator_symmetry(Seed seed) {
  const int d = 8, m = 20;
  auto c = start("operator_symmetry", seed, dims({{"d", d}, {"m", m}}), 0.0);
  const auto op = gen_operator<double>(d, m, substream_key(seed, "operator"));
  CounterRng rng(seed, "vectors");
  double worst = 0;
  for (const auto& a : op.mats()) worst = std::max(worst, (a - a.transpose()).cwiseAbs().maxCoeff());
  for (int i = 0; i < 10; ++i) {
    const Mat adj = adjoint(op, Vec(gaussian_matrix<double>(rng, m, 1)));
    worst = std::max(worst, (adj - adj.transpose()).cwiseAbs().maxCoeff());
  }
  c.value("max_asymmetry", worst);
  c.pass = worst <= c.tolerance;
  return c;
}

CheckResult operator_norm_dense(Seed seed) {
  const int d = 4, m = 6;
  auto c = start("operator_norm_dense", seed, dims({{"d", d}, {"m", m}}), 1e-8);
  const auto op = gen_operator<double>(d, m, substream_key(seed, "operator"));
  Mat dense(m, d * d);
  for (int i = 0; i < m; ++i) dense.row(i) = op.mats()[static_cast<std::size_t>(i)].reshaped().transpose();
  const double oracle = Eigen::JacobiSVD<Mat>(dense).singularValues()(0);
  const double est = operator_norm(op, 500);
  const double rel = std::abs(est - oracle) / oracle;
  c.value("power_iteration", est).value("dense_svd", oracle).value("rel_error", rel);
  c.pass = rel <= c.tolerance;
  return c;
}

CheckResult gradient_fd(Seed seed) {
  const int d = 8, p = 4, m = 20;
  auto c = start("gradient_fd", seed, dims({{"d", d}, {"p", p}, {"m", m}}), 1e-5);
  const auto prob = problem(d, 2, m, seed);
  CounterRng rng(seed, "points");
  const double h = 1e-5;
  double worst = 0;
  for (int i = 0; i < 10; ++i) {
    const Mat u = gaussian_matrix<double>(rng, d, p) / std::sqrt(double(d * p));
    const Mat grad = grad_raw(prob.op, prob.instance.b, u);
    for (int j = 0; j < 20; ++j) {
      Mat dir = gaussian_matrix<double>(rng, d, p);
      dir /= dir.norm();
      const double fp = residuals(prob.op, prob.instance.b, Mat(u + h * dir)).f;
      const double fm = residuals(prob.op, prob.instance.b, Mat(u - h * dir)).f;
      const double fd = (fp - fm) / (2 * h);
      const double an = (grad.array() * dir.array()).sum();
      worst = std::max(worst, std::abs(fd - an) / grad.norm());
    }
  }
  c.value("points", 10).value("directions", 20).value("max_rel_error", worst);
  c.note = "error relative to ||grad||_F for unit directions";
  c.pass = worst <= c.tolerance;
  return c;
}

CheckResult procrustes_oracle(Seed seed) {
  const int d = 6, p = 3;
  auto c = start("procrustes_oracle", seed, dims({{"d", d}, {"p", p}}), 1e-9);
  CounterRng rng(seed, "pairs");
  double worst_polar = 0, worst_sample_gap = -std::numeric_limits<double>::infinity();
  int sample_violations = 0;
  for (int i = 0; i < 100; ++i) {
    const Mat u = gaussian_matrix<double>(rng, d, p);
    const Mat v = gaussian_matrix<double>(rng, d, p);
    const double dist = procrustes_dist(u, v);
    const Mat r = polar_newton(v.transpose() * u);
    const double oracle = (u - v * r).norm();
    worst_polar = std::max(worst_polar, std::abs(dist - oracle) / (1 + oracle));
    CounterRng rot_rng(seed, "rotations", static_cast<std::uint64_t>(i));
    for (int s = 0; s < 10000; ++s) {
      const double sampled = (u - v * random_orthogonal<double>(rot_rng, p)).norm();
      worst_sample_gap = std::max(worst_sample_gap, dist - sampled);
      if (dist > sampled + 1e-12 * (1 + sampled)) ++sample_violations;
    }
  }
  c.value("pairs", 100)
      .value("max_rel_error_vs_polar", worst_polar)
      .value("sampled_rotations_per_pair", 10000)
      .value("max_excess_over_samples", worst_sample_gap)
      .value("sample_violations", sample_violations);
  c.pass = worst_polar <= c.tolerance && sample_violations == 0;
  return c;
}

CheckResult procrustes_rotation_invariance(Seed seed) {
  const int d = 8, p = 4;
  auto c = start("procrustes_rotation_invariance", seed, dims({{"d", d}, {"p", p}}), 1e-9);
  CounterRng rng(seed, "pairs");
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const Mat u = gaussian_matrix<double>(rng, d, p);
    const Mat v = gaussian_matrix<double>(rng, d, p);
    const Mat r = random_rotation<double>(rng, p);
    worst = std::max(worst, std::abs(procrustes_dist(Mat(u * r), v) - procrustes_dist(u, v)));
    worst = std::max(worst, procrustes_dist(Mat(u * r), u));
  }
  c.value("pairs", 100).value("max_abs_error", worst);
  c.pass = worst <= c.tolerance;
  return c;
}

CheckResult procrustes_lower_bound(Seed seed) {
  const int d = 8;
  auto c = start("procrustes_lower_bound", seed, "d=8,p=2|4|8", 1e-9);
  CounterRng rng(seed, "pairs");
  const int ps[] = {2, 4, 8};
  double min_slack = std::numeric_limits<double>::infinity();
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    const int p = ps[i % 3];
    const Mat u = gaussian_matrix<double>(rng, d, p);
    const Mat v = gaussian_matrix<double>(rng, d, p);
    const auto bc = procrustes_bound_check(u, v);
    min_slack = std::min(min_slack, bc.slack() / (1 + bc.lhs));
    if (!bc.holds(c.tolerance)) ++violations;
  }
  c.value("pairs", 100).value("min_rel_slack", min_slack).value("violations", violations);
  c.pass = violations == 0;
  return c;
}

// Rank-deficient factors. The bound with the larger of the two smallest
// nonzero singular values can fail here; the smaller one always works.
CheckResult procrustes_lower_bound_deficient(Seed seed) {
  const int d = 8;
  auto c = start("procrustes_lower_bound_deficient", seed, "d=8,p=2|4|8", 1e-9);
  c.hard = false;
  CounterRng rng(seed, "pairs");
  const int ps[] = {2, 4, 8};
  int max_form = 0, min_form = 0;
  for (int i = 0; i < 100; ++i) {
    const int p = ps[i % 3];
    const int ru = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(p));
    const int rv = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(p));
    const Mat u = gaussian_matrix<double>(rng, d, ru) * gaussian_matrix<double>(rng, ru, p);
    const Mat v = gaussian_matrix<double>(rng, d, rv) * gaussian_matrix<double>(rng, rv, p);
    const auto bc = procrustes_bound_check(u, v);
    if (!bc.holds(c.tolerance)) ++max_form;
    const double rhs_min =
        std::min(sigma_min_nonzero(u), sigma_min_nonzero(v)) * procrustes_dist(u, v);
    if (bc.lhs < rhs_min - c.tolerance * (1 + bc.lhs)) ++min_form;
  }
  c.value("pairs", 100).value("violations_max_form", max_form).value("violations_min_form", min_form);
  c.note = "observational";
  c.pass = min_form == 0;
  return c;
}

CheckResult pl_inequality(Seed seed) {
  const int d = 8, p = 8, m = 20;
  auto c = start("pl_inequality", seed, dims({{"d", d}, {"p", p}, {"m", m}}), 1e-10);
  CounterRng rng(seed, "points");
  double min_slack = std::numeric_limits<double>::infinity();
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    const auto prob = problem(d, 2, m, seed, static_cast<std::uint64_t>(i));
    const Mat u = gaussian_matrix<double>(rng, d, p) / std::sqrt(double(d * p));
    const auto bc = pl_slack(prob.op, prob.instance.b, u);
    min_slack = std::min(min_slack, bc.slack() / (1 + bc.lhs));
    if (!bc.holds(c.tolerance)) ++violations;
  }
  c.value("points", 100).value("min_rel_slack", min_slack).value("violations", violations);
  c.pass = violations == 0;
  return c;
}

CheckResult dominance_chain(Seed seed) {
  const int d = 8, p = 8, m = 20;
  auto c = start("dominance_chain", seed, dims({{"d", d}, {"p", p}, {"m", m}}), 1e-10);
  CounterRng rng(seed, "points");
  double min_slack = std::numeric_limits<double>::infinity();
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    const auto prob = problem(d, 2, m, seed, static_cast<std::uint64_t>(i));
    const Mat u = gaussian_matrix<double>(rng, d, p) / std::sqrt(double(d * p));
    const double lhs = grad_G(prob.op, prob.instance.b, u).norm();
    const double rhs =
        jacobian_sigmas(prob.op, u)(0) * residuals(prob.op, prob.instance.b, u).g.norm();
    min_slack = std::min(min_slack, (rhs - lhs) / (1 + rhs));
    if (lhs > rhs + c.tolerance * (1 + rhs)) ++violations;
  }
  c.value("points", 100).value("min_rel_slack", min_slack).value("violations", violations);
  c.pass = violations == 0;
  return c;
}

CheckResult jacobian_full_rank(Seed seed) {
  const int d = 30, p = 30, m = 240;
  auto c = start("jacobian_full_rank", seed, dims({{"d", d}, {"p", p}, {"m", m}}), 1e-8);
  const auto op = gen_operator<double>(d, m, substream_key(seed, "operator"));
  CounterRng rng(seed, "points");
  double min_ratio = std::numeric_limits<double>::infinity();
  double min_sigma = min_ratio;
  for (int i = 0; i < 10; ++i) {
    const Mat u = gaussian_matrix<double>(rng, d, p);
    const Vec s = jacobian_sigmas(op, u);
    min_sigma = std::min(min_sigma, s(m - 1));
    min_ratio = std::min(min_ratio, s(m - 1) / s(0));
  }
  c.value("draws", 10).value("min_sigma_m", min_sigma).value("min_sigma_m_over_sigma_1", min_ratio);
  c.note = "sigma_m > tolerance * sigma_1";
  c.pass = min_ratio > c.tolerance;
  return c;
}

CheckResult singular_value_ode(Seed seed) {
  const int d = 8, rank = 3, m = 20;
  auto c = start("singular_value_ode", seed, dims({{"d", d}, {"rank", rank}, {"m", m}}), 1e-3);
  CounterRng rng(seed, "points");
  double worst = 0;
  int checked = 0, cases = 0, attempts = 0;
  while (cases < 10 && attempts < 100) {
    ++attempts;
    const auto prob = problem(d, 2, m, seed, static_cast<std::uint64_t>(attempts));
    const Mat u = gaussian_matrix<double>(rng, d, rank) / std::sqrt(double(d * rank));
    const auto rates = sv_ode_check(prob.op, prob.instance.b, u, 1e-7);
    bool separated = true;
    for (int i = 0; i < rank; ++i) separated = separated && !rates[static_cast<std::size_t>(i)].skipped;
    if (!separated) continue;
    ++cases;
    for (int i = 0; i < rank; ++i) {
      const auto& e = rates[static_cast<std::size_t>(i)];
      worst = std::max(worst, std::abs(e.predicted - e.finite_diff) / (1 + std::abs(e.predicted)));
      ++checked;
    }
  }
  c.value("cases", cases).value("rates_checked", checked).value("max_scaled_error", worst);
  c.pass = cases == 10 && worst <= c.tolerance;
  return c;
}

CheckResult rk4_order(Seed seed) {
  const int d = 6, p = 3, m = 15;
  auto c = start("rk4_order", seed, dims({{"d", d}, {"p", p}, {"m", m}}), 0.0);
  const auto prob = problem(d, 2, m, seed);
  CounterRng rng(seed, "start");
  Mat u0 = gaussian_matrix<double>(rng, d, p);
  u0 *= 0.5 / u0.norm();
  const double t_end = 0.4, dt = 0.02;
  auto solve = [&](double h) {
    const long steps = std::lround(t_end / h);
    Mat u = u0;
    for (long s = 0; s < steps; ++s) u = rk4_step(prob.op, prob.instance.b, u, h);
    return u;
  };
  const Mat ref = solve(dt / 64);
  const double e1 = (solve(dt) - ref).norm();
  const double e2 = (solve(dt / 2) - ref).norm();
  const double ratio = e1 / e2;
  c.value("dt", dt).value("error_dt", e1).value("error_half_dt", e2).value("ratio", ratio);
  c.note = "ratio must lie in [8, 32]";
  c.pass = ratio >= 8 && ratio <= 32;
  return c;
}

CheckResult rank_monotonicity(Seed seed) {
  const int d = 8, p = 8, m = 20, r0 = 3;
  auto c = start("rank_monotonicity", seed, dims({{"d", d}, {"p", p}, {"m", m}, {"rank0", r0}}),
                 kDefaultRankTol);
  const auto prob = problem(d, 2, m, seed);
  int violations = 0, logged = 0, max_rank = 0;
  for (int t = 0; t < 3; ++t) {
    const Mat u0 = init_factor<double>(d, p, r0, 0.1, substream_key(seed, "init", t));
    const int rank0 = numerical_rank(u0);
    auto traj = run_gd(prob.op, prob.instance.b, prob.instance.x_star, u0, 1e-3, 3000, 10);
    for (const auto& rec : traj.records) {
      ++logged;
      max_rank = std::max(max_rank, rec.num_rank);
      if (rec.num_rank > rank0) ++violations;
    }
  }
  c.value("logged_iterates", logged).value("max_rank", max_rank).value("violations", violations);
  c.pass = violations == 0;
  return c;
}

CheckResult rip_alpha(Seed seed) {
  const int d = 8, m = 20, r = 4;
  auto c = start("rip_alpha_estimate", seed, dims({{"d", d}, {"m", m}, {"r", r}}), 0.0);
  const auto op = gen_operator<double>(d, m, substream_key(seed, "operator"));
  const double alpha = rip_alpha_estimate(op, r, 500, substream_key(seed, "samples"));
  c.value("samples", 500).value("alpha_hat", alpha);
  c.hard = false;
  c.note = "sampled upper bound on the isometry constant";
  c.pass = alpha > 0;
  return c;
}

CheckResult rho0(Seed seed) {
  const int d = 8, p = 8, m = 20;
  auto c = start("rho0_estimate", seed, dims({{"d", d}, {"p", p}, {"m", m}}), 0.0);
  c.hard = false;
  const auto prob = problem(d, 2, m, seed);
  std::vector<Mat> points;
  for (int t = 0; t < 3; ++t) {
    const Mat u0 = init_factor<double>(d, p, p, 0.5, substream_key(seed, "init", t));
    try {
      auto traj = run_gd(prob.op, prob.instance.b, prob.instance.x_star, u0, 1e-3, 20000, 20000);
      if (std::sqrt(traj.last().train_f) <= kFeasibleRelResidual * prob.instance.b.norm())
        points.push_back(traj.final_U);
    } catch (const NumericalOverflow<double>&) {
    }
  }
  c.value("feasible_points", static_cast<double>(points.size()));
  if (points.empty()) {
    c.note = "no feasible points reached";
    return c;
  }
  const auto est = rho0_estimate(prob.op, prob.instance.b, points);
  c.value("sigma_m_min", est.sigma_m_min).value("op_norm", est.op_norm).value("rho0_hat", est.rho0);
  c.note = "sampled estimate over the listed feasible points";
  c.pass = est.rho0 > 0;
  return c;
}

const std::vector<std::pair<std::string, CheckFn>>& registry() {
  static const std::vector<std::pair<std::string, CheckFn>> checks = {
      {"adjoint_identity", adjoint_identity},
      {"operator_symmetry", operator_symmetry},
      {"operator_norm_dense", operator_norm_dense},
      {"gradient_fd", gradient_fd},
      {"procrustes_oracle", procrustes_oracle},
      {"procrustes_rotation_invariance", procrustes_rotation_invariance},
      {"procrustes_lower_bound", procrustes_lower_bound},
      {"procrustes_lower_bound_deficient", procrustes_lower_bound_deficient},
      {"pl_inequality", pl_inequality},
      {"dominance_chain", dominance_chain},
      {"jacobian_full_rank", jacobian_full_rank},
      {"singular_value_ode", singular_value_ode},
      {"rk4_order", rk4_order},
      {"rank_monotonicity", rank_monotonicity},
      {"rip_alpha_estimate", rip_alpha},
      {"rho0_estimate", rho0},
  };
  return checks;
}

}  // namespace

const std::vector<std::string>& registered_checks() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> out;
    for (const auto& [id, fn] : registry()) out.push_back(id);
    return out;
  }();
  return ids;
}

CheckResult run_check(const std::string& id, Seed seed) {
  for (const auto& [name, fn] : registry()) {
    if (name != id) continue;
    try {
      return fn(substream_key(seed, name));
    } catch (const std::exception& e) {
      CheckResult c;
      c.id = name;
      c.seed = substream_key(seed, name);
      c.pass = false;
      c.note = std::string("exception: ") + e.what();
      return c;
    }
  }
  throw ParameterError("unknown check id: " + id);
}

VerificationReport run_verify_suite(Seed seed) {
  VerificationReport report;
  for (const auto& id : registered_checks()) report.add(run_check(id, seed));
  return report;
}

}  // namespace msense::harness
