#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "msense/objective.hpp"
#include "msense/rank.hpp"
#include "msense/rng.hpp"

namespace msense {

template <typename Scalar>
struct FactorState {
  Matrix<Scalar> U;
  long k = 0;
};

enum class Event { None, Restart };

enum class StopReason { Budget, Converged, Overflow };

template <typename Scalar>
struct TrajectoryRecord {
  long k = 0;
  Scalar train_f{};
  Scalar test_err{};
  Scalar fro_norm{};
  int num_rank = 0;
  Event event = Event::None;
};

/// Settings snapshot stored alongside a trajectory.
struct RunSettings {
  double step = 0;  // learning rate (GD) or time step (RK4)
  long max_steps = 0;
  long log_every = 100;
  Seed seed = 0;
};

template <typename Scalar>
struct Trajectory {
  std::vector<TrajectoryRecord<Scalar>> records;
  RunSettings settings;
  StopReason stop = StopReason::Budget;
  Matrix<Scalar> final_U;

  const TrajectoryRecord<Scalar>& last() const { return records.back(); }
};

/// Raised when an update produces non-finite values. Carries the last finite
/// state and the trajectory logged up to (and including) that state.
template <typename Scalar>
class NumericalOverflow : public std::runtime_error {
 public:
  NumericalOverflow(FactorState<Scalar> last, Trajectory<Scalar> partial)
      : std::runtime_error("numerical overflow at iteration " +
                           std::to_string(last.k + 1)),
        last_(std::move(last)),
        partial_(std::move(partial)) {}

  const FactorState<Scalar>& last_finite() const { return last_; }
  const Trajectory<Scalar>& partial() const { return partial_; }
  Trajectory<Scalar>& partial() { return partial_; }

 private:
  FactorState<Scalar> last_;
  Trajectory<Scalar> partial_;
};

/// Runs stop once the training error drops below this fraction of
/// max(1, ||b||^2), i.e. at double-precision-squared scale.
inline constexpr double kConvergedRelTrain = 1e-28;

template <typename Scalar>
Scalar convergence_threshold(const Vector<Scalar>& b) {
  return static_cast<Scalar>(kConvergedRelTrain) *
         std::max(Scalar(1), b.squaredNorm());
}

/// U0 = fro_norm * P Q^T / ||P Q^T||_F with Gaussian P (d x rank), Q (p x rank).
template <typename Scalar = double>
Matrix<Scalar> init_factor(int d, int p, int rank, Scalar fro_norm, Seed seed) {
  detail::require(d >= 1 && p >= 1, "init_factor: d and p must be >= 1");
  detail::require(rank >= 1 && rank <= std::min(d, p),
                  "init_factor: rank must satisfy 1 <= rank <= min(d, p)");
  detail::require(fro_norm > Scalar(0), "init_factor: fro_norm must be > 0");
  CounterRng rng(seed, "init");
  const Matrix<Scalar> left = gaussian_matrix<Scalar>(rng, d, rank);
  const Matrix<Scalar> right = gaussian_matrix<Scalar>(rng, p, rank);
  Matrix<Scalar> u = left * right.transpose();
  u *= fro_norm / u.norm();
  return u;
}

namespace detail {

template <typename Scalar>
TrajectoryRecord<Scalar> make_record(const Matrix<Scalar>& u,
                                     const Matrix<Scalar>& x_star, long k,
                                     Scalar train_f, Event ev = Event::None) {
  TrajectoryRecord<Scalar> rec;
  rec.k = k;
  rec.train_f = train_f;
  rec.test_err = test_error(u, x_star);
  rec.fro_norm = u.norm();
  rec.num_rank = numerical_rank(u);
  rec.event = ev;
  return rec;
}

template <typename Scalar>
bool finite_record(const TrajectoryRecord<Scalar>& rec) {
  return std::isfinite(static_cast<double>(rec.train_f)) &&
         std::isfinite(static_cast<double>(rec.test_err)) &&
         std::isfinite(static_cast<double>(rec.fro_norm));
}

/// Shared driver for gradient descent and the restart scheme. `after_step`
/// may replace U_{k+1}; it returns the event tag for iteration k+1 or asks
/// the loop to stop.
struct StepHook {
  Event event = Event::None;
  bool stop = false;
};

template <typename Scalar, typename AfterStep>
Trajectory<Scalar> descent_loop(const SensingOperator<Scalar>& op,
                                const Vector<Scalar>& b,
                                const Matrix<Scalar>& x_star,
                                Matrix<Scalar> u, Scalar eta, long max_steps,
                                long log_every, RunSettings settings,
                                AfterStep&& after_step) {
  detail::require(eta >= Scalar(0), "gradient descent: eta must be >= 0");
  detail::require(max_steps >= 1, "gradient descent: iters must be >= 1");
  detail::require(log_every >= 1, "gradient descent: log_every must be >= 1");
  check_factor(op, b, u, "gradient descent");
  require_shape(x_star.rows() == op.d() && x_star.cols() == op.d(),
                "gradient descent: X must be d x d");

  Trajectory<Scalar> traj;
  traj.settings = settings;
  const Scalar threshold = convergence_threshold(b);
  Matrix<Scalar> u_prev;
  Scalar f_prev{};
  bool prev_logged = true;
  Event pending = Event::None;

  auto overflow = [&](long k_last) -> NumericalOverflow<Scalar> {
    // k_last is the last iteration with a finite state
    if (k_last >= 0 && !prev_logged)
      traj.records.push_back(make_record(u_prev, x_star, k_last, f_prev));
    traj.stop = StopReason::Overflow;
    traj.final_U = k_last >= 0 ? u_prev : u;
    return NumericalOverflow<Scalar>({traj.final_U, std::max(k_last, 0L)},
                                     std::move(traj));
  };

  for (long k = 0;; ++k) {
    // prev_logged refers to iteration k - 1 here
    const Residuals<Scalar> res = residuals(op, b, u);
    if (!std::isfinite(static_cast<double>(res.f))) throw overflow(k - 1);
    const bool converged = res.f < threshold;
    const bool last = k == max_steps;
    bool logged = false;
    if (k % log_every == 0 || converged || last || pending != Event::None) {
      auto rec = make_record(u, x_star, k, res.f, pending);
      if (!finite_record(rec)) throw overflow(k - 1);
      traj.records.push_back(rec);
      logged = true;
    }
    pending = Event::None;
    if (converged || last) {
      traj.stop = converged ? StopReason::Converged : StopReason::Budget;
      traj.final_U = std::move(u);
      return traj;
    }
    Matrix<Scalar> next = u - eta * grad_raw(op, res, u);
    u_prev = std::move(u);
    f_prev = res.f;
    prev_logged = logged;
    u = std::move(next);
    const StepHook hook = after_step(k, res.f, u);
    if (!u.allFinite()) throw overflow(k);
    if (hook.stop) {
      // the run ends at iteration k, whose state is u_prev
      if (!prev_logged)
        traj.records.push_back(make_record(u_prev, x_star, k, f_prev));
      traj.stop = StopReason::Converged;
      traj.final_U = std::move(u_prev);
      return traj;
    }
    pending = hook.event;
  }
}

}  // namespace detail

/// One step U <- U - eta * grad ||A(U U^T) - b||^2, k <- k + 1.
template <typename Scalar>
FactorState<Scalar> gd_step(const FactorState<Scalar>& state,
                            const SensingOperator<Scalar>& op,
                            const Vector<Scalar>& b, Scalar eta) {
  detail::require(eta >= Scalar(0), "gd_step: eta must be >= 0");
  const Residuals<Scalar> res = residuals(op, b, state.U);
  FactorState<Scalar> next{state.U - eta * grad_raw(op, res, state.U), state.k + 1};
  if (!next.U.allFinite() || !std::isfinite(static_cast<double>(res.f))) {
    Trajectory<Scalar> partial;
    partial.stop = StopReason::Overflow;
    partial.final_U = state.U;
    throw NumericalOverflow<Scalar>(state, std::move(partial));
  }
  return next;
}

/// Gradient descent on ||A(U U^T) - b||^2 for `iters` steps, logging every
/// `log_every` steps plus the first and final iterate. Stops early once the
/// training error reaches convergence_threshold(b).
template <typename Scalar>
Trajectory<Scalar> run_gd(const SensingOperator<Scalar>& op,
                          const Vector<Scalar>& b, const Matrix<Scalar>& x_star,
                          const Matrix<Scalar>& u0, Scalar eta, long iters,
                          long log_every = 100, Seed seed = 0) {
  RunSettings settings{static_cast<double>(eta), iters, log_every, seed};
  return detail::descent_loop(op, b, x_star, u0, eta, iters, log_every, settings,
                              [](long, Scalar, Matrix<Scalar>&) {
                                return detail::StepHook{};
                              });
}

/// Classical RK4 on the flow dU/dt = -grad G(U).
template <typename Scalar>
Matrix<Scalar> rk4_step(const SensingOperator<Scalar>& op,
                        const Vector<Scalar>& b, const Matrix<Scalar>& u,
                        Scalar dt) {
  const Matrix<Scalar> k1 = -grad_G(op, b, u);
  const Matrix<Scalar> k2 = -grad_G(op, b, (u + (dt / 2) * k1).eval());
  const Matrix<Scalar> k3 = -grad_G(op, b, (u + (dt / 2) * k2).eval());
  const Matrix<Scalar> k4 = -grad_G(op, b, (u + dt * k3).eval());
  return u + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

template <typename Scalar>
Trajectory<Scalar> integrate_flow_rk4(const SensingOperator<Scalar>& op,
                                      const Vector<Scalar>& b,
                                      const Matrix<Scalar>& x_star,
                                      const Matrix<Scalar>& u0, Scalar dt,
                                      long steps, long log_every = 100,
                                      Seed seed = 0) {
  detail::require(dt > Scalar(0), "integrate_flow_rk4: dt must be > 0");
  detail::require(steps >= 1, "integrate_flow_rk4: steps must be >= 1");
  detail::require(log_every >= 1, "integrate_flow_rk4: log_every must be >= 1");
  detail::check_factor(op, b, u0, "integrate_flow_rk4");

  Trajectory<Scalar> traj;
  traj.settings = {static_cast<double>(dt), steps, log_every, seed};
  const Scalar threshold = convergence_threshold(b);
  Matrix<Scalar> u = u0;
  for (long k = 0;; ++k) {
    const Scalar f = residuals(op, b, u).f;
    const bool converged = f < threshold;
    const bool last = k == steps;
    if (k % log_every == 0 || converged || last)
      traj.records.push_back(detail::make_record(u, x_star, k, f));
    if (converged || last) {
      traj.stop = converged ? StopReason::Converged : StopReason::Budget;
      traj.final_U = std::move(u);
      return traj;
    }
    Matrix<Scalar> next = rk4_step(op, b, u, dt);
    if (!next.allFinite()) {
      if (traj.records.back().k != k)
        traj.records.push_back(detail::make_record(u, x_star, k, f));
      traj.stop = StopReason::Overflow;
      traj.final_U = u;
      throw NumericalOverflow<Scalar>({u, k}, std::move(traj));
    }
    u = std::move(next);
  }
}

/// One entry of the singular-value dynamics check.
template <typename Scalar>
struct SingularValueRate {
  int index = 0;  // position in the descending spectrum of U U^T
  Scalar value{};
  Scalar predicted{};  // -2 s_i v_i^T A^*(g(U)) v_i
  Scalar finite_diff{};
  bool skipped = false;  // spectrum not separated at this index
};

inline constexpr double kSpectralGapRel = 1e-3;

/// Compares the predicted rate of change of each eigenvalue s_i of U U^T
/// under the flow with a forward difference over one RK4 step of size delta.
template <typename Scalar>
std::vector<SingularValueRate<Scalar>> sv_ode_check(
    const SensingOperator<Scalar>& op, const Vector<Scalar>& b,
    const Matrix<Scalar>& u, Scalar delta) {
  detail::require(delta > Scalar(0), "sv_ode_check: delta must be > 0");
  detail::check_factor(op, b, u, "sv_ode_check");
  const int d = op.d();
  const Matrix<Scalar> x = u * u.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(x);
  const Vector<Scalar> s = es.eigenvalues().reverse();
  const Matrix<Scalar> v = es.eigenvectors().rowwise().reverse();
  const Matrix<Scalar> adj_g = adjoint(op, residuals(op, b, u).g);

  const Matrix<Scalar> u_next = rk4_step(op, b, u, delta);
  const Matrix<Scalar> x_next = u_next * u_next.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es_next(x_next, Eigen::EigenvaluesOnly);
  const Vector<Scalar> s_next = es_next.eigenvalues().reverse();

  const Scalar top = s.cwiseAbs().maxCoeff();
  std::vector<SingularValueRate<Scalar>> out;
  out.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    SingularValueRate<Scalar> e;
    e.index = i;
    e.value = s(i);
    e.predicted = Scalar(-2) * s(i) * v.col(i).dot(adj_g * v.col(i));
    e.finite_diff = (s_next(i) - s(i)) / delta;
    Scalar gap = std::numeric_limits<Scalar>::infinity();
    for (int j = 0; j < d; ++j)
      if (j != i) gap = std::min(gap, std::abs(s(i) - s(j)));
    e.skipped = !(gap > static_cast<Scalar>(kSpectralGapRel) * top);
    out.push_back(e);
  }
  return out;
}

}  // namespace msense
