#pragma once

#include <algorithm>
#include <deque>
#include <span>
#include <vector>

#include "msense/dynamics.hpp"

namespace msense {

/// Parameters of the adaptive restart scheme.
struct RestartConfig {
  double eta = 0;        // learning rate
  long K = 0;            // total gradient-step budget, shared across restarts
  long W = 0;            // window length
  double tau = 0;        // restart when the worst step ratio in a window is below tau
  int r0 = 0;            // initial rank
  double rho0 = 0;       // initial Frobenius norm
  int delta_rank = 1;    // rank decrement per restart
  double factor = 0.5;   // norm multiplier per restart
  int r = 1;             // rank floor
  Seed seed = 0;
  long log_every = 100;

  /// Throws ParameterError naming the first violated constraint.
  void validate(int d, int p) const {
    detail::require(eta > 0, "RestartConfig: eta must be > 0");
    detail::require(K >= 1, "RestartConfig: K must be >= 1");
    detail::require(W >= 1 && W <= K, "RestartConfig: W must satisfy 1 <= W <= K");
    detail::require(tau >= 0, "RestartConfig: tau must be >= 0");
    detail::require(rho0 > 0, "RestartConfig: rho0 must be > 0");
    detail::require(delta_rank >= 1, "RestartConfig: delta_rank must be >= 1");
    detail::require(factor > 0 && factor < 1, "RestartConfig: factor must lie in (0, 1)");
    detail::require(r >= 1, "RestartConfig: r must be >= 1");
    detail::require(r <= r0, "RestartConfig: r must not exceed r0");
    detail::require(r0 <= std::min(d, p), "RestartConfig: r0 must not exceed min(d, p)");
    detail::require(log_every >= 1, "RestartConfig: log_every must be >= 1");
  }
};

struct RestartEvent {
  long k = 0;  // iteration at which the fresh factor is in place
  int new_r0 = 0;
  double new_rho0 = 0;
  double trigger_ratio = 0;
};

struct WindowRatio {
  double ratio = 0;
  bool converged = false;  // some denominator was zero
};

/// max_{k'} f_{k'} / f_{k'-1} over a history f_{k-W}, ..., f_k (W+1 values).
inline WindowRatio window_ratio(std::span<const double> history) {
  detail::require(history.size() >= 2, "window_ratio: need at least two values");
  WindowRatio out;
  out.ratio = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i - 1] == 0.0) return {0.0, true};
    out.ratio = std::max(out.ratio, history[i] / history[i - 1]);
  }
  return out;
}

template <typename Scalar>
struct RestartResult {
  Trajectory<Scalar> trajectory;
  std::vector<RestartEvent> events;
  bool overflowed = false;
};

/// Seed of the factor drawn at the given restart (0-based event index).
inline Seed restart_seed(Seed run_seed, std::size_t event_index) {
  return substream_key(run_seed, "restart", event_index);
}

/// Gradient descent that monitors the per-step decay of the training error
/// every W iterations and, whenever the slowest step in the last window
/// still contracted by more than tau, restarts from a fresh factor of
/// reduced rank and norm.
///
/// The check fires when k mod W == 1 and k >= W (so f_{k-W} exists). On
/// overflow the partial trajectory and the events so far are returned with
/// `overflowed` set.
template <typename Scalar>
RestartResult<Scalar> run_restart(const SensingOperator<Scalar>& op,
                                  const Vector<Scalar>& b,
                                  const Matrix<Scalar>& x_star, int p,
                                  const RestartConfig& cfg) {
  cfg.validate(op.d(), p);
  const int d = op.d();
  const Matrix<Scalar> u0 =
      init_factor<Scalar>(d, p, cfg.r0, static_cast<Scalar>(cfg.rho0), cfg.seed);

  RestartResult<Scalar> result;
  int active_rank = cfg.r0;
  double active_norm = cfg.rho0;
  std::deque<double> history;
  std::vector<double> window;

  auto hook = [&](long k, Scalar f_k, Matrix<Scalar>& u_next) {
    history.push_back(static_cast<double>(f_k));
    if (history.size() > static_cast<std::size_t>(cfg.W) + 1) history.pop_front();
    detail::StepHook out;
    if (k % cfg.W != 1 || k < cfg.W) return out;
    window.assign(history.begin(), history.end());
    const WindowRatio wr = window_ratio(window);
    if (wr.converged) {
      out.stop = true;
      return out;
    }
    if (wr.ratio < cfg.tau) {
      active_norm *= cfg.factor;
      active_rank = std::max(active_rank - cfg.delta_rank, cfg.r);
      u_next = init_factor<Scalar>(d, p, active_rank, static_cast<Scalar>(active_norm),
                                   restart_seed(cfg.seed, result.events.size()));
      result.events.push_back({k + 1, active_rank, active_norm, wr.ratio});
      out.event = Event::Restart;
    }
    return out;
  };

  RunSettings settings{cfg.eta, cfg.K, cfg.log_every, cfg.seed};
  try {
    result.trajectory =
        detail::descent_loop(op, b, x_star, u0, static_cast<Scalar>(cfg.eta), cfg.K,
                             cfg.log_every, settings, hook);
  } catch (NumericalOverflow<Scalar>& e) {
    result.trajectory = std::move(e.partial());
    result.overflowed = true;
  }
  return result;
}

}  // namespace msense
