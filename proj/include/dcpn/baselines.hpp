#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>

#include "core_types.hpp"
#include "dc_objective.hpp"
#include "dc_prox_newton.hpp"

namespace dcpn {

struct ProxGradConfig {
  double tol = 1e-8;  // on ||x_{k+1} - y_k||_inf
  int max_iters = 5000;
  double initial_lipschitz = 1.0;
};

struct ProxGradResult {
  Vector x;
  SolveTrace trace;
  bool converged = false;
};

/// FISTA with backtracking on the Lipschitz constant and gradient-based restart for
///   min f1(x) - shift^T x + h1(x).
/// Returns the iterate with the lowest objective seen.
inline ProxGradResult proximal_gradient_solve(const DcSmooth& f, const DcNonsmooth& pen, const Vector& shift,
                                              const ProxGradConfig& cfg, const Vector& x0) {
  const Index d = f.dimension();
  require_size(shift.size(), d, "proximal_gradient_solve shift");
  require_size(x0.size(), d, "proximal_gradient_solve x0");
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  ProxGradResult out;
  SolveTrace& trace = out.trace;
  auto phi = [&](const Vector& x, bool grad) {
    auto e = f.evaluate(x, grad);
    trace.evals += grad ? 2 : 1;
    e.f1 -= shift.dot(x);
    if (grad) e.grad_f1 -= shift;
    return e;
  };

  double lip = f.lipschitz_f1().value_or(cfg.initial_lipschitz);
  if (!(lip > 0.0)) lip = 1.0;
  Vector x = x0;
  Vector y = x0;
  double momentum = 1.0;
  double best = phi(x, false).f1 + pen.value_h1(x);
  trace.initial_objective = best;
  Vector best_x = x;
  trace.status = SolveStatus::max_iters;

  for (int k = 0; k < cfg.max_iters; ++k) {
    const auto ey = phi(y, true);
    Vector x_new;
    double phi_new = 0.0;
    bool ok = false;
    for (int b = 0; b < 100; ++b) {
      x_new = pen.prox_h1_scalar(y - ey.grad_f1 / lip, 1.0 / lip);
      phi_new = phi(x_new, false).f1;
      const Vector diff = x_new - y;
      if (std::isfinite(phi_new) &&
          phi_new <= ey.f1 + ey.grad_f1.dot(diff) + 0.5 * lip * diff.squaredNorm() + 1e-12 * std::abs(ey.f1)) {
        ok = true;
        break;
      }
      lip *= 2.0;
    }
    if (!ok) {
      trace.status = SolveStatus::line_search_failed;
      break;
    }

    const double objective = phi_new + pen.value_h1(x_new);
    const double residual = d > 0 ? (x_new - y).cwiseAbs().maxCoeff() : 0.0;

    IterationRecord rec;
    rec.iter = k;
    rec.prev_objective = best;
    rec.objective = objective;
    rec.step = 1.0 / lip;
    rec.dx_inf = residual;
    rec.evals = trace.evals;
    rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    trace.records.push_back(rec);

    if (objective < best) {
      best = objective;
      best_x = x_new;
    }

    // Restart momentum when it points against the proximal gradient step.
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    if ((y - x_new).dot(x_new - x) > 0.0) {
      momentum = 1.0;
      y = x_new;
    } else {
      y = x_new + ((momentum - 1.0) / next_momentum) * (x_new - x);
      momentum = next_momentum;
    }
    x = std::move(x_new);

    if (residual <= cfg.tol) {
      trace.status = SolveStatus::converged;
      break;
    }
  }
  trace.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  out.converged = trace.status == SolveStatus::converged;
  out.x = std::move(best_x);
  return out;
}

struct GistConfig {
  bool monotone = false;
  int nonmonotone_window = 5;
  double bb_min = 1e-8;
  double bb_max = 1e8;
  double sigma = 1e-3;
  int max_iters = 10000;
  double rel_obj_tol = 1e-6;
  int max_step_halvings = 50;
  std::optional<Vector> x0;
};

/// GIST: proximal steps on the full nonconvex h with Barzilai-Borwein curvature
/// and a (non)monotone Armijo-type acceptance over the last few objectives.
inline SolveResult gist_solve(const CompositeObjective& obj, const GistConfig& cfg = {}) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const Index d = obj.dimension();
  const DcSmooth& f = obj.smooth();
  const DcNonsmooth& pen = obj.nonsmooth();

  SolveResult out;
  SolveTrace& trace = out.trace;
  Vector x = cfg.x0 ? *cfg.x0 : Vector::Zero(d);
  require_size(x.size(), d, "gist initial point");
  auto e = f.evaluate(x, true);
  trace.evals += 2;
  Vector grad = e.grad_f1 - e.grad_f2;
  double objective = e.f1 - e.f2 + pen.value(x);
  trace.initial_objective = objective;
  trace.status = SolveStatus::max_iters;

  const std::size_t window = cfg.monotone ? 1 : static_cast<std::size_t>(std::max(1, cfg.nonmonotone_window));
  std::deque<double> history{objective};
  double eta = 1.0;

  for (int k = 0; k < cfg.max_iters; ++k) {
    const double reference = *std::max_element(history.begin(), history.end());
    Vector x_new;
    double objective_new = 0.0;
    bool accepted = false;
    int tries = 0;
    for (; tries <= cfg.max_step_halvings; ++tries) {
      x_new = pen.prox_full(x - grad / eta, 1.0 / eta);
      const auto trial = f.evaluate(x_new, false);
      trace.evals += 1;
      objective_new = trial.f1 - trial.f2 + pen.value(x_new);
      if (std::isfinite(objective_new) &&
          objective_new <= reference - 0.5 * cfg.sigma * eta * (x_new - x).squaredNorm()) {
        accepted = true;
        break;
      }
      eta = std::min(2.0 * eta, std::numeric_limits<double>::max() / 4);
    }
    if (!accepted) {
      trace.status = SolveStatus::line_search_failed;
      out.message = "GIST step search failed at iteration " + std::to_string(k);
      break;
    }

    auto e_new = f.evaluate(x_new, true);
    trace.evals += 2;
    const Vector grad_new = e_new.grad_f1 - e_new.grad_f2;
    const Vector s = x_new - x;
    const double ss = s.squaredNorm();
    const double sy = s.dot(grad_new - grad);

    IterationRecord rec;
    rec.iter = k;
    rec.prev_objective = objective;
    rec.objective = objective_new;
    rec.step = 1.0 / eta;
    rec.dx_inf = d > 0 ? s.cwiseAbs().maxCoeff() : 0.0;
    rec.backtracks = tries;
    rec.evals = trace.evals;
    rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    trace.records.push_back(rec);

    const double rel_change = std::abs(objective_new - objective) / std::max(1.0, std::abs(objective));
    x = std::move(x_new);
    grad = grad_new;
    objective = objective_new;
    history.push_back(objective);
    while (history.size() > window) history.pop_front();

    if (ss == 0.0 || rel_change < cfg.rel_obj_tol) {
      trace.status = SolveStatus::converged;
      break;
    }
    eta = std::clamp(sy / ss, cfg.bb_min, cfg.bb_max);
  }

  trace.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  out.report.objective = objective;
  out.report.iterations = static_cast<int>(trace.records.size());
  out.report.direction_norm = std::nan("");
  out.x = std::move(x);
  return out;
}

struct DcaConfig {
  int max_dc_iters = 20;
  double rel_obj_tol = 1e-6;
  ProxGradConfig inner{1e-8, 5000, 1.0};
  std::optional<Vector> x0;
};

/// DCA: linearize f2 and h2 at x_k and solve the convex remainder to tolerance.
inline SolveResult dca_solve(const CompositeObjective& obj, const DcaConfig& cfg = {}) {
  if (cfg.max_dc_iters < 1 || cfg.max_dc_iters > 20) throw std::invalid_argument("max_dc_iters must be in [1, 20]");
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const Index d = obj.dimension();
  const DcSmooth& f = obj.smooth();
  const DcNonsmooth& pen = obj.nonsmooth();

  SolveResult out;
  SolveTrace& trace = out.trace;
  Vector x = cfg.x0 ? *cfg.x0 : Vector::Zero(d);
  require_size(x.size(), d, "dca initial point");
  double objective = composite_value(obj, x);
  trace.evals += 1;
  trace.initial_objective = objective;
  trace.status = SolveStatus::max_iters;
  std::optional<Vector> prev_shift;
  bool inner_failed = false;

  for (int k = 0; k < cfg.max_dc_iters; ++k) {
    const auto e = f.evaluate(x, true);
    trace.evals += 2;
    Vector shift = e.grad_f2 + pen.subgrad_h2(x);
    if (prev_shift && *prev_shift == shift) {
      trace.status = SolveStatus::converged;
      break;
    }

    auto pg = proximal_gradient_solve(f, pen, shift, cfg.inner, x);
    trace.evals += pg.trace.evals;
    inner_failed = inner_failed || !pg.converged;
    const double objective_new = composite_value(obj, pg.x);
    trace.evals += 1;

    IterationRecord rec;
    rec.iter = k;
    rec.prev_objective = objective;
    rec.objective = objective_new;
    rec.step = 1.0;
    rec.dx_inf = d > 0 ? (pg.x - x).cwiseAbs().maxCoeff() : 0.0;
    rec.inner_iters = static_cast<int>(pg.trace.records.size());
    rec.inner_tol = cfg.inner.tol;
    rec.evals = trace.evals;
    rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    trace.records.push_back(rec);

    const double rel_change = std::abs(objective_new - objective) / std::max(1.0, std::abs(objective));
    x = std::move(pg.x);
    objective = objective_new;
    prev_shift = std::move(shift);
    if (rel_change < cfg.rel_obj_tol) {
      trace.status = SolveStatus::converged;
      break;
    }
  }
  if (inner_failed) out.message = "a convex subproblem hit its iteration limit";
  trace.wall_time = std::chrono::duration<double>(Clock::now() - start).count();

  out.report.objective = objective;
  out.report.iterations = static_cast<int>(trace.records.size());
  out.report.direction_norm = std::nan("");
  out.x = std::move(x);
  return out;
}

/// Plain proximal gradient (FISTA) on a convex composite problem (f2 = h2 = 0).
inline SolveResult proxgrad_solve(const CompositeObjective& obj, const ProxGradConfig& cfg = {1e-8, 20000, 1.0},
                                  const std::optional<Vector>& x0 = std::nullopt) {
  if (!obj.smooth().f2_vanishes() || !obj.nonsmooth().h2_vanishes()) {
    throw std::invalid_argument("proximal gradient needs a convex problem (f2 = h2 = 0)");
  }
  const Index d = obj.dimension();
  const Vector start = x0 ? *x0 : Vector::Zero(d);
  auto pg = proximal_gradient_solve(obj.smooth(), obj.nonsmooth(), Vector::Zero(d), cfg, start);
  SolveResult out;
  out.trace = std::move(pg.trace);
  out.report.objective = composite_value(obj, pg.x);
  out.report.iterations = static_cast<int>(out.trace.records.size());
  out.report.direction_norm = std::nan("");
  out.x = std::move(pg.x);
  return out;
}

}  // namespace dcpn
