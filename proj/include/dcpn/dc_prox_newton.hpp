#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "core_types.hpp"
#include "dc_objective.hpp"
#include "inner_solver.hpp"
#include "metric_lbfgs.hpp"

namespace dcpn {

struct OuterConfig {
  double alpha = 0.1;
  double backtrack_factor = 0.5;
  int max_outer_iters = 1000;
  double rel_obj_tol = 1e-6;
  int max_backtracks = 50;
  /// Number of times a direction is recomputed at tol / 100 when D_k >= 0 or the
  /// descent bound D_k <= -dx^T H dx + 10 tol fails.
  int max_direction_retries = 3;
  std::optional<Vector> x0;
  LbfgsOptions metric;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("alpha must lie in (0, 1/2)");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
      throw std::invalid_argument("backtrack_factor must lie in (0, 1)");
    }
    if (max_outer_iters < 0 || max_backtracks < 0 || max_direction_retries < 0) {
      throw std::invalid_argument("iteration limits must be non-negative");
    }
    if (!(rel_obj_tol >= 0.0)) throw std::invalid_argument("rel_obj_tol must be non-negative");
  }
};

struct StationarityReport {
  double direction_norm = 0.0;  // ||dx||_inf recomputed at the final iterate
  double objective = 0.0;
  int iterations = 0;
};

struct SolveResult {
  Vector x;
  SolveTrace trace;
  StationarityReport report;
  std::string message;
};

/// D = v^T dx + h1(x + dx) - h1(x).
inline double descent_quantity(const Vector& v_k, const Vector& dx, const DcNonsmooth& pen, const Vector& x_k) {
  require_size(dx.size(), v_k.size(), "descent_quantity dx");
  require_size(x_k.size(), v_k.size(), "descent_quantity x_k");
  return v_k.dot(dx) + pen.value_h1(x_k + dx) - pen.value_h1(x_k);
}

/// Step size below which sufficient descent is guaranteed: min(1, 2 m (1 - alpha) / L).
inline double theoretical_min_step(double m, double lipschitz, double alpha) {
  if (!(lipschitz > 0.0)) throw std::invalid_argument("Lipschitz estimate must be positive");
  return std::min(1.0, 2.0 * m * (1.0 - alpha) / lipschitz);
}

template <MetricOperator Metric>
double theoretical_min_step(const Metric& metric, double lipschitz, double alpha) {
  return theoretical_min_step(metric.smallest_eigen_lower_bound(), lipschitz, alpha);
}

/// ||dx||_inf at x with a tight cold-started inner solve. Zero exactly at stationary points.
template <MetricOperator Metric>
double stationarity_check(const CompositeObjective& obj, const Vector& x, const Metric& metric,
                          InnerConfig inner_cfg = {}) {
  require_size(x.size(), obj.dimension(), "stationarity_check");
  const auto grads = smooth_gradient(obj, x);
  const Vector v = assemble_v(grads.grad_f1, grads.grad_f2, obj.nonsmooth().subgrad_h2(x));
  inner_cfg.max_iters = std::max(inner_cfg.max_iters, 200000);
  const double tol = std::min(inner_cfg.tol_floor, 1e-10);
  const auto res = solve_direction(metric, x, v, obj.nonsmooth(), inner_cfg, tol);
  return x.size() > 0 ? (res.z - x).cwiseAbs().maxCoeff() : 0.0;
}

/// DC proximal Newton method with an L-BFGS metric on f1.
///
/// Each iteration linearizes f2 and h2 at x_k, computes the direction
/// dx = prox_{h1}^{H}(x_k - H^{-1} v_k) - x_k with v_k = grad f1 - grad f2 - z_h2,
/// and backtracks from t = 1 until F(x_k + t dx) - F(x_k) <= alpha t D_k.
class DcProxNewton {
 public:
  DcProxNewton(OuterConfig outer = {}, InnerConfig inner = {}) : outer_(std::move(outer)), inner_(inner) {
    outer_.validate();
    inner_.validate();
  }

  const LbfgsMetric* last_metric() const { return metric_ ? &*metric_ : nullptr; }

  SolveResult solve(const CompositeObjective& obj) {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    const Index d = obj.dimension();
    const DcNonsmooth& pen = obj.nonsmooth();

    Vector x = outer_.x0 ? *outer_.x0 : Vector::Zero(d);
    require_size(x.size(), d, "initial point");

    metric_.emplace(d, outer_.metric);
    InnerSolver inner(inner_);

    SolveResult out;
    SolveTrace& trace = out.trace;
    auto eval = obj.smooth().evaluate(x, true);
    trace.evals += 2;
    double objective = eval.f1 - eval.f2 + pen.value_h1(x) - pen.value_h2(x);
    if (!std::isfinite(objective)) throw std::domain_error("objective is not finite at the initial point");
    trace.initial_objective = objective;

    double last_step_norm = 0.0;
    double lipschitz_est = 0.0;
    trace.status = SolveStatus::max_iters;

    for (int k = 0; k < outer_.max_outer_iters; ++k) {
      const Vector z_h2 = pen.subgrad_h2(x);
      const Vector v = assemble_v(eval.grad_f1, eval.grad_f2, z_h2);
      const double h1_x = pen.value_h1(x);

      double tol = adaptive_tolerance(k, last_step_norm, inner_);
      Vector dx;
      double descent = 0.0;
      double dx_h_dx = 0.0;
      int inner_iters = 0;
      bool usable = false;
      for (int attempt = 0; attempt <= outer_.max_direction_retries; ++attempt) {
        const auto res = inner.solve(*metric_, x, v, pen, tol);
        inner_iters += res.iterations;
        dx = res.z - x;
        descent = v.dot(dx) + pen.value_h1(res.z) - h1_x;
        dx_h_dx = dx.dot(metric_->apply_H(dx));
        const bool negative = descent < 0.0;
        const bool metric_bound = descent <= -dx_h_dx + 10.0 * tol;
        if ((negative && metric_bound) || dx.size() == 0 || dx.cwiseAbs().maxCoeff() == 0.0) {
          usable = true;
          break;
        }
        if (attempt == outer_.max_direction_retries) {
          usable = negative;
          break;
        }
        tol /= 100.0;
      }

      if (dx.size() == 0 || dx.cwiseAbs().maxCoeff() == 0.0) {
        trace.status = SolveStatus::converged;
        break;
      }
      if (!usable) {
        trace.status = SolveStatus::line_search_failed;
        out.message = "no descent direction: D_k = " + std::to_string(descent) + " at iteration " + std::to_string(k);
        break;
      }

      double t = 1.0;
      bool accepted = false;
      int backtracks = 0;
      Vector x_new;
      double objective_new = objective;
      for (; backtracks <= outer_.max_backtracks; ++backtracks) {
        x_new = x + t * dx;
        objective_new = composite_value_unchecked(obj, x_new);
        trace.evals += 1;
        if (std::isfinite(objective_new) && objective_new - objective <= outer_.alpha * t * descent) {
          accepted = true;
          break;
        }
        t *= outer_.backtrack_factor;
      }
      if (!accepted) {
        trace.status = SolveStatus::line_search_failed;
        out.message = "backtracking exhausted at iteration " + std::to_string(k);
        break;
      }

      const double metric_min_eig = metric_->smallest_eigen_lower_bound();
      auto eval_new = obj.smooth().evaluate(x_new, true);
      trace.evals += 2;
      const Vector s = x_new - x;
      const Vector y = eval_new.grad_f1 - eval.grad_f1;
      if (s.norm() > 0.0) lipschitz_est = std::max(lipschitz_est, y.norm() / s.norm());
      metric_->update(s, y);

      IterationRecord rec;
      rec.iter = k;
      rec.prev_objective = objective;
      rec.objective = objective_new;
      rec.step = t;
      rec.dx_inf = dx.cwiseAbs().maxCoeff();
      rec.descent = descent;
      rec.dx_h_dx = dx_h_dx;
      rec.inner_tol = tol;
      rec.inner_iters = inner_iters;
      rec.backtracks = backtracks;
      rec.lipschitz_estimate = lipschitz_est;
      rec.metric_min_eig = metric_min_eig;
      rec.evals = trace.evals;
      rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
      trace.records.push_back(rec);

      const double rel_change = std::abs(objective_new - objective) / std::max(1.0, std::abs(objective));
      x = std::move(x_new);
      eval = std::move(eval_new);
      objective = objective_new;
      last_step_norm = s.cwiseAbs().maxCoeff();
      if (rel_change < outer_.rel_obj_tol) {
        trace.status = SolveStatus::converged;
        break;
      }
    }

    trace.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    out.report.objective = objective;
    out.report.iterations = static_cast<int>(trace.records.size());
    out.report.direction_norm = stationarity_check(obj, x, *metric_, inner_);
    out.x = std::move(x);
    return out;
  }

 private:
  static double composite_value_unchecked(const CompositeObjective& obj, const Vector& x) {
    const auto e = obj.smooth().evaluate(x, false);
    return e.f1 - e.f2 + obj.nonsmooth().value_h1(x) - obj.nonsmooth().value_h2(x);
  }

  OuterConfig outer_;
  InnerConfig inner_;
  std::optional<LbfgsMetric> metric_;
};

inline SolveResult dc_prox_newton_solve(const CompositeObjective& obj, const OuterConfig& outer = {},
                                        const InnerConfig& inner = {}) {
  DcProxNewton solver(outer, inner);
  return solver.solve(obj);
}

}  // namespace dcpn
