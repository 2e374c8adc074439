#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

#include "core_types.hpp"
#include "dc_objective.hpp"
#include "metric_lbfgs.hpp"

namespace dcpn {

struct InnerConfig {
  int max_iters = 500;
  double tol_floor = 1e-8;
  double tol_scale = 0.1;
  double lipschitz_safety = 1.1;
  bool warm_start = true;
  std::uint64_t probe_seed = 0x5eedULL;

  void validate() const {
    if (!(tol_floor > 0.0)) throw std::invalid_argument("inner tol_floor must be positive");
    if (!(tol_scale > 0.0 && tol_scale < 1.0)) throw std::invalid_argument("inner tol_scale must be in (0,1)");
    if (max_iters < 1) throw std::invalid_argument("inner max_iters must be >= 1");
    if (!(lipschitz_safety >= 1.0)) throw std::invalid_argument("lipschitz_safety must be >= 1");
  }
};

struct InnerResult {
  Vector z;               // approximate minimizer; the direction is z - x_k
  int iterations = 0;
  double final_step = 0.0;  // last forward-backward step eta
  double residual = 0.0;    // last ||y_{t+1} - y_t||_inf
  double lipschitz_estimate = 0.0;
  bool hit_max_iters = false;
};

inline Vector assemble_v(const Vector& grad_f1, const Vector& z_f2, const Vector& z_h2) {
  require_size(z_f2.size(), grad_f1.size(), "assemble_v z_f2");
  require_size(z_h2.size(), grad_f1.size(), "assemble_v z_h2");
  return grad_f1 - z_f2 - z_h2;
}

/// Inner tolerance schedule: loose on the first outer iteration, then tied to the
/// size of the previous accepted step.
inline double adaptive_tolerance(int outer_iter, double last_step_norm, const InnerConfig& cfg) {
  if (outer_iter <= 0) return std::max(cfg.tol_floor, 1e-3);
  return std::max(cfg.tol_floor, cfg.tol_scale * last_step_norm);
}

/// Forward-backward solve of
///   min_y 0.5 y^T H y + y^T (v - H x) + h1(y),
/// i.e. the scaled proximal point prox_{h1}^H(x - H^{-1} v).
///
/// The step is 1 / (safety * L) where L is the running maximum of the quotients
/// ||grad g(y) - grad g(y')|| / ||y - y'|| seen so far, seeded by one random probe.
template <MetricOperator Metric>
InnerResult solve_direction(const Metric& metric, const Vector& x_k, const Vector& v_k, const DcNonsmooth& pen,
                            const InnerConfig& cfg, double tol, const Vector* warm = nullptr,
                            std::mt19937_64* rng = nullptr) {
  const Index d = metric.dimension();
  require_size(x_k.size(), d, "solve_direction x_k");
  require_size(v_k.size(), d, "solve_direction v_k");
  if (!(tol > 0.0)) throw std::invalid_argument("inner tolerance must be positive");

  const Vector shift = v_k - metric.apply_H(x_k);
  Vector y = (warm != nullptr && warm->size() == d && warm->allFinite()) ? *warm : x_k;
  Vector hy = metric.apply_H(y);

  double lip = 0.0;
  if (d > 0) {
    std::mt19937_64 local(cfg.probe_seed);
    std::mt19937_64& gen = rng != nullptr ? *rng : local;
    std::normal_distribution<double> normal;
    Vector probe(d);
    for (Index i = 0; i < d; ++i) probe[i] = normal(gen);
    if (probe.norm() == 0.0) probe.setOnes();
    probe *= 1e-2 / probe.norm();
    lip = metric.apply_H(probe).norm() / probe.norm();
  }
  if (!(lip > 0.0) || !std::isfinite(lip)) lip = 1.0;

  InnerResult result;
  for (int t = 0; t < cfg.max_iters; ++t) {
    const double eta = 1.0 / (cfg.lipschitz_safety * lip);
    const Vector grad = hy + shift;
    Vector y_next = pen.prox_h1_scalar(y - eta * grad, eta);
    if (!y_next.allFinite()) throw std::domain_error("inner solver produced a non-finite iterate");
    Vector hy_next = metric.apply_H(y_next);

    const Vector diff = y_next - y;
    const double diff_norm = diff.norm();
    if (diff_norm > 0.0) {
      const double quotient = (hy_next - hy).norm() / diff_norm;
      if (std::isfinite(quotient)) lip = std::max(lip, quotient);
    }
    result.residual = d > 0 ? diff.cwiseAbs().maxCoeff() : 0.0;
    result.final_step = eta;
    result.iterations = t + 1;
    y = std::move(y_next);
    hy = std::move(hy_next);
    if (result.residual <= tol) break;
    if (t + 1 == cfg.max_iters) result.hit_max_iters = true;
  }
  result.z = std::move(y);
  result.lipschitz_estimate = lip;
  return result;
}

/// Stateful wrapper that warm-starts each solve from the previous minimizer.
class InnerSolver {
 public:
  explicit InnerSolver(InnerConfig cfg = {}) : cfg_(cfg), rng_(cfg.probe_seed) { cfg_.validate(); }

  const InnerConfig& config() const { return cfg_; }

  template <MetricOperator Metric>
  InnerResult solve(const Metric& metric, const Vector& x_k, const Vector& v_k, const DcNonsmooth& pen,
                    double tol) {
    const Vector* warm = (cfg_.warm_start && last_z_) ? &*last_z_ : nullptr;
    auto res = solve_direction(metric, x_k, v_k, pen, cfg_, tol, warm, &rng_);
    last_z_ = res.z;
    return res;
  }

  void reset() { last_z_.reset(); }

 private:
  InnerConfig cfg_;
  std::mt19937_64 rng_;
  std::optional<Vector> last_z_;
};

}  // namespace dcpn
