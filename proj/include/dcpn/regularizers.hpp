#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "core_types.hpp"
#include "dc_objective.hpp"

namespace dcpn {

namespace detail {

inline double soft_threshold(double u, double thresh) {
  if (u > thresh) return u - thresh;
  if (u < -thresh) return u + thresh;
  return 0.0;
}

inline void require_finite(const Vector& x) {
  if (!x.allFinite()) throw std::domain_error("penalty evaluated at a non-finite point");
}

inline void require_positive_step(double step) {
  if (!(step > 0.0)) throw std::invalid_argument("prox step must be positive");
}

}  // namespace detail

/// Shared coordinate weighting: every coordinate carries `lambda` except an
/// optional unpenalized one (the intercept).
class SeparablePenaltyBase : public DcNonsmooth {
 public:
  SeparablePenaltyBase(double lambda, std::optional<Index> unpenalized)
      : lambda_(lambda), unpenalized_(unpenalized) {
    if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw std::invalid_argument("lambda must be >= 0");
  }

  double lambda() const { return lambda_; }
  std::optional<Index> unpenalized() const { return unpenalized_; }

 protected:
  double weight(Index i) const { return unpenalized_ && *unpenalized_ == i ? 0.0 : lambda_; }

  double weighted_l1(const Vector& x) const {
    double acc = 0.0;
    for (Index i = 0; i < x.size(); ++i) acc += weight(i) * std::abs(x[i]);
    return acc;
  }

  Vector soft_threshold_all(const Vector& u, double step) const {
    Vector y(u.size());
    for (Index i = 0; i < u.size(); ++i) y[i] = detail::soft_threshold(u[i], step * weight(i));
    return y;
  }

  double lambda_;
  std::optional<Index> unpenalized_;
};

/// h1 = lambda ||x||_1, h2 = 0.
class L1Penalty final : public SeparablePenaltyBase {
 public:
  explicit L1Penalty(double lambda, std::optional<Index> unpenalized = std::nullopt)
      : SeparablePenaltyBase(lambda, unpenalized) {}

  double value_h1(const Vector& x) const override {
    detail::require_finite(x);
    return weighted_l1(x);
  }
  double value_h2(const Vector& x) const override {
    detail::require_finite(x);
    return 0.0;
  }
  Vector subgrad_h2(const Vector& x) const override { return Vector::Zero(x.size()); }
  Vector prox_h1_scalar(const Vector& u, double step) const override {
    detail::require_positive_step(step);
    return soft_threshold_all(u, step);
  }
  Vector prox_full(const Vector& u, double step) const override { return prox_h1_scalar(u, step); }
  bool h2_vanishes() const override { return true; }
};

/// Coordinate-wise capped l1: h(x) = lambda sum_i min(|x_i|, theta), split as
/// h1 = lambda ||x||_1 and h2 = lambda sum_i (|x_i| - theta)_+.
class CappedL1Penalty final : public SeparablePenaltyBase {
 public:
  CappedL1Penalty(double lambda, double theta, std::optional<Index> unpenalized = std::nullopt)
      : SeparablePenaltyBase(lambda, unpenalized), theta_(theta) {
    if (!(theta_ > 0.0) || !std::isfinite(theta_)) throw std::invalid_argument("theta must be > 0");
  }

  double theta() const { return theta_; }

  double value_h1(const Vector& x) const override {
    detail::require_finite(x);
    return weighted_l1(x);
  }

  double value_h2(const Vector& x) const override {
    detail::require_finite(x);
    double acc = 0.0;
    for (Index i = 0; i < x.size(); ++i) acc += weight(i) * std::max(std::abs(x[i]) - theta_, 0.0);
    return acc;
  }

  /// lambda * sign(x_i) where |x_i| > theta, else 0 (ties go to 0).
  Vector subgrad_h2(const Vector& x) const override {
    detail::require_finite(x);
    Vector z = Vector::Zero(x.size());
    for (Index i = 0; i < x.size(); ++i) {
      if (std::abs(x[i]) > theta_) z[i] = x[i] > 0.0 ? weight(i) : -weight(i);
    }
    return z;
  }

  Vector prox_h1_scalar(const Vector& u, double step) const override {
    detail::require_positive_step(step);
    return soft_threshold_all(u, step);
  }

  /// Exact per-coordinate minimizer of 0.5 (y - u)^2 / step + lambda min(|y|, theta).
  /// The minimizer lies on the capped branch (|y| >= theta, y = u clipped away
  /// from zero) or the l1 branch (|y| <= theta, soft threshold clipped to theta);
  /// the lower objective wins and ties go to the smaller magnitude.
  Vector prox_full(const Vector& u, double step) const override {
    detail::require_positive_step(step);
    Vector y(u.size());
    for (Index i = 0; i < u.size(); ++i) {
      const double lam = weight(i);
      const double ui = u[i];
      const double sign = ui < 0.0 ? -1.0 : 1.0;
      const double abs_u = std::abs(ui);
      const double cap = sign * std::max(abs_u, theta_);
      const double l1 = sign * std::min(theta_, std::max(abs_u - step * lam, 0.0));
      auto objective = [&](double v) {
        return 0.5 * (v - ui) * (v - ui) / step + lam * std::min(std::abs(v), theta_);
      };
      const double obj_cap = objective(cap);
      const double obj_l1 = objective(l1);
      if (obj_l1 < obj_cap) {
        y[i] = l1;
      } else if (obj_cap < obj_l1) {
        y[i] = cap;
      } else {
        y[i] = std::abs(l1) <= std::abs(cap) ? l1 : cap;
      }
    }
    return y;
  }

 private:
  double theta_;
};

}  // namespace dcpn
