#pragma once

#include <memory>
#include <optional>
#include <stdexcept>

#include "core_types.hpp"

namespace dcpn {

/// Values and gradients of both convex parts of a smooth f = f1 - f2.
struct SmoothEval {
  double f1 = 0.0;
  double f2 = 0.0;
  Vector grad_f1;
  Vector grad_f2;
};

/// Smooth term f = f1 - f2 with f1, f2 convex and grad f1 Lipschitz.
class DcSmooth {
 public:
  virtual ~DcSmooth() = default;

  virtual Index dimension() const = 0;

  /// Values of f1 and f2; gradients are filled only when `with_gradients`.
  virtual SmoothEval evaluate(const Vector& x, bool with_gradients) const = 0;

  /// Known Lipschitz constant of grad f1, if any.
  virtual std::optional<double> lipschitz_f1() const { return std::nullopt; }

  /// True when f2 is identically zero.
  virtual bool f2_vanishes() const { return false; }

  double value_f1(const Vector& x) const { return evaluate(x, false).f1; }
  double value_f2(const Vector& x) const { return evaluate(x, false).f2; }
  Vector grad_f1(const Vector& x) const { return evaluate(x, true).grad_f1; }
  Vector grad_f2(const Vector& x) const { return evaluate(x, true).grad_f2; }
  double value(const Vector& x) const {
    auto e = evaluate(x, false);
    return e.f1 - e.f2;
  }
};

/// Nonsmooth term h = h1 - h2 with h1, h2 convex.
///
/// Only the scalar-step prox of h1 is required by the proximal Newton solver;
/// the metric-scaled prox is assembled by the inner solver. `prox_full` is the
/// prox of the whole (possibly nonconvex) h, used by the GIST baseline.
class DcNonsmooth {
 public:
  virtual ~DcNonsmooth() = default;

  virtual double value_h1(const Vector& x) const = 0;
  virtual double value_h2(const Vector& x) const = 0;
  /// Deterministic element of the subdifferential of h2 at x.
  virtual Vector subgrad_h2(const Vector& x) const = 0;
  /// argmin_y 0.5 ||y - u||^2 / step + h1(y)
  virtual Vector prox_h1_scalar(const Vector& u, double step) const = 0;
  /// argmin_y 0.5 ||y - u||^2 / step + h1(y) - h2(y)
  virtual Vector prox_full(const Vector& u, double step) const = 0;
  /// True when h2 is identically zero.
  virtual bool h2_vanishes() const { return false; }

  double value(const Vector& x) const { return value_h1(x) - value_h2(x); }
};

/// h = 0. Useful for smooth problems and tests.
class ZeroPenalty final : public DcNonsmooth {
 public:
  double value_h1(const Vector&) const override { return 0.0; }
  double value_h2(const Vector&) const override { return 0.0; }
  Vector subgrad_h2(const Vector& x) const override { return Vector::Zero(x.size()); }
  Vector prox_h1_scalar(const Vector& u, double step) const override {
    if (!(step > 0.0)) throw std::invalid_argument("prox step must be positive");
    return u;
  }
  Vector prox_full(const Vector& u, double step) const override { return prox_h1_scalar(u, step); }
  bool h2_vanishes() const override { return true; }
};

/// F = f1 - f2 + h1 - h2. Holds shared ownership of immutable terms.
class CompositeObjective {
 public:
  CompositeObjective(std::shared_ptr<const DcSmooth> smooth, std::shared_ptr<const DcNonsmooth> nonsmooth)
      : smooth_(std::move(smooth)), nonsmooth_(std::move(nonsmooth)) {
    if (!smooth_ || !nonsmooth_) throw std::invalid_argument("objective terms must be non-null");
  }

  Index dimension() const { return smooth_->dimension(); }
  const DcSmooth& smooth() const { return *smooth_; }
  const DcNonsmooth& nonsmooth() const { return *nonsmooth_; }
  std::shared_ptr<const DcSmooth> smooth_ptr() const { return smooth_; }
  std::shared_ptr<const DcNonsmooth> nonsmooth_ptr() const { return nonsmooth_; }

 private:
  std::shared_ptr<const DcSmooth> smooth_;
  std::shared_ptr<const DcNonsmooth> nonsmooth_;
};

inline double composite_value(const CompositeObjective& obj, const Vector& x) {
  require_size(x.size(), obj.dimension(), "composite_value");
  const auto e = obj.smooth().evaluate(x, false);
  const double h1 = obj.nonsmooth().value_h1(x);
  const double h2 = obj.nonsmooth().value_h2(x);
  const double value = e.f1 - e.f2 + h1 - h2;
  if (!std::isfinite(value)) throw std::domain_error("composite objective is not finite");
  return value;
}

struct SmoothGradients {
  Vector grad_f1;
  Vector grad_f2;
};

inline SmoothGradients smooth_gradient(const CompositeObjective& obj, const Vector& x) {
  require_size(x.size(), obj.dimension(), "smooth_gradient");
  auto e = obj.smooth().evaluate(x, true);
  return {std::move(e.grad_f1), std::move(e.grad_f2)};
}

}  // namespace dcpn
