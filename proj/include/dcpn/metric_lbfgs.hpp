#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <deque>
#include <limits>
#include <stdexcept>

#include "core_types.hpp"

namespace dcpn {

/// A symmetric positive definite operator usable as the proximal Newton metric.
template <class M>
concept MetricOperator = requires(const M& m, const Vector& v) {
  { m.apply_H(v) } -> std::convertible_to<Vector>;
  { m.smallest_eigen_lower_bound() } -> std::convertible_to<double>;
  { m.dimension() } -> std::convertible_to<Index>;
};

struct LbfgsOptions {
  int memory = 5;
  double curvature_eps = 1e-10;
  double m_low = 1e-6;
  double m_high = 1e8;
  double initial_gamma = 1.0;
};

/// Limited-memory BFGS approximation B of the Hessian of f1, stored in direct
/// (not inverse) form.
///
/// B is rebuilt from gamma * I by applying the stored pairs oldest-first:
///   B_{i+1} = B_i - (B_i s_i)(B_i s_i)^T / (s_i^T B_i s_i) + y_i y_i^T / (y_i^T s_i).
/// The vectors B_i s_i are cached after every update, so a product costs
/// O(memory * d).
class LbfgsMetric {
 public:
  explicit LbfgsMetric(Index dimension, LbfgsOptions options = {})
      : dim_(dimension), opt_(options), gamma_(options.initial_gamma) {
    if (opt_.memory < 1) throw std::invalid_argument("L-BFGS memory must be >= 1");
    if (!(opt_.m_low > 0.0) || !(opt_.m_high >= opt_.m_low)) throw std::invalid_argument("bad metric clamp");
    gamma_ = std::clamp(gamma_, opt_.m_low, opt_.m_high);
  }

  Index dimension() const { return dim_; }
  double gamma() const { return gamma_; }
  std::size_t stored_pairs() const { return pairs_.size(); }
  const LbfgsOptions& options() const { return opt_; }

  /// Store (s, y) if s^T y > eps ||s|| ||y||. Returns whether the pair was accepted.
  bool update(const Vector& s, const Vector& y) {
    require_size(s.size(), dim_, "metric update s");
    require_size(y.size(), dim_, "metric update y");
    const double sy = s.dot(y);
    const double yy = y.squaredNorm();
    if (!std::isfinite(sy) || !(sy > opt_.curvature_eps * s.norm() * std::sqrt(yy))) return false;

    pairs_.push_back({s, y, sy, Vector(), 0.0});
    if (static_cast<int>(pairs_.size()) > opt_.memory) pairs_.pop_front();
    gamma_ = std::clamp(yy / sy, opt_.m_low, opt_.m_high);
    rebuild();
    return true;
  }

  Vector apply_H(const Vector& v) const {
    require_size(v.size(), dim_, "apply_H");
    Vector out = gamma_ * v;
    for (const auto& p : pairs_) {
      out.noalias() -= (p.bs.dot(v) / p.sbs) * p.bs;
      out.noalias() += (p.y.dot(v) / p.sy) * p.y;
    }
    return out;
  }

  /// Lower bound on the smallest eigenvalue of B via the inverse recursion
  /// H_{i+1} = V^T H_i V + rho s s^T, with ||V|| = rho ||y|| ||s|| exactly
  /// (V = I - rho y s^T and rho y^T s = 1).
  double smallest_eigen_lower_bound() const {
    double inv_bound = 1.0 / gamma_;
    for (const auto& p : pairs_) {
      const double rho = 1.0 / p.sy;
      const double ss = p.s.squaredNorm();
      inv_bound = rho * rho * p.y.squaredNorm() * ss * inv_bound + rho * ss;
    }
    return std::max(1.0 / inv_bound, std::numeric_limits<double>::denorm_min());
  }

  void reset() {
    pairs_.clear();
    gamma_ = std::clamp(opt_.initial_gamma, opt_.m_low, opt_.m_high);
  }

 private:
  struct Pair {
    Vector s;
    Vector y;
    double sy;
    Vector bs;   // B_i s_i with B_i built from the older pairs
    double sbs;  // s_i^T B_i s_i
  };

  void rebuild() {
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      auto& p = pairs_[i];
      Vector bs = gamma_ * p.s;
      for (std::size_t j = 0; j < i; ++j) {
        const auto& q = pairs_[j];
        bs.noalias() -= (q.bs.dot(p.s) / q.sbs) * q.bs;
        bs.noalias() += (q.y.dot(p.s) / q.sy) * q.y;
      }
      p.sbs = p.s.dot(bs);
      p.bs = std::move(bs);
    }
  }

  Index dim_;
  LbfgsOptions opt_;
  double gamma_;
  std::deque<Pair> pairs_;
};

/// Explicit dense SPD metric. Used for exact-Hessian runs and as a test oracle.
class DenseMetric {
 public:
  explicit DenseMetric(Eigen::MatrixXd h) : h_(std::move(h)) {
    if (h_.rows() != h_.cols()) throw DimensionError("metric must be square");
  }

  Index dimension() const { return h_.rows(); }
  const Eigen::MatrixXd& matrix() const { return h_; }

  Vector apply_H(const Vector& v) const {
    require_size(v.size(), dimension(), "apply_H");
    return h_ * v;
  }

  double smallest_eigen_lower_bound() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h_, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
  }

 private:
  Eigen::MatrixXd h_;
};

}  // namespace dcpn
