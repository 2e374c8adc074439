#pragma once

#include <cmath>
#include <stdexcept>

#include "core_types.hpp"
#include "dc_objective.hpp"

namespace dcpn {

/// g(u) = log(1 + exp(-u)), evaluated without overflow.
inline double softplus_neg(double u) {
  return u >= 0.0 ? std::log1p(std::exp(-u)) : -u + std::log1p(std::exp(u));
}

/// g'(u) = -1 / (1 + exp(u)).
inline double softplus_neg_deriv(double u) {
  if (u >= 0.0) {
    const double e = std::exp(-u);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(u));
}

/// Sum of log(1 + exp(-y_i a_i^T x)) over a labeled dataset; f2 = 0.
class LogisticLoss final : public DcSmooth {
 public:
  explicit LogisticLoss(Dataset data) : data_(std::move(data)) {
    data_.validate();
    if (data_.n_rows() > 0 && !data_.labeled()) throw std::invalid_argument("logistic loss needs labels");
  }

  Index dimension() const override { return data_.n_cols(); }
  const Dataset& data() const { return data_; }
  bool f2_vanishes() const override { return true; }

  SmoothEval evaluate(const Vector& x, bool with_gradients) const override {
    require_size(x.size(), dimension(), "logistic loss");
    SmoothEval out;
    const Vector margins = spmv(data_.features, x);
    Vector weights(margins.size());
    for (Index i = 0; i < margins.size(); ++i) {
      const double y = data_.labels[i];
      out.f1 += softplus_neg(y * margins[i]);
      weights[i] = y * softplus_neg_deriv(y * margins[i]);
    }
    if (with_gradients) {
      out.grad_f1 = spmv_transpose(data_.features, weights);
      out.grad_f2 = Vector::Zero(dimension());
    }
    return out;
  }

 private:
  Dataset data_;
};

struct TransductiveScalar {
  double t = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  double dt1 = 0.0;
  double dt2 = 0.0;
};

/// Symmetric transductive loss T(u) = 1 - g1(u) - g1(-u), g1(u) = (g(u) - g(u+tau)) / tau,
/// together with its convex parts T1, T2 (T = T1 - T2) and their derivatives.
inline TransductiveScalar transductive_scalar(double u, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  const double gu = softplus_neg(u);
  const double gmu = softplus_neg(-u);
  const double gu_shift = softplus_neg(u + tau);
  const double gmu_shift = softplus_neg(-u + tau);
  TransductiveScalar s;
  const double g1 = (gu - gu_shift) / tau;
  const double g2 = (gmu - gmu_shift) / tau;
  s.t = 1.0 - g1 - g2;
  s.t1 = 1.0 + (gu_shift + gmu_shift) / tau;
  s.t2 = (gu + gmu) / tau;
  s.dt1 = (softplus_neg_deriv(u + tau) - softplus_neg_deriv(-u + tau)) / tau;
  s.dt2 = (softplus_neg_deriv(u) - softplus_neg_deriv(-u)) / tau;
  return s;
}

/// Logistic loss on labeled rows plus gamma * sum_j T(b_j^T x) on unlabeled rows.
class TransductiveLogisticLoss final : public DcSmooth {
 public:
  TransductiveLogisticLoss(Dataset labeled, Dataset unlabeled, double gamma, double tau = 1.0)
      : labeled_(std::move(labeled)), unlabeled_(std::move(unlabeled)), gamma_(gamma), tau_(tau) {
    if (!(gamma_ >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
    if (!(tau_ > 0.0)) throw std::invalid_argument("tau must be positive");
    if (unlabeled_.n_rows() > 0 && unlabeled_.n_cols() != labeled_.dimension()) {
      throw DimensionError("labeled and unlabeled feature counts differ");
    }
  }

  Index dimension() const override { return labeled_.dimension(); }
  double gamma() const { return gamma_; }
  double tau() const { return tau_; }
  bool f2_vanishes() const override { return gamma_ == 0.0 || unlabeled_.n_rows() == 0; }

  SmoothEval evaluate(const Vector& x, bool with_gradients) const override {
    SmoothEval out = labeled_.evaluate(x, with_gradients);
    if (with_gradients) out.grad_f2 = Vector::Zero(dimension());
    if (gamma_ == 0.0 || unlabeled_.n_rows() == 0) return out;

    const Vector margins = spmv(unlabeled_.features, x);
    Vector w1(margins.size());
    Vector w2(margins.size());
    double sum_t1 = 0.0;
    double sum_t2 = 0.0;
    for (Index j = 0; j < margins.size(); ++j) {
      const auto s = transductive_scalar(margins[j], tau_);
      sum_t1 += s.t1;
      sum_t2 += s.t2;
      w1[j] = gamma_ * s.dt1;
      w2[j] = gamma_ * s.dt2;
    }
    out.f1 += gamma_ * sum_t1;
    out.f2 += gamma_ * sum_t2;
    if (with_gradients) {
      out.grad_f1 += spmv_transpose(unlabeled_.features, w1);
      out.grad_f2 = spmv_transpose(unlabeled_.features, w2);
    }
    return out;
  }

 private:
  LogisticLoss labeled_;
  Dataset unlabeled_;
  double gamma_;
  double tau_;
};

/// f1(x) = 0.5 x^T Q x - b^T x (+ constant) with Q symmetric positive semidefinite; f2 = 0.
class QuadraticLoss final : public DcSmooth {
 public:
  QuadraticLoss(Eigen::MatrixXd q, Vector b) : q_(std::move(q)), b_(std::move(b)) {
    if (q_.rows() != q_.cols() || q_.rows() != b_.size()) throw DimensionError("quadratic loss shape");
  }

  /// 0.5 ||x - c||^2
  static QuadraticLoss centered(const Vector& c) {
    QuadraticLoss q(Eigen::MatrixXd::Identity(c.size(), c.size()), c);
    q.constant_ = 0.5 * c.squaredNorm();
    return q;
  }

  Index dimension() const override { return b_.size(); }
  bool f2_vanishes() const override { return true; }

  SmoothEval evaluate(const Vector& x, bool with_gradients) const override {
    require_size(x.size(), dimension(), "quadratic loss");
    SmoothEval out;
    const Vector qx = q_ * x;
    out.f1 = 0.5 * x.dot(qx) - b_.dot(x) + constant_;
    if (with_gradients) {
      out.grad_f1 = qx - b_;
      out.grad_f2 = Vector::Zero(dimension());
    }
    return out;
  }

  std::optional<double> lipschitz_f1() const override {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q_, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
  }

 private:
  Eigen::MatrixXd q_;
  Vector b_;
  double constant_ = 0.0;
};

}  // namespace dcpn
