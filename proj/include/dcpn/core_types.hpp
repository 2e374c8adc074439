#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dcpn {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_size(Index got, Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Compressed sparse row matrix. Column indices are strictly increasing within a row.
class SparseRowMatrix {
 public:
  struct Entry {
    Index col;
    double value;
  };

  SparseRowMatrix() = default;
  explicit SparseRowMatrix(Index n_cols) : n_cols_(n_cols) {}

  /// Build from row lists; each row is sorted and checked for duplicates/out-of-range columns.
  static SparseRowMatrix from_rows(Index n_cols, std::vector<std::vector<Entry>> rows) {
    SparseRowMatrix m(n_cols);
    for (auto& row : rows) m.push_row(std::move(row));
    return m;
  }

  static SparseRowMatrix from_dense(const Eigen::MatrixXd& dense) {
    SparseRowMatrix m(dense.cols());
    std::vector<Entry> row;
    for (Index i = 0; i < dense.rows(); ++i) {
      row.clear();
      for (Index j = 0; j < dense.cols(); ++j) {
        if (dense(i, j) != 0.0) row.push_back({j, dense(i, j)});
      }
      m.push_row(row);
    }
    return m;
  }

  void push_row(std::vector<Entry> row) {
    std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k].col < 0 || row[k].col >= n_cols_) {
        throw std::out_of_range("column index " + std::to_string(row[k].col) +
                                " outside [0, " + std::to_string(n_cols_) + ")");
      }
      if (k > 0 && row[k].col == row[k - 1].col) {
        throw std::invalid_argument("duplicate column index " + std::to_string(row[k].col));
      }
      if (!std::isfinite(row[k].value)) throw std::invalid_argument("non-finite matrix entry");
    }
    for (const auto& e : row) {
      cols_.push_back(e.col);
      vals_.push_back(e.value);
    }
    row_ptr_.push_back(cols_.size());
  }

  /// Grow the column count (used when appending an intercept column).
  void set_n_cols(Index n_cols) {
    for (Index c : cols_) {
      if (c >= n_cols) throw std::invalid_argument("cannot shrink below an occupied column");
    }
    n_cols_ = n_cols;
  }

  Index n_rows() const { return static_cast<Index>(row_ptr_.size()) - 1; }
  Index n_cols() const { return n_cols_; }
  std::size_t nnz() const { return vals_.size(); }

  std::span<const Index> row_cols(Index i) const {
    return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(Index i) const {
    return {vals_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  double row_dot(Index i, const Vector& x) const {
    double acc = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += vals_[k] * x[cols_[k]];
    return acc;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_rows(), n_cols_);
    for (Index i = 0; i < n_rows(); ++i) {
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d(i, cols_[k]) = vals_[k];
    }
    return d;
  }

  bool operator==(const SparseRowMatrix&) const = default;

 private:
  Index n_cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Index> cols_;
  std::vector<double> vals_;
};

/// out = M x, rows summed left to right.
inline Vector spmv(const SparseRowMatrix& m, const Vector& x) {
  require_size(x.size(), m.n_cols(), "spmv");
  Vector out(m.n_rows());
  for (Index i = 0; i < m.n_rows(); ++i) out[i] = m.row_dot(i, x);
  return out;
}

/// out = M^T r, accumulated row by row in row order.
inline Vector spmv_transpose(const SparseRowMatrix& m, const Vector& r) {
  require_size(r.size(), m.n_rows(), "spmv_transpose");
  Vector out = Vector::Zero(m.n_cols());
  for (Index i = 0; i < m.n_rows(); ++i) {
    const double ri = r[i];
    if (ri == 0.0) continue;
    auto cols = m.row_cols(i);
    auto vals = m.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] += vals[k] * ri;
  }
  return out;
}

struct Dataset {
  SparseRowMatrix features;
  std::vector<int> labels;  // +1/-1, empty for unlabeled sets

  Index n_rows() const { return features.n_rows(); }
  Index n_cols() const { return features.n_cols(); }
  bool labeled() const { return !labels.empty(); }

  void validate() const {
    if (!labels.empty() && static_cast<Index>(labels.size()) != features.n_rows()) {
      throw std::invalid_argument("label count does not match row count");
    }
    for (int y : labels) {
      if (y != 1 && y != -1) throw std::invalid_argument("labels must be +1 or -1");
    }
  }

  bool operator==(const Dataset&) const = default;
};

enum class SolveStatus { converged, max_iters, line_search_failed };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

/// One accepted outer iteration. Fields that a solver does not produce stay NaN / zero.
struct IterationRecord {
  int iter = 0;
  double objective = 0.0;     // F(x_{k+1})
  double prev_objective = 0.0;  // F(x_k)
  double step = 0.0;          // t_k
  double dx_inf = 0.0;        // ||Δx_k||_inf
  double descent = std::nan("");  // D_k
  double dx_h_dx = std::nan("");  // Δx_k^T H_k Δx_k
  double inner_tol = std::nan("");
  int inner_iters = 0;
  int backtracks = 0;
  double lipschitz_estimate = 0.0;  // running max of ||grad f1 change|| / ||step||
  double metric_min_eig = std::nan("");  // lower bound on the smallest eigenvalue of H_k
  long evals = 0;             // cumulative objective/gradient evaluation equivalents
  double wall_time = 0.0;     // seconds since solve start
};

struct SolveTrace {
  std::vector<IterationRecord> records;
  SolveStatus status = SolveStatus::max_iters;
  long evals = 0;
  double initial_objective = 0.0;
  double wall_time = 0.0;  // seconds spent in the iteration loop

  bool strictly_decreasing() const {
    double prev = initial_objective;
    for (const auto& r : records) {
      if (!(r.objective < prev)) return false;
      prev = r.objective;
    }
    return true;
  }

  double final_objective() const {
    return records.empty() ? initial_objective : records.back().objective;
  }
};

}  // namespace dcpn
