#pragma once

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "core_types.hpp"

namespace dcpn {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parse libsvm text: "<label> idx:val idx:val ..." with 1-based indices.
/// Labels {0, 1} are mapped to {-1, +1}; mixing 0 and -1 is rejected.
/// When `unlabeled` is set the label column is parsed but dropped.
inline Dataset parse_libsvm(std::istream& in, std::optional<Index> n_features = std::nullopt,
                            bool unlabeled = false) {
  std::vector<std::vector<SparseRowMatrix::Entry>> rows;
  std::vector<double> raw_labels;
  Index max_col = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;

    char* end = nullptr;
    errno = 0;
    const double label = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0' || errno == ERANGE) throw ParseError(line_no, "bad label '" + tok + "'");
    if (!unlabeled && label != 1.0 && label != -1.0 && label != 0.0) {
      throw ParseError(line_no, "label must be one of -1, 0, +1, got '" + tok + "'");
    }

    std::vector<SparseRowMatrix::Entry> row;
    long long prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError(line_no, "expected idx:value, got '" + tok + "'");
      const std::string idx_str = tok.substr(0, colon);
      const std::string val_str = tok.substr(colon + 1);
      errno = 0;
      const long long idx = std::strtoll(idx_str.c_str(), &end, 10);
      if (idx_str.empty() || *end != '\0' || errno == ERANGE) throw ParseError(line_no, "bad index '" + idx_str + "'");
      if (idx < 1) throw ParseError(line_no, "indices are 1-based, got " + idx_str);
      if (idx <= prev) throw ParseError(line_no, "indices must be strictly increasing");
      prev = idx;
      errno = 0;
      const double val = std::strtod(val_str.c_str(), &end);
      if (val_str.empty() || *end != '\0' || !std::isfinite(val)) {
        throw ParseError(line_no, "bad value '" + val_str + "'");
      }
      if (n_features && idx > *n_features) {
        throw ParseError(line_no, "index " + idx_str + " exceeds feature count " + std::to_string(*n_features));
      }
      row.push_back({static_cast<Index>(idx - 1), val});
      max_col = std::max<Index>(max_col, static_cast<Index>(idx));
    }
    rows.push_back(std::move(row));
    raw_labels.push_back(label);
  }

  Dataset ds;
  ds.features = SparseRowMatrix::from_rows(n_features.value_or(max_col), std::move(rows));
  if (unlabeled) return ds;

  const std::set<double> alphabet(raw_labels.begin(), raw_labels.end());
  if (alphabet.count(0.0) && alphabet.count(-1.0)) {
    throw ParseError(line_no, "inconsistent label alphabet: both 0 and -1 present");
  }
  ds.labels.reserve(raw_labels.size());
  for (double y : raw_labels) ds.labels.push_back(y > 0.0 ? 1 : -1);
  return ds;
}

inline Dataset read_libsvm(const std::string& path, std::optional<Index> n_features = std::nullopt,
                           bool unlabeled = false) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return parse_libsvm(in, n_features, unlabeled);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + std::string(e.what()).substr(std::string(e.what()).find(':') + 2));
  }
}

/// 17 significant digits, enough to round-trip any double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Unlabeled rows are written with label 0.
inline void write_libsvm(std::ostream& out, const Dataset& ds) {
  for (Index i = 0; i < ds.n_rows(); ++i) {
    out << (ds.labeled() ? (ds.labels[i] > 0 ? "+1" : "-1") : "0");
    auto cols = ds.features.row_cols(i);
    auto vals = ds.features.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) out << ' ' << (cols[k] + 1) << ':' << format_double(vals[k]);
    out << '\n';
  }
}

inline void write_libsvm(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_libsvm(out, ds);
}

/// Sparse model text: a "# dimension <d>" header, then one "idx:value" line per
/// nonzero weight with 1-based indices.
inline void write_model(std::ostream& out, const Vector& x) {
  out << "# dimension " << x.size() << '\n';
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) out << (i + 1) << ':' << format_double(x[i]) << '\n';
  }
}

inline Vector read_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<Index> dim;
  std::vector<std::pair<Index, double>> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hdr(line.substr(1));
      std::string key;
      long long d = -1;
      if (hdr >> key >> d && key == "dimension" && d >= 0) dim = static_cast<Index>(d);
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError(line_no, "expected idx:value");
    char* end = nullptr;
    const long long idx = std::strtoll(line.c_str(), &end, 10);
    if (end != line.c_str() + colon || idx < 1) throw ParseError(line_no, "bad index");
    const char* vstart = line.c_str() + colon + 1;
    const double v = std::strtod(vstart, &end);
    if (end == vstart || !std::isfinite(v)) throw ParseError(line_no, "bad value");
    entries.emplace_back(static_cast<Index>(idx - 1), v);
  }
  if (!dim) throw ParseError(line_no, "missing '# dimension' header");
  Vector x = Vector::Zero(*dim);
  for (const auto& [i, v] : entries) {
    if (i >= *dim) throw std::out_of_range("model index beyond declared dimension");
    x[i] = v;
  }
  return x;
}

/// Per-feature affine map (x - mean) / scale fitted on training data.
/// Absent sparse entries count as zeros; the standard deviation is the population one.
class Standardizer {
 public:
  static Standardizer fit(const Dataset& train, bool center = true) {
    const Index d = train.n_cols();
    const Index n = train.n_rows();
    if (n == 0) throw std::invalid_argument("cannot standardize an empty training set");
    Standardizer s;
    s.center_ = center;
    s.mean_ = Vector::Zero(d);
    s.scale_ = Vector::Ones(d);
    Vector sum = Vector::Zero(d);
    std::vector<Index> nnz(d, 0);
    for (Index i = 0; i < n; ++i) {
      auto cols = train.features.row_cols(i);
      auto vals = train.features.row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        sum[cols[k]] += vals[k];
        ++nnz[cols[k]];
      }
    }
    const Vector mean = sum / static_cast<double>(n);
    Vector sq = Vector::Zero(d);
    for (Index i = 0; i < n; ++i) {
      auto cols = train.features.row_cols(i);
      auto vals = train.features.row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const double c = vals[k] - mean[cols[k]];
        sq[cols[k]] += c * c;
      }
    }
    for (Index j = 0; j < d; ++j) {
      // absent entries contribute (0 - mean)^2 each
      const double total = sq[j] + static_cast<double>(n - nnz[j]) * mean[j] * mean[j];
      const double sd = std::sqrt(total / static_cast<double>(n));
      if (!(sd > kScaleFloor)) continue;  // constant feature: untouched
      s.mean_[j] = center ? mean[j] : 0.0;
      s.scale_[j] = sd;
    }
    return s;
  }

  Dataset transform(const Dataset& ds) const {
    if (ds.n_cols() > mean_.size()) throw DimensionError("dataset has more features than the standardizer");
    Dataset out;
    out.labels = ds.labels;
    out.features = SparseRowMatrix(mean_.size());
    std::vector<SparseRowMatrix::Entry> row;
    Vector dense(mean_.size());
    for (Index i = 0; i < ds.n_rows(); ++i) {
      row.clear();
      auto cols = ds.features.row_cols(i);
      auto vals = ds.features.row_values(i);
      if (center_) {
        dense = -mean_;
        for (std::size_t k = 0; k < cols.size(); ++k) dense[cols[k]] += vals[k];
        for (Index j = 0; j < dense.size(); ++j) {
          const double v = dense[j] / scale_[j];
          if (v != 0.0) row.push_back({j, v});
        }
      } else {
        for (std::size_t k = 0; k < cols.size(); ++k) row.push_back({cols[k], vals[k] / scale_[cols[k]]});
      }
      out.features.push_row(row);
    }
    return out;
  }

  const Vector& mean() const { return mean_; }
  const Vector& scale() const { return scale_; }
  bool centers() const { return center_; }

  static constexpr double kScaleFloor = 1e-12;

 private:
  Vector mean_;
  Vector scale_;
  bool center_ = true;
};

struct StandardizedSets {
  Dataset train;
  std::vector<Dataset> others;
  Standardizer standardizer;
};

inline StandardizedSets fit_apply_standardizer(const Dataset& train, const std::vector<Dataset>& others,
                                               bool center = true) {
  StandardizedSets out;
  out.standardizer = Standardizer::fit(train, center);
  out.train = out.standardizer.transform(train);
  for (const auto& o : others) out.others.push_back(out.standardizer.transform(o));
  return out;
}

/// Adds a constant-1 last column. Returns the new column's index.
inline Index append_intercept(Dataset& ds) {
  const Index col = ds.n_cols();
  SparseRowMatrix m(col + 1);
  std::vector<SparseRowMatrix::Entry> row;
  for (Index i = 0; i < ds.n_rows(); ++i) {
    row.clear();
    auto cols = ds.features.row_cols(i);
    auto vals = ds.features.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) row.push_back({cols[k], vals[k]});
    row.push_back({col, 1.0});
    m.push_row(row);
  }
  ds.features = std::move(m);
  return col;
}

struct ToySpec {
  Index d = 200;
  Index relevant = 10;  // T
  Index n_train = 500;
  Index n_test = 5000;
  Index n_unlabeled = 0;
  std::uint64_t seed = 0;
  bool identity_covariance = false;  // skip the Wishart draw (Sigma = I)
  Index wishart_dof = 0;             // 0 selects T + 1

  Index effective_dof() const { return wishart_dof > 0 ? wishart_dof : relevant + 1; }
};

struct ToyData {
  Dataset train;
  Dataset test;
  Dataset unlabeled;
  Vector mu;
  Eigen::MatrixXd sigma;
};

/// Two Gaussian classes N(+mu, Sigma) / N(-mu, Sigma) on the first T features,
/// Sigma ~ Wishart(I_T, dof) (default dof = T + 1), mu uniform on {-1, +1}^T; the remaining d - T
/// features are N(0, 1) noise for both classes. Classes alternate, so every set
/// is balanced.
inline ToyData generate_toy(const ToySpec& spec) {
  if (spec.relevant > spec.d) throw std::invalid_argument("relevant feature count T exceeds d");
  if (spec.relevant < 0 || spec.d < 1) throw std::invalid_argument("bad toy dimensions");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  const Index t = spec.relevant;

  ToyData out;
  out.mu.resize(t);
  for (Index i = 0; i < t; ++i) out.mu[i] = (rng() & 1U) ? 1.0 : -1.0;
  if (spec.identity_covariance) {
    out.sigma = Eigen::MatrixXd::Identity(t, t);
  } else {
    if (spec.effective_dof() < t) throw std::invalid_argument("Wishart degrees of freedom must be >= T");
    Eigen::MatrixXd w(t, spec.effective_dof());
    for (Index j = 0; j < w.cols(); ++j) {
      for (Index i = 0; i < t; ++i) w(i, j) = normal(rng);
    }
    out.sigma = w * w.transpose();
  }
  const Eigen::MatrixXd chol = t > 0 ? Eigen::MatrixXd(out.sigma.llt().matrixL()) : Eigen::MatrixXd();

  auto sample = [&](Index n, bool keep_labels) {
    Dataset ds;
    ds.features = SparseRowMatrix(spec.d);
    std::vector<SparseRowMatrix::Entry> row;
    Vector z(t);
    for (Index i = 0; i < n; ++i) {
      const int y = (i % 2 == 0) ? 1 : -1;
      for (Index k = 0; k < t; ++k) z[k] = normal(rng);
      const Vector rel = static_cast<double>(y) * out.mu + chol * z;
      row.clear();
      for (Index k = 0; k < t; ++k) row.push_back({k, rel[k]});
      for (Index k = t; k < spec.d; ++k) row.push_back({k, normal(rng)});
      std::erase_if(row, [](const auto& e) { return e.value == 0.0; });
      ds.features.push_row(row);
      if (keep_labels) ds.labels.push_back(y);
    }
    return ds;
  };
  out.train = sample(spec.n_train, true);
  out.test = sample(spec.n_test, true);
  out.unlabeled = sample(spec.n_unlabeled, false);
  return out;
}

/// Seeded random split; `train_fraction` of the rows go to the first set.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train_fraction must be in (0,1)");
  std::vector<Index> order(static_cast<std::size_t>(ds.n_rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(order.size())));
  auto take = [&](std::size_t from, std::size_t to) {
    Dataset out;
    out.features = SparseRowMatrix(ds.n_cols());
    std::vector<SparseRowMatrix::Entry> row;
    for (std::size_t r = from; r < to; ++r) {
      const Index i = order[r];
      row.clear();
      auto cols = ds.features.row_cols(i);
      auto vals = ds.features.row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k) row.push_back({cols[k], vals[k]});
      out.features.push_row(row);
      if (ds.labeled()) out.labels.push_back(ds.labels[i]);
    }
    return out;
  };
  return {take(0, n_train), take(n_train, order.size())};
}

/// Percentage of rows where sign(a^T x) (ties -> +1) matches the label.
inline double classification_accuracy(const Dataset& ds, const Vector& x) {
  if (ds.n_rows() == 0) return 0.0;
  const Vector margins = spmv(ds.features, x);
  Index correct = 0;
  for (Index i = 0; i < ds.n_rows(); ++i) {
    const int pred = margins[i] >= 0.0 ? 1 : -1;
    if (pred == ds.labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(ds.n_rows());
}

}  // namespace dcpn
