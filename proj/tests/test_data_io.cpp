#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

using namespace dcpn;
namespace dt = dcpn::testing;

namespace {

Dataset parse(const std::string& text, std::optional<Index> n = std::nullopt) {
  std::istringstream in(text);
  return parse_libsvm(in, n);
}

double column_mean(const Eigen::MatrixXd& a, Index j) { return a.col(j).mean(); }
double column_var(const Eigen::MatrixXd& a, Index j) {
  const double m = column_mean(a, j);
  return (a.col(j).array() - m).square().mean();
}

}  // namespace

TEST(Libsvm, ParsesLine) {
  const auto ds = parse("+1 1:0.5 3:-2\n");
  ASSERT_EQ(ds.n_rows(), 1);
  EXPECT_EQ(ds.n_cols(), 3);
  EXPECT_EQ(ds.labels, std::vector<int>{1});
  auto cols = ds.features.row_cols(0);
  auto vals = ds.features.row_values(0);
  ASSERT_EQ(cols.size(), 2U);
  EXPECT_EQ(cols[0], 0);
  EXPECT_EQ(vals[0], 0.5);
  EXPECT_EQ(cols[1], 2);
  EXPECT_EQ(vals[1], -2.0);
}

TEST(Libsvm, EmptyInput) {
  const auto ds = parse("");
  EXPECT_EQ(ds.n_rows(), 0);
  EXPECT_TRUE(ds.labels.empty());
}

TEST(Libsvm, ZeroOneLabelsMapped) {
  const auto ds = parse("1 1:1\n0 2:1\n1\n");
  EXPECT_EQ(ds.labels, (std::vector<int>{1, -1, 1}));
  EXPECT_EQ(ds.features.row_cols(2).size(), 0U);
}

TEST(Libsvm, MixedAlphabetRejected) {
  EXPECT_THROW(parse("1 1:1\n0 1:2\n-1 1:3\n"), ParseError);
}

TEST(Libsvm, CommentsAndBlankLinesSkipped) {
  const auto ds = parse("# header\n\n-1 2:4 # trailing\n");
  EXPECT_EQ(ds.n_rows(), 1);
  EXPECT_EQ(ds.labels, std::vector<int>{-1});
}

TEST(Libsvm, ErrorsCarryLineNumbers) {
  struct Case {
    std::string text;
    std::size_t line;
  };
  const std::vector<Case> cases = {
      {"+1 1:1\n+1 2\n", 2},        {"+1 1:1\n+1 0:1\n", 2},     {"x 1:1\n", 1},
      {"+1 1:1\n\n+1 3:1 2:1\n", 3}, {"+1 1:abc\n", 1},           {"+1 1:1\n2 1:1\n", 2},
      {"+1 1:nan\n", 1},              {"+1 a:1\n", 1},
  };
  for (const auto& c : cases) {
    try {
      parse(c.text);
      ADD_FAILURE() << "expected failure for: " << c.text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), c.line) << c.text;
    }
  }
}

TEST(Libsvm, FeatureCountEnforced) {
  EXPECT_EQ(parse("+1 1:1\n", 5).n_cols(), 5);
  EXPECT_THROW(parse("+1 6:1\n", 5), ParseError);
}

TEST(Libsvm, MissingFileNamesPath) {
  try {
    read_libsvm("/nonexistent/dir/data.svm");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/data.svm"), std::string::npos);
  }
}

TEST(Libsvm, RoundTripIsIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto base = dt::random_dataset(1 + trial % 7, 1 + trial % 5, rng, 0.6);
    // Values spanning many magnitudes exercise the 17-digit formatting.
    Dataset ds;
    ds.labels = base.labels;
    ds.features = SparseRowMatrix(base.n_cols());
    for (Index i = 0; i < base.n_rows(); ++i) {
      std::vector<SparseRowMatrix::Entry> row;
      for (Index c : base.features.row_cols(i)) row.push_back({c, unif(rng) * std::pow(10.0, trial % 40 - 20)});
      ds.features.push_row(row);
    }
    std::ostringstream out;
    write_libsvm(out, ds);
    std::istringstream in(out.str());
    EXPECT_EQ(parse_libsvm(in, ds.n_cols()), ds);
  }
}

TEST(Libsvm, RoundTripExtremeValues) {
  Dataset ds;
  ds.features = SparseRowMatrix::from_rows(4, {{{0, 1e-300}, {1, -1.2345678901234567e200}, {3, 0.1}}, {{2, 1.0 / 3.0}}});
  ds.labels = {-1, 1};
  std::ostringstream out;
  write_libsvm(out, ds);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_libsvm(in, 4), ds);
}

TEST(Libsvm, UnlabeledRoundTrip) {
  std::mt19937_64 rng(2);
  auto ds = dt::random_dataset(5, 3, rng, 0.7, false);
  std::ostringstream out;
  write_libsvm(out, ds);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_libsvm(in, 3, true), ds);
}

TEST(Model, RoundTrip) {
  Vector x(5);
  x << 0, 1.5, 0, -1e-7, 1.0 / 3.0;
  std::ostringstream out;
  write_model(out, x);
  EXPECT_NE(out.str().find("2:1.5\n"), std::string::npos);
  std::istringstream in(out.str());
  EXPECT_EQ(read_model(in), x);
  std::istringstream bad("1:2\n");
  EXPECT_THROW(read_model(bad), ParseError);
}

TEST(Standardizer, HandArithmeticColumn) {
  Dataset ds;
  ds.features = SparseRowMatrix::from_rows(1, {{{0, 1.0}}, {{0, 3.0}}});
  ds.labels = {1, -1};
  auto st = fit_apply_standardizer(ds, {});
  EXPECT_EQ(st.standardizer.mean()[0], 2.0);
  EXPECT_EQ(st.standardizer.scale()[0], 1.0);
  const Eigen::MatrixXd t = st.train.features.to_dense();
  EXPECT_EQ(t(0, 0), -1.0);
  EXPECT_EQ(t(1, 0), 1.0);
}

TEST(Standardizer, ConstantFeatureUntouched) {
  Dataset ds;
  ds.features = SparseRowMatrix::from_rows(2, {{{0, 5.0}, {1, 1.0}}, {{0, 5.0}, {1, 2.0}}, {{0, 5.0}}});
  ds.labels = {1, -1, 1};
  auto st = fit_apply_standardizer(ds, {});
  EXPECT_EQ(st.standardizer.scale()[0], 1.0);
  EXPECT_EQ(st.standardizer.mean()[0], 0.0);
  const Eigen::MatrixXd t = st.train.features.to_dense();
  EXPECT_EQ(t.col(0), Vector::Constant(3, 5.0));
}

TEST(Standardizer, TrainColumnsHaveZeroMeanUnitVariance) {
  std::mt19937_64 rng(3);
  auto ds = dt::random_dataset(50, 8, rng, 0.4);
  auto st = fit_apply_standardizer(ds, {});
  const Eigen::MatrixXd t = st.train.features.to_dense();
  for (Index j = 0; j < 8; ++j) {
    EXPECT_LE(std::abs(column_mean(t, j)), 1e-12);
    EXPECT_NEAR(column_var(t, j), 1.0, 1e-10);
  }
}

TEST(Standardizer, OtherSetsUseTrainStatistics) {
  std::mt19937_64 rng(4);
  auto train = dt::random_dataset(20, 4, rng, 0.8);
  auto test = dt::random_dataset(7, 4, rng, 0.8);
  auto st = fit_apply_standardizer(train, {test});
  const Eigen::MatrixXd raw = test.features.to_dense(), got = st.others[0].features.to_dense();
  for (Index i = 0; i < raw.rows(); ++i)
    for (Index j = 0; j < 4; ++j) {
      EXPECT_NEAR(got(i, j), (raw(i, j) - st.standardizer.mean()[j]) / st.standardizer.scale()[j], 1e-14);
    }
  EXPECT_EQ(st.others[0].labels, test.labels);
}

TEST(Standardizer, ScaleOnlyKeepsSparsity) {
  std::mt19937_64 rng(5);
  auto ds = dt::random_dataset(30, 6, rng, 0.3);
  auto st = fit_apply_standardizer(ds, {}, false);
  EXPECT_EQ(st.train.features.nnz(), ds.features.nnz());
  EXPECT_EQ(st.standardizer.mean(), Vector::Zero(6));
  EXPECT_FALSE(st.standardizer.centers());
}

TEST(Standardizer, EmptyTrainRejected) {
  Dataset ds;
  ds.features = SparseRowMatrix(3);
  EXPECT_THROW(Standardizer::fit(ds), std::invalid_argument);
}

TEST(Intercept, AppendsOnesColumn) {
  Dataset ds;
  ds.features = SparseRowMatrix::from_rows(2, {{{1, 2.0}}, {}});
  ds.labels = {1, -1};
  EXPECT_EQ(append_intercept(ds), 2);
  Eigen::MatrixXd want(2, 3);
  want << 0, 2, 1, 0, 0, 1;
  EXPECT_EQ(ds.features.to_dense(), want);
}

TEST(Toy, DeterministicForSeed) {
  ToySpec spec;
  spec.d = 30;
  spec.relevant = 4;
  spec.n_train = 50;
  spec.n_test = 20;
  spec.n_unlabeled = 10;
  spec.seed = 77;
  const auto a = generate_toy(spec), b = generate_toy(spec);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.unlabeled, b.unlabeled);
  spec.seed = 78;
  EXPECT_FALSE(generate_toy(spec).train == a.train);
}

TEST(Toy, ShapesAndBalance) {
  ToySpec spec;
  spec.d = 12;
  spec.relevant = 3;
  spec.n_train = 40;
  spec.n_test = 30;
  spec.n_unlabeled = 25;
  const auto toy = generate_toy(spec);
  EXPECT_EQ(toy.train.n_rows(), 40);
  EXPECT_EQ(toy.test.n_rows(), 30);
  EXPECT_EQ(toy.unlabeled.n_rows(), 25);
  EXPECT_FALSE(toy.unlabeled.labeled());
  EXPECT_EQ(std::count(toy.train.labels.begin(), toy.train.labels.end(), 1), 20);
  for (Index i = 0; i < toy.mu.size(); ++i) EXPECT_EQ(std::abs(toy.mu[i]), 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(toy.sigma);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
}

TEST(Toy, RejectsTooManyRelevantFeatures) {
  ToySpec spec;
  spec.d = 3;
  spec.relevant = 4;
  EXPECT_THROW(generate_toy(spec), std::invalid_argument);
}

TEST(Toy, IrrelevantColumnMoments) {
  ToySpec spec;
  spec.d = 20;
  spec.relevant = 5;
  spec.n_train = 5000;
  spec.n_test = 0;
  spec.seed = 5;
  const Eigen::MatrixXd a = generate_toy(spec).train.features.to_dense();
  for (Index j = 5; j < 20; ++j) {
    EXPECT_LT(std::abs(column_mean(a, j)), 0.1) << j;
    EXPECT_LT(std::abs(column_var(a, j) - 1.0), 0.2) << j;
  }
}

TEST(Toy, OneDimensionalBayesRuleIsLearned) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ToySpec spec;
    spec.d = 1;
    spec.relevant = 1;
    spec.n_train = 200;
    spec.n_test = 2000;
    spec.identity_covariance = true;
    spec.seed = seed;
    // The sign of mu only flips the sign of the learned weight.
    auto toy = generate_toy(spec);
    auto st = fit_apply_standardizer(toy.train, {toy.test});
    CompositeObjective obj(std::make_shared<LogisticLoss>(st.train), std::make_shared<L1Penalty>(1.0));
    const auto res = dc_prox_newton_solve(obj);
    total += classification_accuracy(st.others[0], res.x);
  }
  EXPECT_GT(total / 5.0, 75.0);
}

TEST(Toy, LargestWeightUsuallyOnRelevantFeature) {
  int misplaced = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ToySpec spec;
    spec.d = 50;
    spec.relevant = 5;
    spec.n_train = 2000;
    spec.n_test = 0;
    spec.seed = 100 + seed;
    auto toy = generate_toy(spec);
    auto st = fit_apply_standardizer(toy.train, {});
    CompositeObjective obj(std::make_shared<LogisticLoss>(st.train), std::make_shared<L1Penalty>(2.0));
    const auto res = dc_prox_newton_solve(obj);
    Index arg = 0;
    res.x.cwiseAbs().maxCoeff(&arg);
    if (arg >= 5) ++misplaced;
  }
  EXPECT_LE(misplaced, 2);
}

TEST(Split, PartitionsRowsDeterministically) {
  std::mt19937_64 rng(6);
  auto ds = dt::random_dataset(50, 3, rng);
  const auto [a, b] = train_test_split(ds, 0.8, 9);
  EXPECT_EQ(a.n_rows(), 40);
  EXPECT_EQ(b.n_rows(), 10);
  const auto [c, d] = train_test_split(ds, 0.8, 9);
  EXPECT_EQ(a, c);
  EXPECT_EQ(b, d);
  EXPECT_THROW(train_test_split(ds, 1.0, 1), std::invalid_argument);
}

TEST(Accuracy, TiesPredictPositive) {
  Dataset ds;
  ds.features = SparseRowMatrix::from_rows(1, {{}, {{0, 1.0}}, {{0, -1.0}}, {}});
  ds.labels = {1, 1, 1, -1};
  EXPECT_DOUBLE_EQ(classification_accuracy(ds, Vector::Ones(1)), 50.0);
  EXPECT_DOUBLE_EQ(classification_accuracy(ds, Vector::Zero(1)), 75.0);
}
