// dcpn: train sparse (transductive) logistic models and compare DC solvers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcpn/dcpn.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dcpn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitSolver = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Options shared by the subcommands

struct ToyOptions {
  Index d = 200;
  Index relevant = 10;
  Index n_train = 500;
  Index n_test = 5000;
  Index n_unlabeled = 0;
  Index wishart_dof = 0;

  void add(CLI::App& app) {
    app.add_option("--d", d, "Toy dimension")->check(CLI::PositiveNumber);
    app.add_option("--relevant", relevant, "Relevant toy features T")->check(CLI::NonNegativeNumber);
    app.add_option("--n-train", n_train, "Toy training examples")->check(CLI::NonNegativeNumber);
    app.add_option("--n-test", n_test, "Toy test examples")->check(CLI::NonNegativeNumber);
    app.add_option("--n-unlabeled", n_unlabeled, "Toy unlabeled examples")->check(CLI::NonNegativeNumber);
    app.add_option("--wishart-dof", wishart_dof, "Wishart degrees of freedom (0 = T + 1)")
        ->check(CLI::NonNegativeNumber);
  }

  ToySpec spec(std::uint64_t seed) const {
    ToySpec s;
    s.d = d;
    s.relevant = relevant;
    s.n_train = n_train;
    s.n_test = n_test;
    s.n_unlabeled = n_unlabeled;
    s.wishart_dof = wishart_dof;
    s.seed = seed;
    return s;
  }
};

struct ModelOptions {
  std::string loss = "logistic";
  std::string penalty = "capped_l1";
  std::optional<double> lambda;
  std::optional<double> theta;
  std::optional<double> gamma;
  double tau = 1.0;
  bool intercept = false;
  std::string standardize = "auto";
  double rel_tol = 1e-6;
  int max_iters = 0;  // 0 keeps each solver's default

  void add(CLI::App& app, bool with_loss) {
    if (with_loss) {
      app.add_option("--loss", loss, "logistic | transductive")->check(CLI::IsMember({"logistic", "transductive"}));
    }
    app.add_option("--penalty", penalty, "l1 | capped_l1")->check(CLI::IsMember({"l1", "capped_l1"}));
    app.add_option("--lambda", lambda, "Penalty weight (required)")->check(CLI::NonNegativeNumber);
    app.add_option("--theta", theta, "Capped-l1 threshold (required for capped_l1)")->check(CLI::PositiveNumber);
    app.add_option("--gamma", gamma, "Weight of the unlabeled term (required for transductive)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--tau", tau, "Transductive loss width")->check(CLI::PositiveNumber);
    app.add_flag("--intercept", intercept, "Append an unpenalized constant feature");
    app.add_option("--standardize", standardize,
                   "full | scale | none | auto (auto: full for toy data, scale-only for files)")
        ->check(CLI::IsMember({"full", "scale", "none", "auto"}));
    app.add_option("--rel-tol", rel_tol, "Relative objective change stopping tolerance")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--max-iters", max_iters, "Outer iteration cap (0 = solver default)")
        ->check(CLI::NonNegativeNumber);
  }

  void require(bool transductive) const {
    if (!lambda) throw UsageError("--lambda is required");
    if (penalty == "capped_l1" && !theta) throw UsageError("--theta is required for the capped_l1 penalty");
    if (transductive && !gamma) throw UsageError("--gamma is required for the transductive loss");
  }

  std::string standardize_mode(bool toy) const {
    if (standardize != "auto") return standardize;
    return toy ? "full" : "scale";
  }
};

// ---------------------------------------------------------------------------
// Data preparation

struct Problem {
  Dataset train;
  Dataset test;
  Dataset unlabeled;
  bool has_test = false;
  std::optional<Index> intercept_col;
};

Dataset load(const std::string& path, bool unlabeled = false) {
  if (!fs::exists(path)) throw std::runtime_error("cannot open '" + path + "': no such file");
  return read_libsvm(path, std::nullopt, unlabeled);
}

void align_columns(std::vector<Dataset*> sets) {
  Index d = 0;
  for (auto* s : sets) d = std::max(d, s->n_cols());
  for (auto* s : sets) s->features.set_n_cols(d);
}

void prepare(Problem& p, const std::string& mode, bool intercept) {
  align_columns({&p.train, &p.test, &p.unlabeled});
  if (mode != "none") {
    if (p.train.n_rows() == 0) throw std::runtime_error("training set is empty");
    auto st = fit_apply_standardizer(p.train, {p.test, p.unlabeled}, mode == "full");
    p.train = std::move(st.train);
    p.test = std::move(st.others[0]);
    p.unlabeled = std::move(st.others[1]);
  }
  if (intercept) {
    p.intercept_col = append_intercept(p.train);
    append_intercept(p.test);
    append_intercept(p.unlabeled);
  }
}

Dataset empty_like(Index d) {
  Dataset ds;
  ds.features = SparseRowMatrix(d);
  return ds;
}

// ---------------------------------------------------------------------------
// Solving

struct RunRecord {
  std::string solver;
  std::string loss;
  std::string penalty;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  std::optional<double> theta;
  std::optional<double> gamma;
  std::optional<double> tau;
  std::string status;
  std::string message;
  double objective = std::nan("");
  std::optional<double> accuracy;
  double time_s = 0.0;
  int iterations = 0;
  long evals = 0;
  double stationarity = std::nan("");
  Index nnz = 0;
  bool failed = false;
  Vector x;
  SolveTrace trace;
};

json to_json(const RunRecord& r, bool timing) {
  json hp = {{"lambda", r.lambda},
             {"theta", r.theta ? json(*r.theta) : json(nullptr)},
             {"gamma", r.gamma ? json(*r.gamma) : json(nullptr)},
             {"tau", r.tau ? json(*r.tau) : json(nullptr)}};
  return {{"solver", r.solver},
          {"loss", r.loss},
          {"penalty", r.penalty},
          {"seed", r.seed},
          {"hyperparameters", hp},
          {"status", r.status},
          {"message", r.message},
          {"objective", number_or_null(r.objective)},
          {"accuracy", r.accuracy ? json(*r.accuracy) : json(nullptr)},
          {"time_s", timing ? json(r.time_s) : json(nullptr)},
          {"iterations", r.iterations},
          {"evals", r.evals},
          {"stationarity", number_or_null(r.stationarity)},
          {"nnz", r.nnz}};
}

json to_json(const IterationRecord& r, bool timing) {
  return {{"iter", r.iter},
          {"objective", r.objective},
          {"prev_objective", r.prev_objective},
          {"step", r.step},
          {"dx_inf", r.dx_inf},
          {"descent", number_or_null(r.descent)},
          {"dx_h_dx", number_or_null(r.dx_h_dx)},
          {"inner_tol", number_or_null(r.inner_tol)},
          {"inner_iters", r.inner_iters},
          {"backtracks", r.backtracks},
          {"lipschitz_estimate", r.lipschitz_estimate},
          {"metric_min_eig", number_or_null(r.metric_min_eig)},
          {"evals", r.evals},
          {"wall_time", timing ? json(r.wall_time) : json(nullptr)}};
}

std::shared_ptr<const DcNonsmooth> make_penalty(const ModelOptions& m, std::optional<Index> unpenalized) {
  if (m.penalty == "l1") return std::make_shared<L1Penalty>(*m.lambda, unpenalized);
  return std::make_shared<CappedL1Penalty>(*m.lambda, *m.theta, unpenalized);
}

RunRecord run_solver(const std::string& solver, const CompositeObjective& obj, const ModelOptions& m,
                     const std::string& loss, std::optional<double> gamma, const Problem& p, std::uint64_t seed) {
  RunRecord r;
  r.solver = solver;
  r.loss = loss;
  r.penalty = m.penalty;
  r.seed = seed;
  r.lambda = *m.lambda;
  if (m.penalty == "capped_l1") r.theta = m.theta;
  if (loss == "transductive") {
    r.gamma = gamma;
    r.tau = m.tau;
  }

  SolveResult res;
  try {
    if (solver == "dcpn") {
      OuterConfig cfg;
      cfg.rel_obj_tol = m.rel_tol;
      if (m.max_iters > 0) cfg.max_outer_iters = m.max_iters;
      res = dc_prox_newton_solve(obj, cfg);
    } else if (solver == "gist") {
      GistConfig cfg;
      cfg.rel_obj_tol = m.rel_tol;
      if (m.max_iters > 0) cfg.max_iters = m.max_iters;
      res = gist_solve(obj, cfg);
    } else if (solver == "dca") {
      DcaConfig cfg;
      cfg.rel_obj_tol = m.rel_tol;
      if (m.max_iters > 0) cfg.max_dc_iters = std::min(m.max_iters, 20);
      res = dca_solve(obj, cfg);
    } else if (solver == "proxgrad") {
      ProxGradConfig cfg{1e-8, 20000, 1.0};
      if (m.max_iters > 0) cfg.max_iters = m.max_iters;
      res = proxgrad_solve(obj, cfg);
    } else {
      throw UsageError("unknown solver '" + solver + "'");
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    r.failed = true;
    r.status = "error";
    r.message = e.what();
    return r;
  }

  r.status = to_string(res.trace.status);
  r.message = res.message;
  r.failed = res.trace.status == SolveStatus::line_search_failed;
  r.objective = res.report.objective;
  r.time_s = res.trace.wall_time;
  r.iterations = res.report.iterations;
  r.evals = res.trace.evals;
  r.stationarity = solver == "dcpn" ? res.report.direction_norm
                                    : stationarity_check(obj, res.x, LbfgsMetric(obj.dimension()));
  r.nnz = (res.x.array() != 0.0).count();
  if (p.has_test) r.accuracy = classification_accuracy(p.test, res.x);
  r.x = std::move(res.x);
  r.trace = std::move(res.trace);
  return r;
}

CompositeObjective build_objective(const Problem& p, const ModelOptions& m, const std::string& loss, double gamma) {
  auto pen = make_penalty(m, p.intercept_col);
  if (loss == "transductive") {
    return CompositeObjective(std::make_shared<TransductiveLogisticLoss>(p.train, p.unlabeled, gamma, m.tau), pen);
  }
  return CompositeObjective(std::make_shared<LogisticLoss>(p.train), pen);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir + "'");
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void write_run_artifacts(const fs::path& dir, const RunRecord& r, bool timing, const std::string& prefix = "") {
  {
    auto out = open_out(dir / (prefix + "model.txt"));
    write_model(out, r.x);
  }
  {
    auto out = open_out(dir / (prefix + "trace.jsonl"));
    for (const auto& rec : r.trace.records) out << to_json(rec, timing).dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Subcommands

struct ToygenCmd {
  ToyOptions toy;
  std::uint64_t seed = 0;
  std::string out_dir;

  void add(CLI::App& app) {
    toy.add(app);
    app.add_option("--seed", seed, "Generator seed");
    app.add_option("--out-dir", out_dir, "Directory for train.svm, test.svm, unlabeled.svm")->required();
  }

  int run() const {
    const auto data = generate_toy(toy.spec(seed));
    ensure_dir(out_dir);
    write_libsvm((fs::path(out_dir) / "train.svm").string(), data.train);
    write_libsvm((fs::path(out_dir) / "test.svm").string(), data.test);
    write_libsvm((fs::path(out_dir) / "unlabeled.svm").string(), data.unlabeled);
    return kExitOk;
  }
};

struct TrainCmd {
  ModelOptions model;
  std::string solver = "dcpn";
  std::string train_path;
  std::string test_path;
  std::string unlabeled_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool no_timing = false;

  void add(CLI::App& app) {
    model.add(app, true);
    app.add_option("--solver", solver, "dcpn | gist | dca | proxgrad")
        ->check(CLI::IsMember({"dcpn", "gist", "dca", "proxgrad"}));
    app.add_option("--train", train_path, "Training set (libsvm)")->required();
    app.add_option("--test", test_path, "Test set (libsvm)");
    app.add_option("--unlabeled", unlabeled_path, "Unlabeled set for the transductive loss (libsvm)");
    app.add_option("--seed", seed, "Seed recorded with the result");
    app.add_option("--out-dir", out_dir, "Directory for model.txt, trace.jsonl, result.json")->required();
    app.add_flag("--no-timing", no_timing, "Omit wall-clock times so outputs are byte-reproducible");
  }

  int run() const {
    const bool transductive = model.loss == "transductive";
    model.require(transductive);
    if (transductive && unlabeled_path.empty()) throw UsageError("--unlabeled is required for the transductive loss");

    Problem p;
    p.train = load(train_path);
    if (!p.train.labeled() && p.train.n_rows() > 0) throw std::runtime_error("training set has no labels");
    p.has_test = !test_path.empty();
    p.test = p.has_test ? load(test_path) : empty_like(p.train.n_cols());
    p.unlabeled = transductive ? load(unlabeled_path, true) : empty_like(p.train.n_cols());
    prepare(p, model.standardize_mode(false), model.intercept);

    const auto obj = build_objective(p, model, model.loss, model.gamma.value_or(0.0));
    const auto rec = run_solver(solver, obj, model, model.loss, model.gamma, p, seed);

    ensure_dir(out_dir);
    write_run_artifacts(out_dir, rec, !no_timing);
    const json result = to_json(rec, !no_timing);
    open_out(fs::path(out_dir) / "result.json") << result.dump(2) << '\n';
    std::cout << result.dump() << '\n';
    if (rec.failed) {
      std::cerr << "solver failure: " << rec.status << (rec.message.empty() ? "" : ": " + rec.message) << '\n';
      return kExitSolver;
    }
    return kExitOk;
  }
};

struct TransductiveCmd {
  ModelOptions model;
  ToyOptions toy;
  std::string solver = "dcpn";
  std::string train_path;
  std::string test_path;
  std::string unlabeled_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool no_timing = false;

  void add(CLI::App& app) {
    model.add(app, false);
    toy.add(app);
    app.add_option("--solver", solver, "dcpn | gist | dca")->check(CLI::IsMember({"dcpn", "gist", "dca"}));
    app.add_option("--train", train_path, "Labeled set (libsvm); omit to use toy data");
    app.add_option("--test", test_path, "Test set (libsvm)");
    app.add_option("--unlabeled", unlabeled_path, "Unlabeled set (libsvm)");
    app.add_option("--seed", seed, "Toy data seed");
    app.add_option("--out-dir", out_dir, "Directory for result.json and per-model artifacts")->required();
    app.add_flag("--no-timing", no_timing, "Omit wall-clock times so outputs are byte-reproducible");
  }

  int run() const {
    model.require(true);
    Problem p;
    const bool use_toy = train_path.empty();
    if (use_toy) {
      auto data = generate_toy(toy.spec(seed));
      p.train = std::move(data.train);
      p.test = std::move(data.test);
      p.unlabeled = std::move(data.unlabeled);
      p.has_test = p.test.n_rows() > 0;
    } else {
      if (unlabeled_path.empty()) throw UsageError("--unlabeled is required with --train");
      p.train = load(train_path);
      p.unlabeled = load(unlabeled_path, true);
      p.has_test = !test_path.empty();
      p.test = p.has_test ? load(test_path) : empty_like(p.train.n_cols());
    }
    prepare(p, model.standardize_mode(use_toy), model.intercept);

    const auto sup_obj = build_objective(p, model, "logistic", 0.0);
    const auto tr_obj = build_objective(p, model, "transductive", *model.gamma);
    const auto sup = run_solver(solver, sup_obj, model, "logistic", std::nullopt, p, seed);
    const auto tr = run_solver(solver, tr_obj, model, "transductive", model.gamma, p, seed);

    ensure_dir(out_dir);
    write_run_artifacts(out_dir, sup, !no_timing, "supervised_");
    write_run_artifacts(out_dir, tr, !no_timing, "transductive_");
    const json result = {{"supervised", to_json(sup, !no_timing)}, {"transductive", to_json(tr, !no_timing)}};
    open_out(fs::path(out_dir) / "result.json") << result.dump(2) << '\n';
    std::cout << result.dump() << '\n';
    if (sup.failed || tr.failed) {
      std::cerr << "solver failure: " << (sup.failed ? sup.message : tr.message) << '\n';
      return kExitSolver;
    }
    return kExitOk;
  }
};

struct BenchmarkCmd {
  ModelOptions model;
  ToyOptions toy;
  std::vector<std::string> solvers{"dcpn", "gist", "dca"};
  std::string data_path;
  std::string train_path;
  std::string test_path;
  std::string unlabeled_path;
  int seeds = 1;
  std::uint64_t seed_base = 0;
  double train_fraction = 0.8;
  unsigned threads = 1;
  std::string out_dir;
  bool no_timing = false;

  void add(CLI::App& app) {
    model.add(app, true);
    toy.add(app);
    app.add_option("--solvers", solvers, "Comma-separated subset of dcpn,gist,dca,proxgrad")
        ->delimiter(',')
        ->check(CLI::IsMember({"dcpn", "gist", "dca", "proxgrad"}));
    app.add_option("--data", data_path, "Single labeled set, split per seed (libsvm)");
    app.add_option("--train", train_path, "Fixed training set (libsvm)");
    app.add_option("--test", test_path, "Fixed test set (libsvm)");
    app.add_option("--unlabeled", unlabeled_path, "Unlabeled set for the transductive loss (libsvm)");
    app.add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
    app.add_option("--seed-base", seed_base, "First seed");
    app.add_option("--train-fraction", train_fraction, "Training share for --data splits")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", out_dir, "Directory for records.csv, summary.csv, benchmark.json")->required();
    app.add_flag("--no-timing", no_timing, "Omit wall-clock times so outputs are byte-reproducible");
  }

  Problem problem_for_seed(std::uint64_t seed) const {
    Problem p;
    const bool use_toy = data_path.empty() && train_path.empty();
    if (use_toy) {
      auto data = generate_toy(toy.spec(seed));
      p.train = std::move(data.train);
      p.test = std::move(data.test);
      p.unlabeled = std::move(data.unlabeled);
      p.has_test = p.test.n_rows() > 0;
    } else {
      if (!data_path.empty()) {
        auto [tr, te] = train_test_split(load(data_path), train_fraction, seed);
        p.train = std::move(tr);
        p.test = std::move(te);
        p.has_test = true;
      } else {
        p.train = load(train_path);
        p.has_test = !test_path.empty();
        p.test = p.has_test ? load(test_path) : empty_like(p.train.n_cols());
      }
      p.unlabeled = unlabeled_path.empty() ? empty_like(p.train.n_cols()) : load(unlabeled_path, true);
    }
    prepare(p, model.standardize_mode(use_toy), model.intercept);
    return p;
  }

  int run() const {
    const bool transductive = model.loss == "transductive";
    model.require(transductive);
    if (!data_path.empty() && !train_path.empty()) throw UsageError("--data and --train are mutually exclusive");
    std::vector<std::string> unique_solvers = solvers;
    std::sort(unique_solvers.begin(), unique_solvers.end());
    unique_solvers.erase(std::unique(unique_solvers.begin(), unique_solvers.end()), unique_solvers.end());

    struct Job {
      std::size_t problem;
      std::string solver;
      std::uint64_t seed;
    };
    std::vector<Problem> problems;
    std::vector<CompositeObjective> objectives;
    std::vector<Job> jobs;
    for (int s = 0; s < seeds; ++s) {
      const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(s);
      problems.push_back(problem_for_seed(seed));
    }
    for (std::size_t i = 0; i < problems.size(); ++i) {
      objectives.push_back(build_objective(problems[i], model, model.loss, model.gamma.value_or(0.0)));
      for (const auto& solver : unique_solvers) jobs.push_back({i, solver, seed_base + i});
    }

    std::vector<RunRecord> records(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t j = next++; j < jobs.size(); j = next++) {
        const auto& job = jobs[j];
        records[j] = run_solver(job.solver, objectives[job.problem], model, model.loss, model.gamma,
                                problems[job.problem], job.seed);
      }
    };
    std::vector<std::thread> pool;
    const unsigned n_threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
      return std::tie(a.solver, a.seed) < std::tie(b.solver, b.seed);
    });

    ensure_dir(out_dir);
    write_outputs(records, unique_solvers);
    return kExitOk;
  }

  static std::string csv_number(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
  }

  static std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {std::nan(""), std::nan("")};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return {mean, sd};
  }

  void write_outputs(const std::vector<RunRecord>& records, const std::vector<std::string>& solver_names) const {
    const bool timing = !no_timing;
    const fs::path dir(out_dir);
    {
      auto out = open_out(dir / "records.csv");
      out << "solver,seed,status,objective,accuracy,time_s,iterations,evals,stationarity,nnz\n";
      for (const auto& r : records) {
        out << r.solver << ',' << r.seed << ',' << r.status << ',' << csv_number(r.objective) << ','
            << (r.accuracy ? csv_number(*r.accuracy) : "") << ',' << (timing ? csv_number(r.time_s) : "") << ','
            << r.iterations << ',' << r.evals << ',' << csv_number(r.stationarity) << ',' << r.nnz << '\n';
      }
    }

    std::map<std::uint64_t, double> gist_objective;
    for (const auto& r : records) {
      if (r.solver == "gist" && !r.failed) gist_objective[r.seed] = r.objective;
    }

    json summary = json::array();
    auto out = open_out(dir / "summary.csv");
    out << "solver,runs,failures,objective_mean,objective_std,accuracy_mean,accuracy_std,time_mean,time_std,"
           "iterations_mean,evals_mean,rel_diff_vs_gist_pct\n";
    for (const auto& name : solver_names) {
      std::vector<double> obj, acc, time, iters, evals, rel;
      int runs = 0, failures = 0;
      for (const auto& r : records) {
        if (r.solver != name) continue;
        ++runs;
        if (r.failed) {
          ++failures;
          continue;
        }
        obj.push_back(r.objective);
        if (r.accuracy) acc.push_back(*r.accuracy);
        time.push_back(r.time_s);
        iters.push_back(r.iterations);
        evals.push_back(static_cast<double>(r.evals));
        if (auto it = gist_objective.find(r.seed); it != gist_objective.end()) {
          rel.push_back(100.0 * (it->second - r.objective) / std::abs(it->second));
        }
      }
      const auto [om, os] = mean_std(obj);
      const auto [am, as] = mean_std(acc);
      const auto [tm, ts] = mean_std(time);
      const double im = mean_std(iters).first;
      const double em = mean_std(evals).first;
      const double rm = mean_std(rel).first;
      out << name << ',' << runs << ',' << failures << ',' << csv_number(om) << ',' << csv_number(os) << ','
          << csv_number(am) << ',' << csv_number(as) << ',' << (timing ? csv_number(tm) : "") << ','
          << (timing ? csv_number(ts) : "") << ',' << csv_number(im) << ',' << csv_number(em) << ','
          << csv_number(rm) << '\n';
      summary.push_back({{"solver", name},
                         {"runs", runs},
                         {"failures", failures},
                         {"objective_mean", number_or_null(om)},
                         {"objective_std", number_or_null(os)},
                         {"accuracy_mean", number_or_null(am)},
                         {"accuracy_std", number_or_null(as)},
                         {"time_mean", timing ? number_or_null(tm) : json(nullptr)},
                         {"time_std", timing ? number_or_null(ts) : json(nullptr)},
                         {"iterations_mean", number_or_null(im)},
                         {"evals_mean", number_or_null(em)},
                         {"rel_diff_vs_gist_pct", number_or_null(rm)}});
    }

    json all = json::array();
    for (const auto& r : records) all.push_back(to_json(r, timing));
    open_out(dir / "benchmark.json") << json{{"records", all}, {"summary", summary}}.dump(2) << '\n';
  }
};

// CLI11 only reads config files attached to the root app, so subcommand files are applied here.
void apply_config(CLI::App& sub, const std::string& path) {
  CLI::ConfigTOML reader;
  for (const auto& item : reader.from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents.front() == sub.get_name())) continue;
    CLI::Option* op = sub.get_option_no_throw("--" + item.name);
    if (op == nullptr || item.name == "config") throw CLI::ConfigError::Extras(item.fullname());
    if (op->count() > 0) continue;
    std::vector<std::string> inputs = item.inputs;
    if (op->get_expected_min() == 0) {
      if (inputs.size() > 1) throw CLI::ConversionError::TooManyInputsFlag(item.fullname());
      inputs = {reader.to_flag(item)};
    }
    op->add_result(inputs);
    op->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse logistic and transductive models with DC proximal Newton and baseline solvers"};
  app.require_subcommand(1);

  ToygenCmd toygen;
  TrainCmd train;
  TransductiveCmd transductive;
  BenchmarkCmd benchmark;
  auto* toygen_app = app.add_subcommand("toygen", "Write a seeded toy dataset in libsvm format");
  auto* train_app = app.add_subcommand("train", "Train one model and evaluate it");
  auto* trans_app = app.add_subcommand("transductive", "Compare transductive and supervised sparse models");
  auto* bench_app = app.add_subcommand("benchmark", "Compare solvers over seeds");
  std::string config_path;
  for (auto* sub : {toygen_app, train_app, trans_app, bench_app}) {
    sub->add_option("--config", config_path, "TOML/INI file with option values; command-line options win")
        ->check(CLI::ExistingFile);
  }
  toygen.add(*toygen_app);
  train.add(*train_app);
  transductive.add(*trans_app);
  benchmark.add(*bench_app);

  try {
    app.parse(argc, argv);
    if (!config_path.empty()) apply_config(*app.get_subcommands().front(), config_path);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*toygen_app) return toygen.run();
    if (*train_app) return train.run();
    if (*trans_app) return transductive.run();
    if (*bench_app) return benchmark.run();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
