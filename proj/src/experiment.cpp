#include "steinflow/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>

#include "steinflow/errors.hpp"
#include "steinflow/metrics.hpp"
#include "steinflow/targets.hpp"

namespace steinflow {

namespace {

constexpr std::uint64_t kInitStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kBatchStream = 0xbf58476d1ce4e5b9ULL;

const char* kernel_mode_name(KernelMode mode) {
  switch (mode) {
    case KernelMode::kMulti: return "multi";
    case KernelMode::kFixed: return "fixed";
    case KernelMode::kMedian: return "median";
  }
  return "?";
}

RunConfig run_config(const ExperimentConfig& config, std::uint64_t seed) {
  RunConfig rc;
  rc.iterations = config.iterations;
  rc.step = config.step;
  rc.seed = seed ^ kBatchStream;
  rc.weight_cadence = config.weight_cadence;
  rc.weight_mode = config.weight_mode;
  rc.weight_step = config.weight_step;
  rc.batch_size = config.batch;
  return rc;
}

RunResult run_dynamics(const ScoreModel& model, Matrix init, const ExperimentConfig& config,
                       std::uint64_t seed, const IterationObserver* observer) {
  const RunConfig rc = run_config(config, seed);
  switch (config.kernel) {
    case KernelMode::kMulti: return run_mk_svgd(model, std::move(init), make_grid(config), rc, observer);
    case KernelMode::kFixed: return run_svgd(model, std::move(init), config.fixed_bandwidth, rc, observer);
    case KernelMode::kMedian: return run_svgd(model, std::move(init), std::nullopt, rc, observer);
  }
  throw InputError("unknown kernel mode");
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  }
  return m;
}

void validate(const ExperimentConfig& config) {
  if (config.particles < 1) throw InputError("particle count must be positive");
  if (config.iterations < 1) throw InputError("iteration count must be positive");
  if (!(config.step > 0.0)) throw InputError("step size must be positive");
  if (config.trials < 1) throw InputError("trial count must be positive");
  if (config.kernel == KernelMode::kMedian && config.particles < 2) {
    throw InputError("the median heuristic needs at least two particles");
  }
  if (config.kernel == KernelMode::kFixed && !(config.fixed_bandwidth > 0.0)) {
    throw InputError("fixed bandwidth must be positive");
  }
}

Summary config_summary(const ExperimentConfig& config, std::uint64_t seed) {
  Summary s;
  s.emplace_back("task", task_name(config.task));
  s.emplace_back("seed", std::to_string(seed));
  s.emplace_back("particles", std::to_string(config.particles));
  s.emplace_back("iterations", std::to_string(config.iterations));
  s.emplace_back("step", format_number(config.step));
  s.emplace_back("kernel", kernel_mode_name(config.kernel));
  if (config.kernel == KernelMode::kMulti) {
    s.emplace_back("grid_lo", format_number(config.grid_lo));
    s.emplace_back("grid_factor", format_number(config.grid_factor));
    s.emplace_back("grid_count", std::to_string(config.grid_count));
    s.emplace_back("weight_mode", config.weight_mode == WeightMode::kClosedForm ? "closed_form" : "adagrad_ascent");
    s.emplace_back("weight_cadence", std::to_string(config.weight_cadence));
  } else if (config.kernel == KernelMode::kFixed) {
    s.emplace_back("bandwidth", format_number(config.fixed_bandwidth));
  }
  if (config.task != Task::kGaussian) {
    s.emplace_back("dataset", config.dataset);
    s.emplace_back("batch", std::to_string(config.batch));
    s.emplace_back("train_fraction", format_number(config.train_fraction));
  }
  return s;
}

void add_metric(TrialOutcome& trial, const std::string& key, double value) {
  trial.metrics.emplace_back(key, value);
  trial.summary.emplace_back(key, format_number(value));
}

void add_final_weights(TrialOutcome& trial) {
  const RunTrace& trace = trial.run.trace;
  if (trace.records.empty()) return;
  const IterationRecord& last = trace.records.back();
  add_metric(trial, "final_mksd", last.mksd);
  for (std::size_t i = 0; i < trace.bandwidths.size() && i < last.weights.size(); ++i) {
    trial.summary.emplace_back("final_w_h" + format_number(trace.bandwidths[i]), format_number(last.weights[i]));
  }
}

Summary aggregate(const std::vector<TrialOutcome>& trials, const ExperimentConfig& config) {
  Summary s;
  s.emplace_back("task", task_name(config.task));
  s.emplace_back("trials", std::to_string(trials.size()));
  s.emplace_back("kernel", kernel_mode_name(config.kernel));
  if (trials.empty()) return s;
  for (std::size_t k = 0; k < trials.front().metrics.size(); ++k) {
    const std::string& key = trials.front().metrics[k].first;
    std::vector<double> values;
    for (const auto& t : trials) values.push_back(t.metrics.at(k).second);
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd = values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
    s.emplace_back("mean_" + key, format_number(mean));
    s.emplace_back("std_" + key, format_number(sd));
  }
  return s;
}


}  // namespace

ExperimentConfig ExperimentConfig::defaults(Task task) {
  ExperimentConfig c;
  c.task = task;
  switch (task) {
    case Task::kGaussian:
      c.particles = 500;
      c.iterations = 200;
      c.step = 0.5;
      c.grid_lo = std::pow(2.0, -4);
      break;
    case Task::kLogreg:
      c.particles = 100;
      c.iterations = 3000;
      c.step = 0.05;
      c.grid_lo = std::pow(2.0, 2);
      c.batch = 100;
      c.train_fraction = 0.8;
      c.subsample = 20000;
      c.eval_every = 100;
      break;
    case Task::kBnn:
      c.particles = 20;
      c.iterations = 2000;
      c.step = 0.01;
      c.grid_lo = std::pow(2.0, -4);
      c.batch = 100;
      c.train_fraction = 0.9;
      c.eval_every = 100;
      break;
  }
  return c;
}

const char* task_name(Task task) {
  switch (task) {
    case Task::kGaussian: return "gaussian";
    case Task::kLogreg: return "logreg";
    case Task::kBnn: return "bnn";
  }
  return "?";
}

double ExperimentOutcome::mean_metric(const std::string& key) const {
  if (trials.empty()) throw InputError("no trials");
  double sum = 0.0;
  for (const auto& t : trials) {
    auto it = std::find_if(t.metrics.begin(), t.metrics.end(), [&](const auto& kv) { return kv.first == key; });
    if (it == t.metrics.end()) throw InputError("unknown metric " + key);
    sum += it->second;
  }
  return sum / static_cast<double>(trials.size());
}

BandwidthGrid make_grid(const ExperimentConfig& config) {
  return BandwidthGrid::geometric(config.grid_lo, config.grid_factor, config.grid_count);
}

Dataset load_experiment_data(const ExperimentConfig& config) {
  if (config.dataset.empty()) throw InputError("this task needs a dataset path");
  const LabelKind kind = config.task == Task::kLogreg ? LabelKind::kBinary : LabelKind::kRegression;
  if (config.libsvm) return load_libsvm(config.dataset, kind);
  CsvSchema schema;
  schema.kind = kind;
  schema.delimiter = config.delimiter;
  schema.has_header = config.header;
  if (!config.label_column.empty()) {
    const bool numeric = std::all_of(config.label_column.begin(), config.label_column.end(),
                                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '-'; });
    if (numeric) {
      schema.label_column = std::stol(config.label_column);
    } else {
      schema.label_column = config.label_column;
    }
  }
  return load_csv(config.dataset, schema);
}

ExperimentOutcome run_gaussian(const ExperimentConfig& config) {
  validate(config);
  const GaussianTarget target = toy_gaussian_target();
  ExperimentOutcome outcome;
  for (int trial = 0; trial < config.trials; ++trial) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(trial);
    std::mt19937_64 rng(seed ^ kInitStream);
    Matrix init = standard_normal(static_cast<Eigen::Index>(config.particles), 2, rng);

    TrialOutcome t;
    t.seed = seed;
    t.run = run_dynamics(target, std::move(init), config, seed, nullptr);
    t.summary = config_summary(config, seed);

    const ParticleMoments moments = particle_moments(t.run.particles);
    add_metric(t, "mean_0", moments.mean[0]);
    add_metric(t, "mean_1", moments.mean[1]);
    if (moments.covariance) {
      const Matrix& cov = *moments.covariance;
      add_metric(t, "cov_00", cov(0, 0));
      add_metric(t, "cov_01", cov(0, 1));
      add_metric(t, "cov_11", cov(1, 1));
      add_metric(t, "cov_frobenius_error", (cov - target.covariance()).norm());
    }
    add_final_weights(t);
    outcome.trials.push_back(std::move(t));
  }
  outcome.aggregate = aggregate(outcome.trials, config);
  return outcome;
}

ExperimentOutcome run_logreg(const ExperimentConfig& config, const Dataset& data) {
  validate(config);
  if (data.kind != LabelKind::kBinary) throw InputError("logistic regression needs a binary dataset");
  ExperimentOutcome outcome;
  for (int trial = 0; trial < config.trials; ++trial) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(trial);
    const Dataset sampled = config.subsample > 0 ? subsample(data, config.subsample, seed) : data;
    auto [train, test] = split(sampled, SplitSpec{config.train_fraction, seed});
    if (config.standardize_features) {
      Standardized st = standardize(train, test);
      train = std::move(st.train);
      test = std::move(st.test);
    }

    const LogisticRegressionPosterior model(train.features, train.targets,
                                            {config.blr_shape, config.blr_rate});
    const auto p = static_cast<Eigen::Index>(train.num_features());

    // alpha from its prior (shape floored at 1 for the improper a = 0
    // setting), then theta | alpha.
    std::mt19937_64 rng(seed ^ kInitStream);
    std::gamma_distribution<double> gamma(std::max(config.blr_shape, 1.0), 1.0 / config.blr_rate);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix init(static_cast<Eigen::Index>(config.particles), p + 1);
    for (Eigen::Index j = 0; j < init.rows(); ++j) {
      const double alpha = gamma(rng);
      for (Eigen::Index c = 0; c < p; ++c) init(j, c) = normal(rng) / std::sqrt(alpha);
      init(j, p) = std::log(alpha);
    }

    const IterationObserver observer{
        {"test_accuracy", "test_log_likelihood"},
        [&test = test](int, const Matrix& particles) {
          const ClassificationMetrics m = classification_metrics(predictive_blr(particles, test.features), test.targets);
          return std::vector<double>{m.accuracy, m.log_likelihood};
        },
        config.eval_every};

    TrialOutcome t;
    t.seed = seed;
    t.run = run_dynamics(model, std::move(init), config, seed, &observer);
    t.summary = config_summary(config, seed);
    t.summary.emplace_back("train_rows", std::to_string(train.size()));
    t.summary.emplace_back("test_rows", std::to_string(test.size()));
    const ClassificationMetrics final =
        classification_metrics(predictive_blr(t.run.particles, test.features), test.targets);
    add_metric(t, "test_accuracy", final.accuracy);
    add_metric(t, "test_log_likelihood", final.log_likelihood);
    add_final_weights(t);
    outcome.trials.push_back(std::move(t));
  }
  outcome.aggregate = aggregate(outcome.trials, config);
  return outcome;
}

ExperimentOutcome run_bnn(const ExperimentConfig& config, const Dataset& data) {
  validate(config);
  if (data.kind != LabelKind::kRegression) throw InputError("BNN regression needs real-valued targets");
  ExperimentOutcome outcome;
  for (int trial = 0; trial < config.trials; ++trial) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(trial);
    const Dataset sampled = config.subsample > 0 ? subsample(data, config.subsample, seed) : data;
    const auto [raw_train, raw_test] = split(sampled, SplitSpec{config.train_fraction, seed});
    const Standardized st = standardize(raw_train, raw_test);
    const ColumnStats& ts = *st.train.target_stats;
    const TargetScaling scaling{ts.mean[0], ts.std[0] > 0.0 ? ts.std[0] : 1.0};

    const BnnPosterior model(st.train.features, st.train.targets, config.hidden, {});
    const BnnLayout& layout = model.layout();

    // Isotropic Gaussian weights scaled by fan-in; hyperparameters from
    // their priors, then the noise precision matched to the initial fit.
    std::mt19937_64 rng(seed ^ kInitStream);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::gamma_distribution<double> lambda_prior(model.hyper().lambda_shape, 1.0 / model.hyper().lambda_rate);
    const auto dim = static_cast<Eigen::Index>(layout.size());
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(layout.inputs) + 1.0);
    const double hid_scale = 1.0 / std::sqrt(static_cast<double>(layout.hidden) + 1.0);
    const std::size_t probe = std::min<std::size_t>(st.train.size(), 1000);
    Matrix init = Matrix::Zero(static_cast<Eigen::Index>(config.particles), dim);
    for (Eigen::Index j = 0; j < init.rows(); ++j) {
      for (std::size_t k = layout.w1(); k < layout.b1(); ++k) init(j, static_cast<Eigen::Index>(k)) = in_scale * normal(rng);
      for (std::size_t k = layout.w2(); k < layout.b2(); ++k) init(j, static_cast<Eigen::Index>(k)) = hid_scale * normal(rng);
      init(j, static_cast<Eigen::Index>(layout.log_lambda())) = std::log(lambda_prior(rng));
      std::vector<std::size_t> rows = permutation(st.train.size(), rng);
      rows.resize(probe);
      const Dataset sub = select_rows(st.train, rows);
      const Vector pred = bnn_forward(layout, init.row(j).transpose(), sub.features);
      const double mse = std::max((pred - sub.targets).squaredNorm() / static_cast<double>(probe), 1e-8);
      init(j, static_cast<Eigen::Index>(layout.log_gamma())) = -std::log(mse);
    }

    const Vector& test_targets = raw_test.targets;
    const Matrix& test_features = st.test.features;
    const IterationObserver observer{
        {"test_rmse", "test_log_likelihood"},
        [&](int, const Matrix& particles) {
          const BnnPrediction pred = predictive_bnn(layout, particles, test_features, scaling);
          const RegressionMetrics m = regression_metrics(pred.means, pred.precisions, test_targets);
          return std::vector<double>{m.rmse, m.log_likelihood};
        },
        config.eval_every};

    TrialOutcome t;
    t.seed = seed;
    t.run = run_dynamics(model, std::move(init), config, seed, &observer);
    t.summary = config_summary(config, seed);
    t.summary.emplace_back("train_rows", std::to_string(raw_train.size()));
    t.summary.emplace_back("test_rows", std::to_string(raw_test.size()));
    const BnnPrediction pred = predictive_bnn(layout, t.run.particles, test_features, scaling);
    const RegressionMetrics final = regression_metrics(pred.means, pred.precisions, test_targets);
    add_metric(t, "test_rmse", final.rmse);
    add_metric(t, "test_log_likelihood", final.log_likelihood);
    add_final_weights(t);
    outcome.trials.push_back(std::move(t));
  }
  outcome.aggregate = aggregate(outcome.trials, config);
  return outcome;
}

void write_outcome(const ExperimentOutcome& outcome, const ExperimentConfig& config) {
  if (config.out_dir.empty()) return;
  const std::filesystem::path dir(config.out_dir);
  for (std::size_t i = 0; i < outcome.trials.size(); ++i) {
    const TrialOutcome& t = outcome.trials[i];
    const std::string stem = "trial_" + std::to_string(i);
    emit_results(t.run.trace, t.summary, dir, stem);
    if (config.task == Task::kGaussian) {
      write_text_file(dir / (stem + "_particles.csv"), matrix_to_csv(t.run.particles, {"x0", "x1"}));
    }
  }
  write_text_file(dir / "aggregate_summary.txt", summary_to_text(outcome.aggregate));
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  ExperimentOutcome outcome;
  switch (config.task) {
    case Task::kGaussian:
      outcome = run_gaussian(config);
      break;
    case Task::kLogreg:
      outcome = run_logreg(config, load_experiment_data(config));
      break;
    case Task::kBnn:
      outcome = run_bnn(config, load_experiment_data(config));
      break;
  }
  write_outcome(outcome, config);
  return outcome;
}

}  // namespace steinflow
