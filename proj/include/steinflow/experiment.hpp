#pragma once

// Experiment harness: the Gaussian toy problem, Bayesian logistic
// regression and Bayesian neural network regression, each runnable over
// several seeded trials.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "steinflow/data.hpp"
#include "steinflow/dynamics.hpp"
#include "steinflow/results_io.hpp"

namespace steinflow {

enum class Task { kGaussian, kLogreg, kBnn };

enum class KernelMode {
  kMulti,   ///< MK-SVGD over the bandwidth grid
  kFixed,   ///< vanilla SVGD with one fixed bandwidth
  kMedian,  ///< vanilla SVGD with the median heuristic
};

struct ExperimentConfig {
  Task task = Task::kGaussian;
  std::size_t particles = 500;
  int iterations = 200;
  double step = 0.1;
  std::uint64_t seed = 1;
  int trials = 1;

  double grid_lo = 0.0625;
  double grid_factor = 2.0;
  std::size_t grid_count = 10;
  KernelMode kernel = KernelMode::kMulti;
  double fixed_bandwidth = 1.0;

  WeightMode weight_mode = WeightMode::kClosedForm;
  double weight_step = 0.05;
  int weight_cadence = 1;
  std::size_t batch = 0;

  std::string dataset;
  bool libsvm = false;
  std::string label_column;  ///< empty: last column
  char delimiter = ',';
  bool header = true;
  double train_fraction = 0.8;
  std::size_t subsample = 0;  ///< 0 keeps every row
  bool standardize_features = true;

  std::size_t hidden = 50;
  int eval_every = 50;
  double blr_shape = 1.0;
  double blr_rate = 0.01;

  std::string out_dir;  ///< empty: nothing is written

  /// Task defaults for particle count, iterations, grid, batch and split.
  static ExperimentConfig defaults(Task task);
};

const char* task_name(Task task);

struct TrialOutcome {
  std::uint64_t seed = 0;
  RunResult run;
  Summary summary;
  std::vector<std::pair<std::string, double>> metrics;  ///< numeric summary entries
};

struct ExperimentOutcome {
  std::vector<TrialOutcome> trials;
  Summary aggregate;

  /// Mean over trials of a numeric summary metric.
  double mean_metric(const std::string& key) const;
};

BandwidthGrid make_grid(const ExperimentConfig& config);

/// Loads the configured dataset (CSV or libsvm).
Dataset load_experiment_data(const ExperimentConfig& config);

ExperimentOutcome run_gaussian(const ExperimentConfig& config);
ExperimentOutcome run_logreg(const ExperimentConfig& config, const Dataset& data);
ExperimentOutcome run_bnn(const ExperimentConfig& config, const Dataset& data);

/// Dispatches on config.task, loading the dataset when required, and writes
/// per-trial and aggregate files when config.out_dir is set.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

/// Writes every trial (trace, timing, summary) plus aggregate_summary.txt.
void write_outcome(const ExperimentOutcome& outcome, const ExperimentConfig& config);

}  // namespace steinflow
