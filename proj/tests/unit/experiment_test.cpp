#include "steinflow/experiment.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "steinflow/errors.hpp"

namespace sf = steinflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() /
                 ("steinflow_experiment_" + tag + "_" + std::to_string(std::random_device{}()));
  fs::remove_all(dir);
  return dir;
}

sf::ExperimentConfig small_gaussian() {
  sf::ExperimentConfig c = sf::ExperimentConfig::defaults(sf::Task::kGaussian);
  c.particles = 30;
  c.iterations = 10;
  c.grid_count = 3;
  c.seed = 11;
  c.trials = 2;
  return c;
}

// Two overlapping Gaussian blobs, alternating labels.
sf::Dataset blobs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  sf::Dataset d;
  d.kind = sf::LabelKind::kBinary;
  d.features.resize(static_cast<Eigen::Index>(n), 2);
  d.targets.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
    const double y = (i % 2 == 0) ? 1.0 : 0.0;
    const double shift = y > 0 ? 1.5 : -1.5;
    d.features(i, 0) = shift + normal(rng);
    d.features(i, 1) = 0.5 * shift + normal(rng);
    d.targets[i] = y;
  }
  d.feature_names = {"a", "b"};
  return d;
}

sf::Dataset linear_regression_data(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  sf::Dataset d;
  d.kind = sf::LabelKind::kRegression;
  d.features.resize(static_cast<Eigen::Index>(n), 3);
  d.targets.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
    for (Eigen::Index c = 0; c < 3; ++c) d.features(i, c) = normal(rng);
    d.targets[i] = 2.0 * d.features(i, 0) - d.features(i, 1) + 0.1 * normal(rng) + 5.0;
  }
  d.feature_names = {"a", "b", "c"};
  return d;
}

std::string lookup(const sf::Summary& s, const std::string& key) {
  for (const auto& [k, v] : s) {
    if (k == key) return v;
  }
  return {};
}

}  // namespace

TEST(ExperimentConfig, TaskDefaults) {
  const auto g = sf::ExperimentConfig::defaults(sf::Task::kGaussian);
  EXPECT_EQ(g.particles, 500u);
  EXPECT_EQ(g.iterations, 200);
  EXPECT_DOUBLE_EQ(g.grid_lo, 0.0625);
  EXPECT_EQ(g.grid_count, 10u);

  const auto l = sf::ExperimentConfig::defaults(sf::Task::kLogreg);
  EXPECT_EQ(l.particles, 100u);
  EXPECT_EQ(l.batch, 100u);
  EXPECT_DOUBLE_EQ(l.train_fraction, 0.8);

  const auto b = sf::ExperimentConfig::defaults(sf::Task::kBnn);
  EXPECT_EQ(b.particles, 20u);
  EXPECT_EQ(b.hidden, 50u);
  EXPECT_DOUBLE_EQ(b.train_fraction, 0.9);

  EXPECT_STREQ(sf::task_name(sf::Task::kGaussian), "gaussian");
  EXPECT_STREQ(sf::task_name(sf::Task::kLogreg), "logreg");
  EXPECT_STREQ(sf::task_name(sf::Task::kBnn), "bnn");
}

TEST(ExperimentConfig, GridFollowsConfig) {
  sf::ExperimentConfig c;
  c.grid_lo = 0.5;
  c.grid_factor = 3.0;
  c.grid_count = 4;
  const sf::BandwidthGrid grid = sf::make_grid(c);
  ASSERT_EQ(grid.size(), 4u);
  EXPECT_DOUBLE_EQ(grid[0], 0.5);
  EXPECT_DOUBLE_EQ(grid[3], 13.5);
}

TEST(ExperimentConfig, RejectsBadSettings) {
  auto c = small_gaussian();
  c.particles = 0;
  EXPECT_THROW(sf::run_gaussian(c), sf::InputError);
  c = small_gaussian();
  c.step = 0.0;
  EXPECT_THROW(sf::run_gaussian(c), sf::InputError);
  c = small_gaussian();
  c.kernel = sf::KernelMode::kFixed;
  c.fixed_bandwidth = -1.0;
  EXPECT_THROW(sf::run_gaussian(c), sf::InputError);
  c = small_gaussian();
  c.kernel = sf::KernelMode::kMedian;
  c.particles = 1;
  EXPECT_THROW(sf::run_gaussian(c), sf::InputError);
}

TEST(GaussianExperiment, TrialsUseConsecutiveSeedsAndReportMoments) {
  const auto out = sf::run_gaussian(small_gaussian());
  ASSERT_EQ(out.trials.size(), 2u);
  EXPECT_EQ(out.trials[0].seed, 11u);
  EXPECT_EQ(out.trials[1].seed, 12u);
  for (const auto& t : out.trials) {
    EXPECT_EQ(t.run.trace.records.size(), 10u);
    EXPECT_EQ(t.run.particles.rows(), 30);
    EXPECT_FALSE(lookup(t.summary, "cov_frobenius_error").empty());
    EXPECT_FALSE(lookup(t.summary, "final_w_h0.0625").empty());
  }
  const double m0 = out.mean_metric("mean_0");
  EXPECT_NEAR(m0, 0.5 * (out.trials[0].metrics[0].second + out.trials[1].metrics[0].second), 1e-15);
  EXPECT_THROW(out.mean_metric("no_such_metric"), sf::InputError);
  EXPECT_EQ(lookup(out.aggregate, "trials"), "2");
  EXPECT_FALSE(lookup(out.aggregate, "std_mean_0").empty());
}

TEST(GaussianExperiment, DeterministicAcrossRuns) {
  const auto a = sf::run_gaussian(small_gaussian());
  const auto b = sf::run_gaussian(small_gaussian());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_EQ((a.trials[i].run.particles - b.trials[i].run.particles).cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_EQ(sf::summary_to_text(a.aggregate), sf::summary_to_text(b.aggregate));
}

TEST(GaussianExperiment, SingleKernelGridMatchesFixedBandwidth) {
  auto multi = small_gaussian();
  multi.grid_lo = 1.0;
  multi.grid_count = 1;
  multi.trials = 1;
  auto fixed = multi;
  fixed.kernel = sf::KernelMode::kFixed;
  fixed.fixed_bandwidth = 1.0;
  const auto a = sf::run_gaussian(multi);
  const auto b = sf::run_gaussian(fixed);
  EXPECT_LE((a.trials[0].run.particles - b.trials[0].run.particles).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GaussianExperiment, WritesFilesWithStableContent) {
  const fs::path dir = scratch_dir("gauss");
  auto c = small_gaussian();
  c.out_dir = dir.string();
  const auto out = sf::run_experiment(c);
  for (int i = 0; i < 2; ++i) {
    const std::string stem = "trial_" + std::to_string(i);
    for (const char* suffix : {"_trace.csv", "_timing.csv", "_summary.txt", "_particles.csv"}) {
      EXPECT_TRUE(fs::exists(dir / (stem + suffix))) << stem << suffix;
    }
  }
  ASSERT_TRUE(fs::exists(dir / "aggregate_summary.txt"));

  const std::string trace_text = sf::read_text_file(dir / "trial_0_trace.csv");
  const std::string header = trace_text.substr(0, trace_text.find('\n'));
  EXPECT_EQ(header, "iter,mksd,ksd_h=0.0625,ksd_h=0.125,ksd_h=0.25,w_h=0.0625,w_h=0.125,w_h=0.25,weight_fallback");
  const sf::RunTrace parsed = sf::trace_from_csv(trace_text);
  EXPECT_EQ(parsed.records.size(), 10u);

  const sf::Summary summary = sf::summary_from_text(sf::read_text_file(dir / "trial_1_summary.txt"));
  EXPECT_EQ(lookup(summary, "seed"), "12");
  EXPECT_EQ(lookup(summary, "task"), "gaussian");

  // The timing file varies between runs; everything else is reproducible.
  const fs::path dir2 = scratch_dir("gauss2");
  c.out_dir = dir2.string();
  sf::run_experiment(c);
  for (const char* name : {"trial_0_trace.csv", "trial_1_summary.txt", "trial_1_particles.csv", "aggregate_summary.txt"}) {
    const std::string t1 = sf::read_text_file(dir / name);
    const std::string t2 = sf::read_text_file(dir2 / name);
    EXPECT_EQ(t1, t2) << name;
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST(LogregExperiment, SeparatesBlobs) {
  auto c = sf::ExperimentConfig::defaults(sf::Task::kLogreg);
  c.particles = 20;
  c.iterations = 200;
  c.batch = 50;
  c.eval_every = 50;
  c.grid_count = 4;
  c.seed = 3;
  const auto out = sf::run_logreg(c, blobs(400, 5));
  const auto& t = out.trials[0];
  EXPECT_GT(out.mean_metric("test_accuracy"), 0.85);
  EXPECT_LT(out.mean_metric("test_log_likelihood"), 0.0);
  EXPECT_EQ(lookup(t.summary, "train_rows"), "320");
  EXPECT_EQ(lookup(t.summary, "test_rows"), "80");
  ASSERT_EQ(t.run.trace.metric_names.size(), 2u);
  // Observer runs on the eval cadence only.
  EXPECT_TRUE(std::isnan(t.run.trace.records[1].metrics[0]));
  EXPECT_FALSE(std::isnan(t.run.trace.records.back().metrics[0]));
}

TEST(LogregExperiment, RejectsRegressionTargets) {
  auto c = sf::ExperimentConfig::defaults(sf::Task::kLogreg);
  c.particles = 5;
  c.iterations = 2;
  EXPECT_THROW(sf::run_logreg(c, linear_regression_data(50, 1)), sf::InputError);
}

TEST(BnnExperiment, FitsNearlyLinearData) {
  auto c = sf::ExperimentConfig::defaults(sf::Task::kBnn);
  c.particles = 10;
  c.iterations = 1000;
  c.hidden = 10;
  c.batch = 50;
  c.eval_every = 100;
  c.grid_count = 4;
  c.step = 0.01;
  c.seed = 2;
  const auto out = sf::run_bnn(c, linear_regression_data(300, 9));
  // Target standard deviation is about 2.2; a useful fit is well below it.
  EXPECT_LT(out.mean_metric("test_rmse"), 0.8);
  EXPECT_TRUE(std::isfinite(out.mean_metric("test_log_likelihood")));
  EXPECT_EQ(lookup(out.trials[0].summary, "test_rows"), "30");
}

TEST(BnnExperiment, RejectsBinaryTargets) {
  auto c = sf::ExperimentConfig::defaults(sf::Task::kBnn);
  c.particles = 5;
  c.iterations = 2;
  EXPECT_THROW(sf::run_bnn(c, blobs(50, 1)), sf::InputError);
}

TEST(ExperimentData, LabelByNameOrIndex) {
  const fs::path dir = scratch_dir("data");
  fs::create_directories(dir);
  const fs::path file = dir / "d.csv";
  sf::write_text_file(file, "x,y,z\n1,2,3\n4,5,6\n7,8,9\n");

  sf::ExperimentConfig c = sf::ExperimentConfig::defaults(sf::Task::kBnn);
  c.dataset = file.string();
  c.label_column = "y";
  sf::Dataset d = sf::load_experiment_data(c);
  EXPECT_EQ(d.targets[1], 5.0);
  EXPECT_EQ(d.num_features(), 2u);

  c.label_column = "0";
  d = sf::load_experiment_data(c);
  EXPECT_EQ(d.targets[2], 7.0);

  c.label_column.clear();
  d = sf::load_experiment_data(c);
  EXPECT_EQ(d.targets[0], 3.0);

  c.dataset.clear();
  EXPECT_THROW(sf::load_experiment_data(c), sf::InputError);
  fs::remove_all(dir);
}

TEST(ExperimentData, BostonCsvLoads) {
  sf::ExperimentConfig c = sf::ExperimentConfig::defaults(sf::Task::kBnn);
  c.dataset = std::string(STEINFLOW_SOURCE_DIR) + "/data/boston.csv";
  c.label_column = "MEDV";
  const sf::Dataset d = sf::load_experiment_data(c);
  EXPECT_EQ(d.size(), 506u);
  EXPECT_EQ(d.num_features(), 13u);
}
