#pragma once

// SVGD and multiple-kernel SVGD update directions, AdaGrad step control and
// the particle driver loop.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "steinflow/discrepancy.hpp"
#include "steinflow/kernel.hpp"
#include "steinflow/targets.hpp"

namespace steinflow {

/// phi(x_l) = 1/n sum_j [s(x_j) k(x_j, x_l) + grad_{x_j} k(x_j, x_l)], one row
/// per particle.
Matrix svgd_direction(const KernelBlock& kernel, const Matrix& scores);

/// sum_i w_i * svgd_direction(kernel i).
Matrix mk_svgd_direction(const PairwiseKernelEval& eval, const Matrix& scores,
                         const KernelWeights& w);

/// Elementwise AdaGrad: accum += g^2, delta = step * g / (fudge + sqrt(accum)).
class AdaGrad {
 public:
  AdaGrad(Eigen::Index rows, Eigen::Index cols, double step, double fudge = 1e-6);

  /// Returns the position increment for an ascent direction g.
  Matrix step(const Matrix& grad);

  const Matrix& accum() const noexcept { return accum_; }
  double base_step() const noexcept { return step_; }
  double fudge() const noexcept { return fudge_; }

 private:
  Matrix accum_;
  double step_;
  double fudge_;
};

enum class WeightMode {
  kClosedForm,     ///< w_i = sqrt(S_i / sum S)
  kAdaGradAscent,  ///< AdaGrad ascent on <w, S>, projected back onto the sphere
};

struct RunConfig {
  int iterations = 100;
  double step = 0.1;
  double fudge = 1e-6;
  std::uint64_t seed = 0;  ///< minibatch order
  int weight_cadence = 1;
  WeightMode weight_mode = WeightMode::kClosedForm;
  double weight_step = 0.05;
  std::size_t batch_size = 0;  ///< 0 uses the full dataset every iteration
};

struct IterationRecord {
  int iteration = 0;
  std::vector<double> weights;  ///< weights after this iteration's update
  std::vector<double> ksd;      ///< V-statistic per kernel, pre-move particles
  double mksd = 0.0;            ///< <weights, ksd>
  double seconds = 0.0;         ///< wall clock for the iteration
  bool weight_fallback = false;
  std::vector<double> metrics;
};

struct RunTrace {
  /// Kernel bandwidths; empty when the bandwidth is re-chosen every
  /// iteration (median heuristic), in which case it is logged as a metric.
  std::vector<double> bandwidths;
  std::vector<std::string> metric_names;
  std::vector<IterationRecord> records;
};

struct RunResult {
  Matrix particles;
  RunTrace trace;
};

/// Optional per-iteration task metrics; iterations where it is not invoked
/// record NaN.
struct IterationObserver {
  std::vector<std::string> names;
  std::function<std::vector<double>(int iteration, const Matrix& particles)> evaluate;
  int every = 1;
};

/// Multiple-kernel SVGD. Weights start uniform at 1/sqrt(m) and are
/// re-optimized every weight_cadence iterations from the V-statistic KSD.
RunResult run_mk_svgd(const ScoreModel& model, Matrix init, const BandwidthGrid& grid,
                      const RunConfig& config, const IterationObserver* observer = nullptr);

/// Single-kernel SVGD. A missing bandwidth selects the median heuristic,
/// recomputed from the current particles every iteration.
RunResult run_svgd(const ScoreModel& model, Matrix init, std::optional<double> bandwidth,
                   const RunConfig& config, const IterationObserver* observer = nullptr);

}  // namespace steinflow
