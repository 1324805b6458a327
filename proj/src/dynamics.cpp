#include "steinflow/dynamics.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>

#include "steinflow/data.hpp"
#include "steinflow/errors.hpp"

namespace steinflow {

Matrix svgd_direction(const KernelBlock& kernel, const Matrix& scores) {
  const SteinTerms terms = stein_terms(kernel, scores);
  return (terms.kernel_scores + terms.grad_colsum) / static_cast<double>(kernel.n());
}

Matrix mk_svgd_direction(const PairwiseKernelEval& eval, const Matrix& scores,
                         const KernelWeights& w) {
  if (w.size() != eval.num_kernels()) {
    throw InputError("mk_svgd_direction: weight count does not match the number of kernels");
  }
  if (scores.rows() != static_cast<Eigen::Index>(eval.n()) ||
      scores.cols() != static_cast<Eigen::Index>(eval.dim())) {
    throw InputError("mk_svgd_direction: score shape does not match the kernel evaluation");
  }
  Matrix phi = Matrix::Zero(scores.rows(), scores.cols());
  for (std::size_t i = 0; i < eval.num_kernels(); ++i) {
    if (w[i] == 0.0) continue;
    phi += w[i] * svgd_direction(eval.kernel(i), scores);
  }
  return phi;
}

AdaGrad::AdaGrad(Eigen::Index rows, Eigen::Index cols, double step, double fudge)
    : accum_(Matrix::Zero(rows, cols)), step_(step), fudge_(fudge) {
  if (!(step > 0.0)) throw InputError("AdaGrad step size must be positive");
  if (!(fudge > 0.0)) throw InputError("AdaGrad fudge factor must be positive");
}

Matrix AdaGrad::step(const Matrix& grad) {
  if (grad.rows() != accum_.rows() || grad.cols() != accum_.cols()) {
    throw InputError("AdaGrad: gradient shape does not match the state");
  }
  accum_.array() += grad.array().square();
  return (step_ * grad.array() / (fudge_ + accum_.array().sqrt())).matrix();
}

namespace {

using Clock = std::chrono::steady_clock;

void validate(const ScoreModel& model, const Matrix& init, const RunConfig& config) {
  if (config.iterations < 1) throw InputError("iteration count must be at least 1");
  if (config.weight_cadence < 1) throw InputError("weight update cadence must be at least 1");
  if (init.rows() < 1) throw InputError("need at least one particle");
  if (static_cast<std::size_t>(init.cols()) != model.dim()) {
    throw InputError("particle dimension does not match the model");
  }
  if (!init.allFinite()) throw InputError("initial particles must be finite");
}

void require_finite_rows(const Matrix& m, const char* what, int iteration) {
  for (Eigen::Index j = 0; j < m.rows(); ++j) {
    if (!m.row(j).allFinite()) throw NumericalError(std::string("non-finite ") + what, iteration, static_cast<std::size_t>(j));
  }
}

// Scores for the current iteration; data-backed models draw a minibatch.
class ScoreSource {
 public:
  ScoreSource(const ScoreModel& model, const RunConfig& config) : model_(model) {
    const std::size_t n_data = model.num_data();
    if (n_data == 0) return;
    const std::size_t batch = config.batch_size == 0 ? n_data : std::min(config.batch_size, n_data);
    if (batch == n_data) {
      full_ = full_batch(n_data);
    } else {
      stream_ = std::make_unique<MinibatchStream>(n_data, batch, config.seed);
    }
  }

  Matrix operator()(const Matrix& particles, int iteration) {
    BatchIndices batch;
    if (stream_) {
      batch = stream_->next();
    } else if (!full_.empty()) {
      batch = full_;
    }
    Matrix scores = model_.score(particles, batch);
    require_finite_rows(scores, "score", iteration);
    return scores;
  }

 private:
  const ScoreModel& model_;
  std::vector<std::size_t> full_;
  std::unique_ptr<MinibatchStream> stream_;
};

std::vector<double> observe(const IterationObserver* observer, int iteration, const Matrix& x,
                            bool last) {
  if (!observer || observer->names.empty()) return {};
  const int every = std::max(1, observer->every);
  if ((iteration + 1) % every != 0 && !last) {
    return std::vector<double>(observer->names.size(), std::numeric_limits<double>::quiet_NaN());
  }
  std::vector<double> values = observer->evaluate(iteration, x);
  if (values.size() != observer->names.size()) {
    throw InputError("observer returned the wrong number of metrics");
  }
  return values;
}

KernelWeights ascent_update(const KernelWeights& w, const std::vector<double>& ksd,
                            std::vector<double>& accum, const RunConfig& config, bool& fallback) {
  std::vector<double> next(w.size());
  double norm2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    accum[i] += ksd[i] * ksd[i];
    const double v = w[i] + config.weight_step * ksd[i] / (config.fudge + std::sqrt(accum[i]));
    next[i] = std::max(v, 0.0);
    norm2 += next[i] * next[i];
  }
  fallback = !(norm2 > 0.0);
  if (fallback) return KernelWeights::uniform(w.size());
  return KernelWeights::normalized(std::move(next));
}

}  // namespace

RunResult run_mk_svgd(const ScoreModel& model, Matrix init, const BandwidthGrid& grid,
                      const RunConfig& config, const IterationObserver* observer) {
  validate(model, init, config);
  const std::size_t m = grid.size();

  RunResult out;
  out.particles = std::move(init);
  out.trace.bandwidths = grid.values();
  if (observer) out.trace.metric_names = observer->names;
  out.trace.records.reserve(static_cast<std::size_t>(config.iterations));

  Matrix& x = out.particles;
  KernelWeights weights = KernelWeights::uniform(m);
  std::vector<double> weight_accum(m, 0.0);
  AdaGrad optimizer(x.rows(), x.cols(), config.step, config.fudge);
  ScoreSource scores_at(model, config);

  PairwiseKernelEval eval(x, grid);
  for (int t = 0; t < config.iterations; ++t) {
    const auto start = Clock::now();
    if (t > 0) eval.update(x);
    const Matrix scores = scores_at(x, t);

    // One pass per kernel feeds both the weighted direction and its KSD.
    IterationRecord rec;
    rec.iteration = t;
    rec.ksd.resize(m);
    Matrix phi = Matrix::Zero(x.rows(), x.cols());
    for (std::size_t i = 0; i < m; ++i) {
      const SteinTerms terms = stein_terms(eval.kernel(i), scores);
      rec.ksd[i] = v_statistic(terms, scores);
      if (weights[i] != 0.0) {
        phi += weights[i] * ((terms.kernel_scores + terms.grad_colsum) / static_cast<double>(x.rows()));
      }
    }
    x += optimizer.step(phi);
    require_finite_rows(x, "particle position", t);

    if ((t + 1) % config.weight_cadence == 0) {
      if (config.weight_mode == WeightMode::kClosedForm) {
        WeightUpdate update = optimal_weights(KsdEstimate{rec.ksd, Estimator::kVStatistic});
        weights = std::move(update.weights);
        rec.weight_fallback = update.fallback;
      } else {
        weights = ascent_update(weights, rec.ksd, weight_accum, config, rec.weight_fallback);
      }
    }
    rec.weights = weights.values();
    rec.mksd = mksd(KsdEstimate{rec.ksd, Estimator::kVStatistic}, weights);
    rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    rec.metrics = observe(observer, t, x, t + 1 == config.iterations);
    out.trace.records.push_back(std::move(rec));
  }
  return out;
}

RunResult run_svgd(const ScoreModel& model, Matrix init, std::optional<double> bandwidth,
                   const RunConfig& config, const IterationObserver* observer) {
  validate(model, init, config);
  if (!bandwidth && init.rows() < 2) {
    throw InputError("the median heuristic needs at least two particles");
  }

  RunResult out;
  out.particles = std::move(init);
  if (bandwidth) out.trace.bandwidths = {*bandwidth};
  if (!bandwidth) out.trace.metric_names.push_back("bandwidth");
  if (observer) {
    out.trace.metric_names.insert(out.trace.metric_names.end(), observer->names.begin(),
                                  observer->names.end());
  }
  out.trace.records.reserve(static_cast<std::size_t>(config.iterations));

  Matrix& x = out.particles;
  AdaGrad optimizer(x.rows(), x.cols(), config.step, config.fudge);
  ScoreSource scores_at(model, config);

  for (int t = 0; t < config.iterations; ++t) {
    const auto start = Clock::now();
    const double h = bandwidth ? *bandwidth : median_heuristic(x);
    const PairwiseKernelEval eval = build_pairwise_eval(x, BandwidthGrid({h}));
    const Matrix scores = scores_at(x, t);

    const SteinTerms terms = stein_terms(eval.kernel(0), scores);
    x += optimizer.step((terms.kernel_scores + terms.grad_colsum) / static_cast<double>(x.rows()));
    require_finite_rows(x, "particle position", t);

    IterationRecord rec;
    rec.iteration = t;
    rec.ksd = {v_statistic(terms, scores)};
    rec.weights = {1.0};
    rec.mksd = rec.ksd[0];
    rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (!bandwidth) rec.metrics.push_back(h);
    const std::vector<double> task = observe(observer, t, x, t + 1 == config.iterations);
    rec.metrics.insert(rec.metrics.end(), task.begin(), task.end());
    out.trace.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace steinflow
