#pragma once

// Target distributions, accessed through their score function
// grad_x log p(x).

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "steinflow/kernel.hpp"

namespace steinflow {

/// Indices into a model's training data. Data-backed models scale the
/// likelihood of a batch by N/|B|.
using BatchIndices = std::span<const std::size_t>;

class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual std::size_t dim() const = 0;

  /// Number of training points; 0 for models without data.
  virtual std::size_t num_data() const { return 0; }

  /// Row j of the result is grad log p at row j of positions.
  virtual Matrix score(const Matrix& positions, BatchIndices batch) const = 0;

  /// Unnormalized log-density, when the model has one.
  virtual std::optional<double> log_density(const Eigen::Ref<const Vector>& /*x*/,
                                            BatchIndices /*batch*/) const {
    return std::nullopt;
  }
};

/// All indices 0..n-1.
std::vector<std::size_t> full_batch(std::size_t n);

class GaussianTarget final : public ScoreModel {
 public:
  /// Throws InputError unless covariance is symmetric positive definite.
  GaussianTarget(Vector mean, Matrix covariance);

  std::size_t dim() const override { return static_cast<std::size_t>(mean_.size()); }
  Matrix score(const Matrix& positions, BatchIndices batch = {}) const override;
  std::optional<double> log_density(const Eigen::Ref<const Vector>& x,
                                    BatchIndices batch = {}) const override;

  const Vector& mean() const noexcept { return mean_; }
  const Matrix& covariance() const noexcept { return covariance_; }
  const Matrix& precision() const noexcept { return precision_; }

  /// Exact samples, one per row.
  template <typename Rng>
  Matrix sample(std::size_t count, Rng& rng) const;

 private:
  Vector mean_;
  Matrix covariance_;
  Matrix precision_;
  Matrix chol_lower_;
};

/// Two-dimensional target used by the toy experiment.
GaussianTarget toy_gaussian_target();

/// Numerically safe logistic function.
double sigmoid(double z);
/// log sigmoid(z) without overflow.
double log_sigmoid(double z);

/// Hierarchical Bayesian logistic regression over the particle layout
/// [theta (p entries), log alpha], with theta | alpha ~ N(0, alpha^-1 I) and
/// alpha ~ Gamma(shape, rate).
class LogisticRegressionPosterior final : public ScoreModel {
 public:
  struct Hyper {
    double shape = 1.0;
    double rate = 0.01;
  };

  LogisticRegressionPosterior(Matrix features, Vector labels, Hyper hyper);

  std::size_t dim() const override { return static_cast<std::size_t>(features_.cols()) + 1; }
  std::size_t num_data() const override { return static_cast<std::size_t>(features_.rows()); }
  std::size_t num_features() const { return static_cast<std::size_t>(features_.cols()); }
  Matrix score(const Matrix& positions, BatchIndices batch) const override;
  std::optional<double> log_density(const Eigen::Ref<const Vector>& x,
                                    BatchIndices batch) const override;

  const Hyper& hyper() const noexcept { return hyper_; }

 private:
  Matrix features_;
  Vector labels_;
  Hyper hyper_;
};

/// Per-particle class-1 probabilities sigma(theta_i^T x), particles x test points.
Matrix predictive_blr(const Matrix& positions, const Matrix& features);

/// Offsets of the flattened one-hidden-layer network inside a particle:
/// W1 (inputs x hidden, row-major), b1, W2, b2, log lambda, log gamma.
struct BnnLayout {
  std::size_t inputs = 0;
  std::size_t hidden = 0;

  std::size_t w1() const { return 0; }
  std::size_t b1() const { return inputs * hidden; }
  std::size_t w2() const { return b1() + hidden; }
  std::size_t b2() const { return w2() + hidden; }
  std::size_t log_lambda() const { return b2() + 1; }
  std::size_t log_gamma() const { return b2() + 2; }
  std::size_t num_weights() const { return b2() + 1; }
  std::size_t size() const { return b2() + 3; }
};

/// Network output for every row of features, given one flattened particle.
Vector bnn_forward(const BnnLayout& layout, const Eigen::Ref<const Vector>& particle,
                   const Matrix& features);

/// Bayesian neural network regression: Gaussian likelihood with precision
/// gamma, isotropic Gaussian weight prior with precision lambda, Gamma
/// hyperpriors on both, sampled in log space.
class BnnPosterior final : public ScoreModel {
 public:
  struct Hyper {
    double gamma_shape = 1.0;
    double gamma_rate = 0.1;
    double lambda_shape = 1.0;
    double lambda_rate = 0.1;
  };

  /// features and targets are expected to be standardized already.
  BnnPosterior(Matrix features, Vector targets, std::size_t hidden, Hyper hyper);

  std::size_t dim() const override { return layout_.size(); }
  std::size_t num_data() const override { return static_cast<std::size_t>(features_.rows()); }
  Matrix score(const Matrix& positions, BatchIndices batch) const override;
  std::optional<double> log_density(const Eigen::Ref<const Vector>& x,
                                    BatchIndices batch) const override;

  const BnnLayout& layout() const noexcept { return layout_; }
  const Hyper& hyper() const noexcept { return hyper_; }
  const Matrix& features() const noexcept { return features_; }
  const Vector& targets() const noexcept { return targets_; }

  /// Likelihood-only gradient with the N/|B| factor replaced by data_scale;
  /// the prior blocks come from prior_score.
  Vector likelihood_score(const Eigen::Ref<const Vector>& particle, BatchIndices batch,
                          double data_scale) const;
  Vector prior_score(const Eigen::Ref<const Vector>& particle) const;

 private:
  Matrix features_;
  Vector targets_;
  BnnLayout layout_;
  Hyper hyper_;
};

struct TargetScaling {
  double mean = 0.0;
  double std = 1.0;
};

struct BnnPrediction {
  Matrix means;       ///< particles x test points, in original target units
  Vector precisions;  ///< per-particle noise precision in original units
};

/// Forward pass per particle on standardized features; outputs mapped back
/// through the training-target scaling.
BnnPrediction predictive_bnn(const BnnLayout& layout, const Matrix& positions,
                             const Matrix& features, const std::optional<TargetScaling>& scaling);

// ---------------------------------------------------------------------------

template <typename Rng>
Matrix GaussianTarget::sample(std::size_t count, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(static_cast<Eigen::Index>(count), mean_.size());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index c = 0; c < z.cols(); ++c) z(i, c) = normal(rng);
  }
  Matrix out = z * chol_lower_.transpose();
  out.rowwise() += mean_.transpose();
  return out;
}

}  // namespace steinflow
