#pragma once

#include <optional>

#include "steinflow/kernel.hpp"

namespace steinflow {

struct ClassificationMetrics {
  double accuracy = 0.0;
  double log_likelihood = 0.0;
};

/// Ensemble probability is the mean over particles (rows); accuracy uses a
/// 0.5 threshold and the log-likelihood averages log p(true label), with
/// probabilities clipped below at 1e-12.
ClassificationMetrics classification_metrics(const Matrix& probabilities, const Vector& labels);

/// Particle-averaged class-1 probability per test point.
Vector ensemble_probability(const Matrix& probabilities);

struct RegressionMetrics {
  double rmse = 0.0;
  double log_likelihood = 0.0;
};

/// RMSE of the ensemble-mean prediction and mean log of the particle-averaged
/// Gaussian predictive density. predictions is particles x test points.
RegressionMetrics regression_metrics(const Matrix& predictions, const Vector& precisions,
                                     const Vector& targets);

struct ParticleMoments {
  Vector mean;
  std::optional<Matrix> covariance;  ///< divides by n - 1; absent for n < 2
};

ParticleMoments particle_moments(const Matrix& particles);

}  // namespace steinflow
