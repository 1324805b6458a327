#include "steinflow/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "steinflow/errors.hpp"

namespace steinflow {

Vector ensemble_probability(const Matrix& probabilities) {
  if (probabilities.rows() < 1) throw InputError("metrics need at least one particle");
  return probabilities.colwise().mean().transpose();
}

ClassificationMetrics classification_metrics(const Matrix& probabilities, const Vector& labels) {
  if (probabilities.cols() != labels.size()) {
    throw InputError("classification metrics: probability and label counts differ");
  }
  if (labels.size() == 0) throw InputError("classification metrics: no test points");
  if ((probabilities.array() < 0.0).any() || (probabilities.array() > 1.0).any()) {
    throw InputError("classification metrics: probabilities must lie in [0, 1]");
  }
  constexpr double kFloor = 1e-12;
  const Vector prob = ensemble_probability(probabilities);
  double correct = 0.0;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const bool positive = labels[i] == 1.0;
    const bool predicted_positive = prob[i] > 0.5;
    if (positive == predicted_positive) correct += 1.0;
    const double p_true = positive ? prob[i] : 1.0 - prob[i];
    ll += std::log(std::max(p_true, kFloor));
  }
  const double n = static_cast<double>(labels.size());
  return {correct / n, ll / n};
}

RegressionMetrics regression_metrics(const Matrix& predictions, const Vector& precisions,
                                     const Vector& targets) {
  if (predictions.cols() != targets.size() || predictions.rows() != precisions.size()) {
    throw InputError("regression metrics: shape mismatch");
  }
  if (predictions.rows() < 1 || targets.size() == 0) {
    throw InputError("regression metrics need particles and test points");
  }
  if ((precisions.array() <= 0.0).any() || !precisions.allFinite()) {
    throw InputError("regression metrics: precisions must be positive");
  }
  constexpr double kLog2Pi = 1.8378770664093453;
  const Vector mean_pred = predictions.colwise().mean().transpose();
  const double rmse = std::sqrt((mean_pred - targets).squaredNorm() / static_cast<double>(targets.size()));

  // log mean_j N(y; mu_j, 1/gamma_j), evaluated with a log-sum-exp.
  const double log_particles = std::log(static_cast<double>(predictions.rows()));
  double ll = 0.0;
  for (Eigen::Index t = 0; t < targets.size(); ++t) {
    Vector terms(predictions.rows());
    for (Eigen::Index j = 0; j < predictions.rows(); ++j) {
      const double r = targets[t] - predictions(j, t);
      terms[j] = 0.5 * (std::log(precisions[j]) - kLog2Pi) - 0.5 * precisions[j] * r * r;
    }
    const double top = terms.maxCoeff();
    ll += top + std::log((terms.array() - top).exp().sum()) - log_particles;
  }
  return {rmse, ll / static_cast<double>(targets.size())};
}

ParticleMoments particle_moments(const Matrix& particles) {
  if (particles.rows() < 1) throw InputError("particle moments need at least one particle");
  ParticleMoments out;
  out.mean = particles.colwise().mean().transpose();
  if (particles.rows() >= 2) {
    const Matrix centered = particles.rowwise() - out.mean.transpose();
    out.covariance = (centered.transpose() * centered) / static_cast<double>(particles.rows() - 1);
  }
  return out;
}

}  // namespace steinflow
