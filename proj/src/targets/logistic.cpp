#include <cmath>

#include "steinflow/errors.hpp"
#include "steinflow/targets.hpp"

namespace steinflow {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

namespace {

Matrix gather_rows(const Matrix& m, BatchIndices rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= static_cast<std::size_t>(m.rows())) {
      throw InputError("minibatch index out of range");
    }
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

}  // namespace

LogisticRegressionPosterior::LogisticRegressionPosterior(Matrix features, Vector labels,
                                                         Hyper hyper)
    : features_(std::move(features)), labels_(std::move(labels)), hyper_(hyper) {
  if (features_.rows() < 1 || features_.cols() < 1) {
    throw InputError("logistic regression needs a nonempty feature matrix");
  }
  if (labels_.size() != features_.rows()) {
    throw InputError("logistic regression: label count does not match feature rows");
  }
  for (Eigen::Index i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 0.0 && labels_[i] != 1.0) {
      throw InputError("logistic regression labels must be 0 or 1");
    }
  }
  if (!(hyper_.shape >= 0.0) || !(hyper_.rate > 0.0)) {
    throw InputError("Gamma hyperprior needs shape >= 0 and rate > 0");
  }
}

Matrix LogisticRegressionPosterior::score(const Matrix& positions, BatchIndices batch) const {
  if (batch.empty()) throw InputError("logistic regression score: empty minibatch");
  const auto p = features_.cols();
  if (positions.cols() != p + 1) {
    throw InputError("logistic regression score: particle dimension must be p + 1");
  }
  const Matrix xb = gather_rows(features_, batch);
  Vector yb(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t r = 0; r < batch.size(); ++r) yb[static_cast<Eigen::Index>(r)] = labels_[static_cast<Eigen::Index>(batch[r])];

  const auto theta = positions.leftCols(p);
  const Matrix logits = xb * theta.transpose();  // batch x particles
  Matrix residual(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (Eigen::Index j = 0; j < logits.cols(); ++j) residual(i, j) = yb[i] - sigmoid(logits(i, j));
  }
  const double scale = static_cast<double>(features_.rows()) / static_cast<double>(batch.size());

  Matrix out(positions.rows(), p + 1);
  out.leftCols(p) = scale * residual.transpose() * xb;
  const double dp = static_cast<double>(p);
  for (Eigen::Index j = 0; j < positions.rows(); ++j) {
    const double alpha = std::exp(positions(j, p));
    const double theta_sq = theta.row(j).squaredNorm();
    out.row(j).head(p) -= alpha * theta.row(j);
    out(j, p) = 0.5 * dp - 0.5 * alpha * theta_sq + hyper_.shape - hyper_.rate * alpha;
  }
  return out;
}

std::optional<double> LogisticRegressionPosterior::log_density(const Eigen::Ref<const Vector>& x,
                                                               BatchIndices batch) const {
  if (batch.empty()) throw InputError("logistic regression log-density: empty minibatch");
  const auto p = features_.cols();
  if (x.size() != p + 1) throw InputError("logistic regression log-density: dimension mismatch");
  const auto theta = x.head(p);
  const double log_alpha = x[p];
  const double alpha = std::exp(log_alpha);

  double loglik = 0.0;
  for (std::size_t r : batch) {
    if (r >= static_cast<std::size_t>(features_.rows())) throw InputError("minibatch index out of range");
    const double z = features_.row(static_cast<Eigen::Index>(r)).dot(theta);
    loglik += labels_[static_cast<Eigen::Index>(r)] == 1.0 ? log_sigmoid(z) : log_sigmoid(-z);
  }
  loglik *= static_cast<double>(features_.rows()) / static_cast<double>(batch.size());

  const double dp = static_cast<double>(p);
  const double log_prior_theta = 0.5 * dp * log_alpha - 0.5 * alpha * theta.squaredNorm();
  // Gamma(shape, rate) on alpha plus the log-transform Jacobian.
  const double log_prior_alpha = (hyper_.shape - 1.0) * log_alpha - hyper_.rate * alpha + log_alpha;
  return loglik + log_prior_theta + log_prior_alpha;
}

Matrix predictive_blr(const Matrix& positions, const Matrix& features) {
  const auto p = features.cols();
  if (positions.cols() != p && positions.cols() != p + 1) {
    throw InputError("predictive_blr: particle dimension does not match the features");
  }
  const Matrix logits = positions.leftCols(p) * features.transpose();
  return logits.unaryExpr([](double z) { return sigmoid(z); });
}

}  // namespace steinflow
