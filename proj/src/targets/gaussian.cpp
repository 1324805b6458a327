#include <cmath>
#include <numeric>

#include "steinflow/errors.hpp"
#include "steinflow/targets.hpp"

namespace steinflow {

std::vector<std::size_t> full_batch(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

GaussianTarget::GaussianTarget(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const auto d = mean_.size();
  if (d < 1) throw InputError("Gaussian target needs a nonempty mean");
  if (covariance_.rows() != d || covariance_.cols() != d) {
    throw InputError("Gaussian covariance shape does not match the mean");
  }
  if (!covariance_.isApprox(covariance_.transpose(), 1e-12)) {
    throw InputError("Gaussian covariance must be symmetric");
  }
  Eigen::LLT<Matrix> llt(covariance_);
  if (llt.info() != Eigen::Success) {
    throw InputError("Gaussian covariance must be positive definite");
  }
  chol_lower_ = llt.matrixL();
  precision_ = llt.solve(Matrix::Identity(d, d));
  precision_ = 0.5 * (precision_ + precision_.transpose());
}

Matrix GaussianTarget::score(const Matrix& positions, BatchIndices) const {
  if (positions.cols() != mean_.size()) {
    throw InputError("Gaussian score: particle dimension does not match the target");
  }
  Matrix centered = positions.rowwise() - mean_.transpose();
  // Row j is -Lambda (x_j - mu); Lambda is symmetric.
  return -(centered * precision_);
}

std::optional<double> GaussianTarget::log_density(const Eigen::Ref<const Vector>& x,
                                                  BatchIndices) const {
  if (x.size() != mean_.size()) throw InputError("Gaussian log-density: dimension mismatch");
  const Vector centered = x - mean_;
  return -0.5 * centered.dot(precision_ * centered);
}

GaussianTarget toy_gaussian_target() {
  Vector mean(2);
  mean << -0.6871, 0.8010;
  Matrix cov(2, 2);
  cov << 0.2260, 0.1652, 0.1652, 0.6779;
  return GaussianTarget(std::move(mean), std::move(cov));
}

}  // namespace steinflow
