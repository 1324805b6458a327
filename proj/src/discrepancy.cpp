#include "steinflow/discrepancy.hpp"

#include <algorithm>
#include <cmath>

#include "steinflow/errors.hpp"

namespace steinflow {

double u_term(const Eigen::Ref<const Vector>& score_x, const Eigen::Ref<const Vector>& score_y,
              double k_val, const Eigen::Ref<const Vector>& grad_x_k,
              const Eigen::Ref<const Vector>& grad_y_k, double trace_hess) {
  const auto d = score_x.size();
  if (score_y.size() != d || grad_x_k.size() != d || grad_y_k.size() != d) {
    throw InputError("u_term: dimension mismatch");
  }
  return k_val * score_x.dot(score_y) + score_x.dot(grad_y_k) + grad_x_k.dot(score_y) +
         trace_hess;
}

SteinTerms stein_terms(const KernelBlock& block, const Matrix& scores) {
  if (scores.rows() != static_cast<Eigen::Index>(block.n()) ||
      scores.cols() != static_cast<Eigen::Index>(block.dim())) {
    throw InputError("KSD: score matrix shape does not match the kernel evaluation");
  }
  // K is symmetric, so K^T S = K S.
  return {block.values * scores, grad_column_sums(block), trace_hess_sum(block)};
}

double v_statistic(const SteinTerms& terms, const Matrix& scores) {
  // For a symmetric kernel grad_y k(x_j, x_l) = grad[.](l, j), so both cross
  // terms reduce to s_c . colsum(grad[c]).
  const double nn = static_cast<double>(scores.rows());
  const double total = (scores.array() * terms.kernel_scores.array()).sum() + terms.trace_sum +
                       2.0 * (scores.array() * terms.grad_colsum.array()).sum();
  return total / (nn * nn);
}

double kernel_stein_discrepancy(const KernelBlock& block, const Matrix& scores, Estimator kind) {
  const auto n = static_cast<Eigen::Index>(block.n());
  const auto d = static_cast<Eigen::Index>(block.dim());
  if (kind == Estimator::kUStatistic && n < 2) {
    throw InputError("U-statistic KSD needs at least two particles");
  }
  const SteinTerms terms = stein_terms(block, scores);
  const double v = v_statistic(terms, scores);
  if (kind == Estimator::kVStatistic) return v;

  double diagonal = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double cross = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
      cross += scores(j, c) * block.grad[static_cast<std::size_t>(c)](j, j);
    }
    diagonal += block.values(j, j) * scores.row(j).squaredNorm() + 2.0 * cross + block.trace_hess(j, j);
  }
  const double nn = static_cast<double>(n);
  return (v * nn * nn - diagonal) / (nn * (nn - 1.0));
}

KsdEstimate ksd_per_kernel(const PairwiseKernelEval& eval, const Matrix& scores, Estimator kind) {
  KsdEstimate out;
  out.kind = kind;
  out.per_kernel.reserve(eval.num_kernels());
  for (std::size_t i = 0; i < eval.num_kernels(); ++i) {
    out.per_kernel.push_back(kernel_stein_discrepancy(eval.kernel(i), scores, kind));
  }
  return out;
}

double mksd(const KsdEstimate& estimate, const KernelWeights& w) {
  if (estimate.per_kernel.size() != w.size()) {
    throw InputError("mksd: weight count does not match the number of kernels");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * estimate.per_kernel[i];
  return s;
}

WeightUpdate optimal_weights(const KsdEstimate& estimate) {
  const std::size_t m = estimate.per_kernel.size();
  if (m == 0) throw InputError("optimal_weights: empty KSD estimate");

  std::vector<double> clamped(m);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double s = estimate.per_kernel[i];
    if (std::isnan(s)) throw InputError("optimal_weights: KSD estimate is NaN");
    clamped[i] = std::max(s, 0.0);
    sum += clamped[i];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    return {KernelWeights::uniform(m), true};
  }
  for (double& v : clamped) v = std::sqrt(v / sum);
  // sqrt rounding can leave the norm a few ulps from 1.
  return {KernelWeights::normalized(std::move(clamped)), false};
}

}  // namespace steinflow
