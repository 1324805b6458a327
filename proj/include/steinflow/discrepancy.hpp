#pragma once

// Empirical kernelized Stein discrepancy, its multi-kernel extension and the
// closed-form weights that maximize it.

#include <vector>

#include "steinflow/kernel.hpp"

namespace steinflow {

enum class Estimator {
  kUStatistic,  ///< ordered pairs j != l, divided by n(n-1)
  kVStatistic,  ///< all n^2 pairs including the diagonal
};

struct KsdEstimate {
  std::vector<double> per_kernel;
  Estimator kind = Estimator::kVStatistic;
};

/// Stein kernel u_p(x, y) for one base kernel:
///   s(x)^T k s(y) + s(x)^T grad_y k + grad_x k^T s(y) + Tr grad_x grad_y k.
double u_term(const Eigen::Ref<const Vector>& score_x, const Eigen::Ref<const Vector>& score_y,
              double k_val, const Eigen::Ref<const Vector>& grad_x_k,
              const Eigen::Ref<const Vector>& grad_y_k, double trace_hess);

/// Score contractions of one symmetric kernel block, shared by the SVGD
/// direction and the V-statistic: kernel_scores = K S, grad_colsum(l, c) =
/// sum_j grad[c](j, l), trace_sum = sum of trace_hess.
struct SteinTerms {
  Matrix kernel_scores;
  Matrix grad_colsum;
  double trace_sum = 0.0;
};

SteinTerms stein_terms(const KernelBlock& block, const Matrix& scores);

/// V-statistic KSD from precomputed terms.
double v_statistic(const SteinTerms& terms, const Matrix& scores);

/// KSD of one (symmetric) kernel block against scores s_p(x_j) stored row-wise.
double kernel_stein_discrepancy(const KernelBlock& block, const Matrix& scores, Estimator kind);

KsdEstimate ksd_per_kernel(const PairwiseKernelEval& eval, const Matrix& scores, Estimator kind);

/// <w, per_kernel>.
double mksd(const KsdEstimate& estimate, const KernelWeights& w);

struct WeightUpdate {
  KernelWeights weights;
  /// Every clamped entry was zero, uniform weights were returned instead.
  bool fallback = false;
};

/// w_i = sqrt(S_i / sum_j S_j) with S clamped at zero.
WeightUpdate optimal_weights(const KsdEstimate& estimate);

}  // namespace steinflow
