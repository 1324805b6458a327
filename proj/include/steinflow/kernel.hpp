#pragma once

// RBF base kernels k_h(x, y) = exp(-||x - y||^2 / h), their analytic
// derivatives, bandwidth grids and the nonnegative linear combiner.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace steinflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Particle positions, one particle per row.
using Particles = Matrix;

struct RbfValue {
  double value = 0.0;
  Vector grad_x;            ///< gradient with respect to the first argument
  double trace_hess = 0.0;  ///< Tr of the mixed Hessian d^2 k / dx dy
};

RbfValue rbf_eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                  double bandwidth);

/// Strictly increasing list of positive RBF bandwidths.
class BandwidthGrid {
 public:
  explicit BandwidthGrid(std::vector<double> bandwidths);

  /// lo, lo*factor, lo*factor^2, ... (count entries). factor < 1 yields a
  /// decreasing sequence, which is stored in increasing order.
  static BandwidthGrid geometric(double lo, double factor, std::size_t count);

  std::size_t size() const noexcept { return bandwidths_.size(); }
  double operator[](std::size_t i) const { return bandwidths_[i]; }
  const std::vector<double>& values() const noexcept { return bandwidths_; }

 private:
  std::vector<double> bandwidths_;
};

/// Kernel weights on the unit sphere of the nonnegative orthant.
class KernelWeights {
 public:
  /// Throws InputError unless every entry is >= 0 and the 2-norm is 1
  /// within 1e-9.
  explicit KernelWeights(std::vector<double> weights);

  /// w_i = 1/sqrt(m).
  static KernelWeights uniform(std::size_t m);

  /// Rescales a nonnegative vector with positive norm onto the sphere.
  static KernelWeights normalized(std::vector<double> raw);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  const std::vector<double>& values() const noexcept { return w_; }

 private:
  std::vector<double> w_;
};

/// Pairwise quantities of one kernel over a particle set.
///   values(j, l)     = k(x_j, x_l)
///   grad[c](j, l)    = d k(x_j, x_l) / d x_{j,c}
///   trace_hess(j, l) = Tr grad_{x_j} grad_{x_l} k(x_j, x_l)
struct KernelBlock {
  Matrix values;
  std::vector<Matrix> grad;
  Matrix trace_hess;

  /// Optional caches filled by PairwiseKernelEval: grad_colsum(l, c) is the
  /// column sum of grad[c] over j, trace_sum the sum of trace_hess.
  Matrix grad_colsum;
  std::optional<double> trace_sum;

  std::size_t n() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t dim() const noexcept { return grad.size(); }
  Vector grad_at(std::size_t j, std::size_t l) const;
};

/// Column sums of the gradient planes, n x d; uses the cache when present.
Matrix grad_column_sums(const KernelBlock& block);
/// Sum of all trace_hess entries; uses the cache when present.
double trace_hess_sum(const KernelBlock& block);

/// Per-kernel pairwise evaluation over one particle set. The squared
/// distance matrix is computed once and shared by every kernel.
class PairwiseKernelEval {
 public:
  PairwiseKernelEval(const Particles& particles, const BandwidthGrid& grid);

  /// Re-evaluates at new positions of the same shape, reusing storage.
  void update(const Particles& particles);

  std::size_t n() const noexcept { return static_cast<std::size_t>(sqdist_->rows()); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_kernels() const noexcept { return blocks_.size(); }

  const Matrix& sqdist() const noexcept { return *sqdist_; }
  std::shared_ptr<const Matrix> shared_sqdist() const noexcept { return sqdist_; }
  const std::vector<double>& bandwidths() const noexcept { return bandwidths_; }
  const KernelBlock& kernel(std::size_t i) const { return blocks_.at(i); }

 private:
  std::size_t dim_ = 0;
  std::vector<double> bandwidths_;
  std::shared_ptr<Matrix> sqdist_;
  std::vector<KernelBlock> blocks_;
};

PairwiseKernelEval build_pairwise_eval(const Particles& particles, const BandwidthGrid& grid);

/// sum_i c_i * kernel(i) for arbitrary real coefficients.
KernelBlock combine_kernels(const PairwiseKernelEval& eval, std::span<const double> coefficients);

/// The weighted multi-kernel k_w = sum_i w_i k_i and its derivatives.
KernelBlock multi_kernel_eval(const PairwiseKernelEval& eval, const KernelWeights& w);

/// h = med^2 / log n, med the median pairwise distance over i < j.
/// Falls back to 1 when every particle coincides.
double median_heuristic(const Particles& particles);

}  // namespace steinflow
