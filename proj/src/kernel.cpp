#include "steinflow/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "steinflow/errors.hpp"
#include "steinflow/parallel.hpp"

namespace steinflow {

namespace {

constexpr double kUnitNormTolerance = 1e-9;

void require_positive_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw InputError("RBF bandwidth must be a positive finite number");
  }
}

}  // namespace

RbfValue rbf_eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                  double bandwidth) {
  if (x.size() != y.size()) throw InputError("rbf_eval: dimension mismatch");
  require_positive_bandwidth(bandwidth);

  const Vector diff = x - y;
  const double r2 = diff.squaredNorm();
  const double d = static_cast<double>(x.size());
  RbfValue out;
  out.value = std::exp(-r2 / bandwidth);
  out.grad_x = (-2.0 / bandwidth * out.value) * diff;
  out.trace_hess = out.value * (2.0 * d / bandwidth - 4.0 * r2 / (bandwidth * bandwidth));
  return out;
}

BandwidthGrid::BandwidthGrid(std::vector<double> bandwidths) : bandwidths_(std::move(bandwidths)) {
  if (bandwidths_.empty()) throw InputError("bandwidth grid must not be empty");
  for (std::size_t i = 0; i < bandwidths_.size(); ++i) {
    require_positive_bandwidth(bandwidths_[i]);
    if (i > 0 && !(bandwidths_[i] > bandwidths_[i - 1])) {
      throw InputError("bandwidth grid must be strictly increasing");
    }
  }
}

BandwidthGrid BandwidthGrid::geometric(double lo, double factor, std::size_t count) {
  if (count == 0) throw InputError("bandwidth grid needs at least one kernel");
  require_positive_bandwidth(lo);
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw InputError("bandwidth grid factor must be positive");
  }
  if (count > 1 && factor == 1.0) {
    throw InputError("bandwidth grid factor must differ from 1 when count > 1");
  }
  std::vector<double> h(count);
  for (std::size_t i = 0; i < count; ++i) {
    h[i] = lo * std::pow(factor, static_cast<double>(i));
  }
  if (factor < 1.0) std::reverse(h.begin(), h.end());
  return BandwidthGrid(std::move(h));
}

KernelWeights::KernelWeights(std::vector<double> weights) : w_(std::move(weights)) {
  if (w_.empty()) throw InputError("kernel weights must not be empty");
  double norm2 = 0.0;
  for (double v : w_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InputError("kernel weights must be finite and nonnegative");
    }
    norm2 += v * v;
  }
  if (std::abs(std::sqrt(norm2) - 1.0) > kUnitNormTolerance) {
    throw InputError("kernel weights must have unit 2-norm");
  }
}

KernelWeights KernelWeights::uniform(std::size_t m) {
  if (m == 0) throw InputError("kernel weights must not be empty");
  return KernelWeights(std::vector<double>(m, 1.0 / std::sqrt(static_cast<double>(m))));
}

KernelWeights KernelWeights::normalized(std::vector<double> raw) {
  double norm2 = 0.0;
  for (double v : raw) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InputError("kernel weights must be finite and nonnegative");
    }
    norm2 += v * v;
  }
  if (!(norm2 > 0.0)) throw InputError("cannot normalize a zero weight vector");
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : raw) v *= inv;
  return KernelWeights(std::move(raw));
}

Vector KernelBlock::grad_at(std::size_t j, std::size_t l) const {
  Vector g(static_cast<Eigen::Index>(grad.size()));
  for (std::size_t c = 0; c < grad.size(); ++c) {
    g[static_cast<Eigen::Index>(c)] =
        grad[c](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
  }
  return g;
}

Matrix grad_column_sums(const KernelBlock& block) {
  const auto n = static_cast<Eigen::Index>(block.n());
  const auto d = static_cast<Eigen::Index>(block.dim());
  if (block.grad_colsum.rows() == n && block.grad_colsum.cols() == d) return block.grad_colsum;
  Matrix out(n, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    out.col(c) = block.grad[static_cast<std::size_t>(c)].colwise().sum().transpose();
  }
  return out;
}

double trace_hess_sum(const KernelBlock& block) {
  if (block.trace_sum) return *block.trace_sum;
  double s = 0.0;
  for (Eigen::Index l = 0; l < block.trace_hess.cols(); ++l) s += block.trace_hess.col(l).sum();
  return s;
}

PairwiseKernelEval::PairwiseKernelEval(const Particles& particles, const BandwidthGrid& grid)
    : dim_(static_cast<std::size_t>(particles.cols())), bandwidths_(grid.values()) {
  if (particles.rows() < 1) throw InputError("pairwise kernel evaluation needs at least one particle");
  if (particles.cols() < 1) throw InputError("particles must have positive dimension");
  blocks_.resize(bandwidths_.size());
  update(particles);
}

void PairwiseKernelEval::update(const Particles& particles) {
  const Eigen::Index n = particles.rows();
  const Eigen::Index d = particles.cols();
  if (n < 1) throw InputError("pairwise kernel evaluation needs at least one particle");
  if (static_cast<std::size_t>(d) != dim_) throw InputError("particle dimension changed between updates");

  // The squared distance is computed once and shared by all kernels; a
  // handed-out sqdist is never mutated.
  if (!sqdist_ || sqdist_.use_count() > 1) sqdist_ = std::make_shared<Matrix>();
  Matrix& sq = *sqdist_;
  sq.resize(n, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    for (Eigen::Index j = 0; j < n; ++j) {
      sq(j, l) = (particles.row(j) - particles.row(l)).squaredNorm();
    }
  }

  const double dd = static_cast<double>(d);
  parallel_for(blocks_.size(), [&](std::size_t i) {
    const double h = bandwidths_[i];
    KernelBlock& block = blocks_[i];
    block.values.resize(n, n);
    block.trace_hess.resize(n, n);
    block.grad.resize(static_cast<std::size_t>(d));
    for (Matrix& g : block.grad) g.resize(n, n);
    block.grad_colsum.resize(n, d);
    double tsum = 0.0;
    // Column at a time so each distance column is read while still cached.
    for (Eigen::Index l = 0; l < n; ++l) {
      const auto dist = sq.col(l).array();
      auto k = block.values.col(l).array();
      k = (dist * (-1.0 / h)).exp();
      auto tcol = block.trace_hess.col(l);
      tcol.array() = k * (2.0 * dd / h - (4.0 / (h * h)) * dist);
      tsum += tcol.sum();
      for (Eigen::Index c = 0; c < d; ++c) {
        auto gcol = block.grad[static_cast<std::size_t>(c)].col(l);
        gcol.array() = (-2.0 / h) * (particles.col(c).array() - particles(l, c)) * k;
        block.grad_colsum(l, c) = gcol.sum();
      }
    }
    block.trace_sum = tsum;
  });
}

PairwiseKernelEval build_pairwise_eval(const Particles& particles, const BandwidthGrid& grid) {
  return PairwiseKernelEval(particles, grid);
}

KernelBlock combine_kernels(const PairwiseKernelEval& eval, std::span<const double> coefficients) {
  if (coefficients.size() != eval.num_kernels()) {
    throw InputError("kernel coefficient count does not match the number of kernels");
  }
  const auto n = static_cast<Eigen::Index>(eval.n());
  KernelBlock out;
  out.values = Matrix::Zero(n, n);
  out.trace_hess = Matrix::Zero(n, n);
  out.grad.assign(eval.dim(), Matrix::Zero(n, n));
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    const double c = coefficients[i];
    const KernelBlock& k = eval.kernel(i);
    out.values += c * k.values;
    out.trace_hess += c * k.trace_hess;
    for (std::size_t a = 0; a < out.grad.size(); ++a) out.grad[a] += c * k.grad[a];
  }
  return out;
}

KernelBlock multi_kernel_eval(const PairwiseKernelEval& eval, const KernelWeights& w) {
  if (w.size() != eval.num_kernels()) {
    throw InputError("kernel weight count does not match the number of kernels");
  }
  return combine_kernels(eval, w.values());
}

double median_heuristic(const Particles& particles) {
  const Eigen::Index n = particles.rows();
  if (n < 2) throw InputError("median heuristic needs at least two particles");

  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dist.push_back((particles.row(i) - particles.row(j)).norm());
    }
  }
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double med = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  if (!(med > 0.0)) return 1.0;
  return med * med / std::log(static_cast<double>(n));
}

}  // namespace steinflow
