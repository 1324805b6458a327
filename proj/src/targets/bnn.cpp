#include <cmath>

#include "steinflow/errors.hpp"
#include "steinflow/parallel.hpp"
#include "steinflow/targets.hpp"

namespace steinflow {

namespace {

struct NetworkView {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w1;
  Eigen::Map<const Vector> b1;
  Eigen::Map<const Vector> w2;
  double b2;
};

NetworkView view(const BnnLayout& layout, const Eigen::Ref<const Vector>& particle) {
  const auto in = static_cast<Eigen::Index>(layout.inputs);
  const auto hid = static_cast<Eigen::Index>(layout.hidden);
  const double* base = particle.data();
  return NetworkView{
      {base + layout.w1(), in, hid},
      {base + layout.b1(), hid},
      {base + layout.w2(), hid},
      particle[static_cast<Eigen::Index>(layout.b2())],
  };
}

void check_particle(const BnnLayout& layout, const Eigen::Ref<const Vector>& particle) {
  if (static_cast<std::size_t>(particle.size()) != layout.size()) {
    throw InputError("BNN particle length does not match the network layout");
  }
}

void check_finite(const Vector& v, const char* layer) {
  if (!v.allFinite()) {
    throw NumericalError(std::string("non-finite values in BNN ") + layer, -1, 0);
  }
}

}  // namespace

Vector bnn_forward(const BnnLayout& layout, const Eigen::Ref<const Vector>& particle,
                   const Matrix& features) {
  check_particle(layout, particle);
  if (static_cast<std::size_t>(features.cols()) != layout.inputs) {
    throw InputError("BNN forward: feature width does not match the network inputs");
  }
  const NetworkView net = view(layout, particle);
  Matrix act = features * net.w1;
  act.rowwise() += net.b1.transpose();
  act = act.cwiseMax(0.0);
  Vector out = act * net.w2;
  out.array() += net.b2;
  return out;
}

BnnPosterior::BnnPosterior(Matrix features, Vector targets, std::size_t hidden, Hyper hyper)
    : features_(std::move(features)),
      targets_(std::move(targets)),
      layout_{static_cast<std::size_t>(features_.cols()), hidden},
      hyper_(hyper) {
  if (features_.rows() < 1 || features_.cols() < 1) {
    throw InputError("BNN needs a nonempty feature matrix");
  }
  if (targets_.size() != features_.rows()) {
    throw InputError("BNN: target count does not match feature rows");
  }
  if (hidden < 1) throw InputError("BNN needs at least one hidden unit");
  if (!(hyper_.gamma_shape >= 0.0) || !(hyper_.gamma_rate > 0.0) ||
      !(hyper_.lambda_shape >= 0.0) || !(hyper_.lambda_rate > 0.0)) {
    throw InputError("Gamma hyperpriors need shape >= 0 and rate > 0");
  }
}

Vector BnnPosterior::likelihood_score(const Eigen::Ref<const Vector>& particle, BatchIndices batch,
                                      double data_scale) const {
  check_particle(layout_, particle);
  if (batch.empty()) throw InputError("BNN score: empty minibatch");

  const auto bsz = static_cast<Eigen::Index>(batch.size());
  Matrix xb(bsz, features_.cols());
  Vector yb(bsz);
  for (Eigen::Index r = 0; r < bsz; ++r) {
    const std::size_t idx = batch[static_cast<std::size_t>(r)];
    if (idx >= static_cast<std::size_t>(features_.rows())) throw InputError("minibatch index out of range");
    xb.row(r) = features_.row(static_cast<Eigen::Index>(idx));
    yb[r] = targets_[static_cast<Eigen::Index>(idx)];
  }

  const NetworkView net = view(layout_, particle);
  const double gamma = std::exp(particle[static_cast<Eigen::Index>(layout_.log_gamma())]);

  Matrix pre = xb * net.w1;
  pre.rowwise() += net.b1.transpose();
  const Matrix act = pre.cwiseMax(0.0);
  Vector pred = act * net.w2;
  pred.array() += net.b2;
  check_finite(pred, "output layer");

  const Vector resid = yb - pred;
  const Vector err = (data_scale * gamma) * resid;  // d loglik / d output

  Vector g = Vector::Zero(particle.size());
  const auto hid = static_cast<Eigen::Index>(layout_.hidden);
  g.segment(static_cast<Eigen::Index>(layout_.w2()), hid) = act.transpose() * err;
  g[static_cast<Eigen::Index>(layout_.b2())] = err.sum();

  // ReLU subgradient is 0 at 0.
  Matrix delta = err * net.w2.transpose();
  delta = delta.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw1(
      g.data() + layout_.w1(), features_.cols(), hid);
  gw1 = xb.transpose() * delta;
  g.segment(static_cast<Eigen::Index>(layout_.b1()), hid) = delta.colwise().sum().transpose();
  check_finite(g, "hidden layer gradient");

  g[static_cast<Eigen::Index>(layout_.log_gamma())] =
      data_scale * (0.5 * static_cast<double>(bsz) - 0.5 * gamma * resid.squaredNorm());
  return g;
}

Vector BnnPosterior::prior_score(const Eigen::Ref<const Vector>& particle) const {
  check_particle(layout_, particle);
  const auto nw = static_cast<Eigen::Index>(layout_.num_weights());
  const double lambda = std::exp(particle[static_cast<Eigen::Index>(layout_.log_lambda())]);
  const double gamma = std::exp(particle[static_cast<Eigen::Index>(layout_.log_gamma())]);

  Vector g = Vector::Zero(particle.size());
  const auto weights = particle.head(nw);
  g.head(nw) = -lambda * weights;
  g[static_cast<Eigen::Index>(layout_.log_lambda())] =
      0.5 * static_cast<double>(nw) - 0.5 * lambda * weights.squaredNorm() +
      hyper_.lambda_shape - hyper_.lambda_rate * lambda;
  g[static_cast<Eigen::Index>(layout_.log_gamma())] = hyper_.gamma_shape - hyper_.gamma_rate * gamma;
  return g;
}

Matrix BnnPosterior::score(const Matrix& positions, BatchIndices batch) const {
  if (static_cast<std::size_t>(positions.cols()) != layout_.size()) {
    throw InputError("BNN score: particle dimension does not match the network layout");
  }
  if (batch.empty()) throw InputError("BNN score: empty minibatch");
  const double scale = static_cast<double>(features_.rows()) / static_cast<double>(batch.size());
  Matrix out(positions.rows(), positions.cols());
  parallel_for(static_cast<std::size_t>(positions.rows()), [&](std::size_t j) {
    const auto row = static_cast<Eigen::Index>(j);
    const Vector particle = positions.row(row).transpose();
    out.row(row) = (likelihood_score(particle, batch, scale) + prior_score(particle)).transpose();
  });
  return out;
}

std::optional<double> BnnPosterior::log_density(const Eigen::Ref<const Vector>& x,
                                                BatchIndices batch) const {
  check_particle(layout_, x);
  if (batch.empty()) throw InputError("BNN log-density: empty minibatch");
  constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

  const double log_lambda = x[static_cast<Eigen::Index>(layout_.log_lambda())];
  const double log_gamma = x[static_cast<Eigen::Index>(layout_.log_gamma())];
  const double lambda = std::exp(log_lambda);
  const double gamma = std::exp(log_gamma);

  const Vector pred = bnn_forward(layout_, x, features_);
  double loglik = 0.0;
  for (std::size_t r : batch) {
    if (r >= static_cast<std::size_t>(features_.rows())) throw InputError("minibatch index out of range");
    const double e = targets_[static_cast<Eigen::Index>(r)] - pred[static_cast<Eigen::Index>(r)];
    loglik += 0.5 * (log_gamma - kLog2Pi) - 0.5 * gamma * e * e;
  }
  loglik *= static_cast<double>(features_.rows()) / static_cast<double>(batch.size());

  const auto nw = static_cast<Eigen::Index>(layout_.num_weights());
  const double log_prior_w = 0.5 * static_cast<double>(nw) * (log_lambda - kLog2Pi) -
                             0.5 * lambda * x.head(nw).squaredNorm();
  const double log_hyper = (hyper_.lambda_shape - 1.0) * log_lambda - hyper_.lambda_rate * lambda +
                           log_lambda + (hyper_.gamma_shape - 1.0) * log_gamma -
                           hyper_.gamma_rate * gamma + log_gamma;
  return loglik + log_prior_w + log_hyper;
}

BnnPrediction predictive_bnn(const BnnLayout& layout, const Matrix& positions,
                             const Matrix& features, const std::optional<TargetScaling>& scaling) {
  if (!scaling) throw InputError("predictive_bnn: target standardization stats are required");
  if (!(scaling->std > 0.0)) throw InputError("predictive_bnn: target scale must be positive");
  BnnPrediction out;
  out.means.resize(positions.rows(), features.rows());
  out.precisions.resize(positions.rows());
  for (Eigen::Index j = 0; j < positions.rows(); ++j) {
    const Vector particle = positions.row(j).transpose();
    out.means.row(j) =
        (bnn_forward(layout, particle, features).array() * scaling->std + scaling->mean).transpose();
    out.precisions[j] =
        std::exp(particle[static_cast<Eigen::Index>(layout.log_gamma())]) / (scaling->std * scaling->std);
  }
  return out;
}

}  // namespace steinflow
