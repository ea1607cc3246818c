#include "gpgc/reference.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gpgc/errors.hpp"

namespace gpgc::reference {

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);
}

DenseGp::DenseGp(const Eigen::MatrixXd &features, const GroupedDataset &dataset,
                 const HyperParams &hyper, const Eigen::VectorXd &weights)
    : features_(features), dataset_(dataset), hyper_(hyper), weights_(weights),
      labels_(dataset.labels()) {
  const auto n = static_cast<std::size_t>(features.cols());
  if (n > kMaxDenseInstances) {
    throw SizeError("dense reference limited to " + std::to_string(kMaxDenseInstances) +
                    " instances, got " + std::to_string(n));
  }
  if (n != dataset.n_instances() || static_cast<std::size_t>(weights.size()) != n ||
      static_cast<std::size_t>(features.rows()) != hyper.feature_dim()) {
    throw DimensionError("dense reference inputs disagree in size");
  }
  hyper.validate();
  sigma2_ = hyper.expand_sigma().array().square();

  k_eps_ = features_.transpose() * sigma2_.asDiagonal() * features_;
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = hyper.eps[dataset.group_of()[i]];
    const auto ii = static_cast<Eigen::Index>(i);
    k_eps_(ii, ii) += eps * eps / weights[ii];
  }
  llt_.compute(k_eps_);
  if (llt_.info() != Eigen::Success) {
    throw SingularityError("dense K_E is not positive definite");
  }
  alpha_ = llt_.solve(labels_);
}

Eigen::MatrixXd DenseGp::inverse() const {
  const auto n = k_eps_.rows();
  return llt_.solve(Eigen::MatrixXd::Identity(n, n));
}

Eigen::VectorXd DenseGp::inverse_diagonal() const { return inverse().diagonal(); }

double DenseGp::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

double DenseGp::log_marginal() const {
  return -0.5 * (quad() + log_det() + static_cast<double>(labels_.size()) * kLog2Pi);
}

double DenseGp::reweighted_log_marginal() const {
  double correction = 0.0;
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    const double eps = hyper_.eps[dataset_.group_of()[static_cast<std::size_t>(i)]];
    const double w = weights_[i];
    correction += 0.5 * (std::log(eps * eps / w) - w * std::log(eps * eps));
    correction -= 0.5 * (w - 1.0) * kLog2Pi;
  }
  return log_marginal() + correction;
}

double DenseGp::mean(const Eigen::Ref<const Eigen::VectorXd> &x) const {
  const Eigen::VectorXd kbar = features_.transpose() * (sigma2_.asDiagonal() * x);
  return kbar.dot(alpha_);
}

double DenseGp::variance(const Eigen::Ref<const Eigen::VectorXd> &x) const {
  const Eigen::VectorXd kbar = features_.transpose() * (sigma2_.asDiagonal() * x);
  const double prior = x.dot(sigma2_.asDiagonal() * x);
  return prior - kbar.dot(llt_.solve(kbar));
}

double DenseGp::gradient(std::size_t which) const {
  const auto n = k_eps_.rows();
  const auto g = hyper_.n_groups();
  const Eigen::MatrixXd outer = alpha_ * alpha_.transpose() - inverse();
  Eigen::MatrixXd dk = Eigen::MatrixXd::Zero(n, n);
  double correction = 0.0;
  if (which < g) {
    const double eps = hyper_.eps[static_cast<Eigen::Index>(which)];
    for (Eigen::Index i = 0; i < n; ++i) {
      if (dataset_.group_of()[static_cast<std::size_t>(i)] == which) {
        dk(i, i) = 2.0 * eps / weights_[i];
        correction += (1.0 - weights_[i]) / eps;
      }
    }
  } else if (which < g + hyper_.n_scale_groups()) {
    const auto s = which - g;
    const double sigma = hyper_.sigma[static_cast<Eigen::Index>(s)];
    Eigen::VectorXd d_sigma2 = Eigen::VectorXd::Zero(features_.rows());
    for (std::size_t j = 0; j < hyper_.scale_group_of.size(); ++j) {
      if (hyper_.scale_group_of[j] == s) {
        d_sigma2[static_cast<Eigen::Index>(j)] = 2.0 * sigma;
      }
    }
    dk = features_.transpose() * d_sigma2.asDiagonal() * features_;
  } else {
    throw DimensionError("gradient coordinate out of range");
  }
  // tr(A B) for symmetric B.
  return 0.5 * outer.cwiseProduct(dk).sum() + correction;
}

double dense_lml(const Eigen::MatrixXd &features, const GroupedDataset &dataset,
                 const HyperParams &hyper, const Eigen::VectorXd &weights) {
  return DenseGp(features, dataset, hyper, weights).reweighted_log_marginal();
}

double dense_grad(const Eigen::MatrixXd &features, const GroupedDataset &dataset,
                  const HyperParams &hyper, const Eigen::VectorXd &weights,
                  std::size_t which) {
  return DenseGp(features, dataset, hyper, weights).gradient(which);
}

} // namespace gpgc::reference
