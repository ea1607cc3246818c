#pragma once

#include <cstddef>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gpgc/dataset.hpp"

namespace gpgc::reference {

// Largest N the dense reference accepts.
inline constexpr std::size_t kMaxDenseInstances = 2000;

// Exact GP with the N x N augmented covariance K_E = E + F^T Sigma F built
// and factorized directly. Test-scale ground truth for the low-rank path.
class DenseGp {
public:
  // features: k x N. Throws SizeError above kMaxDenseInstances.
  DenseGp(const Eigen::MatrixXd &features, const GroupedDataset &dataset,
          const HyperParams &hyper, const Eigen::VectorXd &weights);

  const Eigen::MatrixXd &k_eps() const { return k_eps_; }
  const Eigen::VectorXd &alpha() const { return alpha_; }
  Eigen::MatrixXd inverse() const;
  Eigen::VectorXd inverse_diagonal() const;

  double log_det() const;
  double quad() const { return labels_.dot(alpha_); }
  // Unweighted log marginal at the effective noise.
  double log_marginal() const;
  double reweighted_log_marginal() const;

  double mean(const Eigen::Ref<const Eigen::VectorXd> &x) const;
  double variance(const Eigen::Ref<const Eigen::VectorXd> &x) const;

  // 1/2 tr((alpha alpha^T - K^-1) dK/dtheta) for coordinate `which` of
  // theta = [eps_1..eps_G, sigma_1..sigma_S], plus the reweighting
  // correction for eps coordinates.
  double gradient(std::size_t which) const;

private:
  Eigen::MatrixXd features_;
  GroupedDataset dataset_;
  HyperParams hyper_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd labels_;
  Eigen::VectorXd sigma2_;
  Eigen::MatrixXd k_eps_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
};

double dense_lml(const Eigen::MatrixXd &features, const GroupedDataset &dataset,
                 const HyperParams &hyper, const Eigen::VectorXd &weights);

double dense_grad(const Eigen::MatrixXd &features, const GroupedDataset &dataset,
                  const HyperParams &hyper, const Eigen::VectorXd &weights,
                  std::size_t which);

} // namespace gpgc::reference
