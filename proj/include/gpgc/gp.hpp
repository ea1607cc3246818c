#pragma once

#include <cstddef>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gpgc/dataset.hpp"
#include "gpgc/oracle.hpp"

namespace gpgc {

// Everything the Woodbury reduction solves for one hyperparameter vector.
// With E = diag(e) the effective noise variances (e_i = eps_g^2 / w_i),
// Sigma = diag(sigma_j^2), G = F E^-1 F^T and C = Sigma^-1 + G:
//
//   K_E^-1       = E^-1 - E^-1 F^T C^-1 F E^-1
//   ln|K_E|      = ln|E| + ln|Sigma| + ln|C|
//   y^T K_E^-1 y = y^T y~ - (F y~)^T C^-1 (F y~),      y~ = E^-1 y
//   F K_E^-1 F^T = G (I - C^-1 G)
//   alpha        = y~ - E^-1 F^T C^-1 F y~
//   diag(K_E^-1) = 1/e - diag(F^T C^-1 F) / e^2
//
// Built with one call to each of the four oracle queries plus O(k^3) work.
struct GpCache {
  Eigen::LLT<Eigen::MatrixXd> chol_c;
  Eigen::MatrixXd c_inv;
  Eigen::MatrixXd gram_inv_noise;
  Eigen::VectorXd noise_var;
  Eigen::VectorXd sigma_feat;
  Eigen::VectorXd y_tilde;
  Eigen::VectorXd f_y_tilde;
  Eigen::VectorXd alpha;
  Eigen::VectorXd f_alpha;
  Eigen::VectorXd inv_diag;
  Eigen::MatrixXd fkf;
  double log_det = 0.0;
  double quad = 0.0;
  bool jittered = false;

  // The theta and weights this cache was built for.
  HyperParams hyper;
  Eigen::VectorXd weights;

  std::size_t n_instances() const { return static_cast<std::size_t>(alpha.size()); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(f_alpha.size()); }
};

struct PosteriorPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

// Per-instance noise variance after reweighting: eps_{g(i)}^2 / w_i. A
// weight w_i behaves exactly like w_i duplicated copies of instance i.
Eigen::VectorXd effective_noise_variance(const HyperParams &hyper,
                                         const GroupedDataset &dataset,
                                         const Eigen::VectorXd &weights);

// Throws SingularityError if C cannot be factorized even after jitter.
GpCache build_cache(FeatureOracle &oracle, const GroupedDataset &dataset,
                    const HyperParams &hyper, const Eigen::VectorXd &weights);
GpCache build_cache(FeatureOracle &oracle, const GroupedDataset &dataset,
                    const HyperParams &hyper);
// Reuses the buffers of an existing cache.
void build_cache(FeatureOracle &oracle, const GroupedDataset &dataset,
                 const HyperParams &hyper, const Eigen::VectorXd &weights,
                 GpCache &cache);

// beta = Sigma F alpha, so that m(x) = beta^T phi(x).
Eigen::VectorXd prediction_weights(const GpCache &cache);

double posterior_mean(const GpCache &cache,
                      const Eigen::Ref<const Eigen::VectorXd> &x);
double posterior_mean(const TrainedModel &model,
                      const Eigen::Ref<const Eigen::VectorXd> &x);
// phi^T Sigma phi - (Sigma phi)^T F K_E^-1 F^T (Sigma phi), not clamped.
double posterior_variance_raw(const GpCache &cache,
                              const Eigen::Ref<const Eigen::VectorXd> &x);
double posterior_variance(const GpCache &cache,
                          const Eigen::Ref<const Eigen::VectorXd> &x);
PosteriorPrediction posterior(const GpCache &cache,
                              const Eigen::Ref<const Eigen::VectorXd> &x);

// -1/2 (y^T K_E^-1 y + ln|K_E| + N ln 2 pi) at the effective noise.
double log_marginal(const GpCache &cache);

// Weighted objective: log_marginal plus
//   1/2 sum_i [ln(eps_i^2 / w_i) - w_i ln eps_i^2] - 1/2 (sum w - N) ln 2 pi,
// which for integer w equals the log marginal of the dataset with every
// instance physically repeated w_i times.
double reweighted_log_marginal(const GpCache &cache, const HyperParams &hyper,
                               const GroupedDataset &dataset,
                               const Eigen::VectorXd &weights);

// d(reweighted objective)/d eps_g, tied over groups. Includes the
// (1 - w_i)/eps_g correction term. Throws StaleCacheError when hyper or
// weights differ from the cache's.
Eigen::VectorXd grad_noise(const GpCache &cache, const HyperParams &hyper,
                           const GroupedDataset &dataset,
                           const Eigen::VectorXd &weights);

// d(objective)/d sigma_s, tied over scale groups.
Eigen::VectorXd grad_scales(const GpCache &cache, const HyperParams &hyper);

} // namespace gpgc
