#include "gpgc/gp.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gpgc/errors.hpp"

namespace gpgc {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_shapes(const FeatureOracle &oracle, const GroupedDataset &dataset,
                  const HyperParams &hyper, const Eigen::VectorXd &weights) {
  const auto n = dataset.n_instances();
  if (oracle.n_instances() != n) {
    throw DimensionError("oracle serves " + std::to_string(oracle.n_instances()) +
                         " instances, dataset has " + std::to_string(n));
  }
  if (hyper.feature_dim() != oracle.feature_dim()) {
    throw DimensionError("scale-group map covers " +
                         std::to_string(hyper.feature_dim()) +
                         " features, oracle has " +
                         std::to_string(oracle.feature_dim()));
  }
  if (hyper.n_groups() != dataset.n_groups()) {
    throw DimensionError("hyperparameters have " + std::to_string(hyper.n_groups()) +
                         " noise groups, dataset has " +
                         std::to_string(dataset.n_groups()));
  }
  if (static_cast<std::size_t>(weights.size()) != n) {
    throw DimensionError("weight vector length does not match dataset");
  }
}

void check_fresh(const GpCache &cache, const HyperParams &hyper) {
  if (!(cache.hyper == hyper)) {
    throw StaleCacheError("cache was built for different hyperparameters");
  }
}

void check_input(const GpCache &cache, const Eigen::Ref<const Eigen::VectorXd> &x) {
  if (static_cast<std::size_t>(x.size()) != cache.feature_dim()) {
    throw DimensionError("test feature has length " + std::to_string(x.size()) +
                         ", expected " + std::to_string(cache.feature_dim()));
  }
}

} // namespace

Eigen::VectorXd effective_noise_variance(const HyperParams &hyper,
                                         const GroupedDataset &dataset,
                                         const Eigen::VectorXd &weights) {
  const auto eps = expand_noise(hyper, dataset);
  return eps.array().square() / weights.array();
}

void build_cache(FeatureOracle &oracle, const GroupedDataset &dataset,
                 const HyperParams &hyper, const Eigen::VectorXd &weights,
                 GpCache &cache) {
  hyper.validate();
  check_shapes(oracle, dataset, hyper, weights);
  const auto n = static_cast<Eigen::Index>(dataset.n_instances());
  const auto k = static_cast<Eigen::Index>(oracle.feature_dim());
  const auto &y = dataset.labels();

  cache.hyper = hyper;
  cache.weights = weights;
  cache.noise_var = effective_noise_variance(hyper, dataset, weights);
  cache.sigma_feat = hyper.expand_sigma();
  // y_tilde doubles as scratch for E^-1 until the gram query is done.
  cache.y_tilde = cache.noise_var.cwiseInverse();
  cache.gram_inv_noise.resize(k, k);
  oracle.weighted_gram(cache.y_tilde, cache.gram_inv_noise);

  Eigen::MatrixXd c = cache.gram_inv_noise;
  c.diagonal() += cache.sigma_feat.array().square().inverse().matrix();
  cache.chol_c.compute(c);
  cache.jittered = false;
  if (cache.chol_c.info() != Eigen::Success) {
    const double jitter = 1e-10 * c.trace() / static_cast<double>(k);
    c.diagonal().array() += jitter;
    cache.chol_c.compute(c);
    cache.jittered = true;
    if (cache.chol_c.info() != Eigen::Success) {
      throw SingularityError("capacitance matrix is not positive definite");
    }
  }

  cache.y_tilde.array() *= y.array();
  cache.f_y_tilde.resize(k);
  oracle.mat_vec(cache.y_tilde, cache.f_y_tilde);
  const Eigen::VectorXd c_inv_b = cache.chol_c.solve(cache.f_y_tilde);
  cache.quad = y.dot(cache.y_tilde) - cache.f_y_tilde.dot(c_inv_b);

  // alpha = y~ - E^-1 F^T C^-1 F y~, with F^T C^-1 F y~ from query (ii).
  cache.alpha.resize(n);
  oracle.mat_t_vec(c_inv_b, cache.alpha);
  cache.alpha = cache.y_tilde - (cache.alpha.array() / cache.noise_var.array()).matrix();
  cache.f_alpha = cache.f_y_tilde - cache.gram_inv_noise * c_inv_b;

  cache.c_inv = cache.chol_c.solve(Eigen::MatrixXd::Identity(k, k));
  cache.c_inv = 0.5 * (cache.c_inv + cache.c_inv.transpose()).eval();

  cache.inv_diag.resize(n);
  oracle.diag_quadratic(cache.c_inv, cache.inv_diag);
  cache.inv_diag = (cache.noise_var.array().inverse() -
                    cache.inv_diag.array() / cache.noise_var.array().square())
                       .matrix();

  const Eigen::MatrixXd c_inv_g = cache.chol_c.solve(cache.gram_inv_noise);
  cache.fkf = cache.gram_inv_noise - cache.gram_inv_noise * c_inv_g;
  cache.fkf = 0.5 * (cache.fkf + cache.fkf.transpose()).eval();

  const Eigen::MatrixXd &l = cache.chol_c.matrixLLT();
  cache.log_det = cache.noise_var.array().log().sum() +
                  2.0 * cache.sigma_feat.array().log().sum() +
                  2.0 * l.diagonal().array().log().sum();

  if (!std::isfinite(cache.quad) || !std::isfinite(cache.log_det)) {
    throw SingularityError("non-finite marginal likelihood terms");
  }
}

GpCache build_cache(FeatureOracle &oracle, const GroupedDataset &dataset,
                    const HyperParams &hyper, const Eigen::VectorXd &weights) {
  GpCache cache;
  build_cache(oracle, dataset, hyper, weights, cache);
  return cache;
}

GpCache build_cache(FeatureOracle &oracle, const GroupedDataset &dataset,
                    const HyperParams &hyper) {
  return build_cache(oracle, dataset, hyper, dataset.weights());
}

Eigen::VectorXd prediction_weights(const GpCache &cache) {
  return cache.sigma_feat.array().square().matrix().asDiagonal() * cache.f_alpha;
}

double posterior_mean(const GpCache &cache,
                      const Eigen::Ref<const Eigen::VectorXd> &x) {
  check_input(cache, x);
  return x.dot(cache.sigma_feat.array().square().matrix().cwiseProduct(cache.f_alpha));
}

double posterior_mean(const TrainedModel &model,
                      const Eigen::Ref<const Eigen::VectorXd> &x) {
  if (x.size() != model.beta.size()) {
    throw DimensionError("test feature has length " + std::to_string(x.size()) +
                         ", model expects " + std::to_string(model.beta.size()));
  }
  return model.beta.dot(x);
}

double posterior_variance_raw(const GpCache &cache,
                              const Eigen::Ref<const Eigen::VectorXd> &x) {
  check_input(cache, x);
  const Eigen::VectorXd s = cache.sigma_feat.array().square().matrix().cwiseProduct(x);
  return x.dot(s) - s.dot(cache.fkf * s);
}

double posterior_variance(const GpCache &cache,
                          const Eigen::Ref<const Eigen::VectorXd> &x) {
  return std::max(0.0, posterior_variance_raw(cache, x));
}

PosteriorPrediction posterior(const GpCache &cache,
                              const Eigen::Ref<const Eigen::VectorXd> &x) {
  return {posterior_mean(cache, x), posterior_variance(cache, x)};
}

double log_marginal(const GpCache &cache) {
  return -0.5 * (cache.quad + cache.log_det +
                 static_cast<double>(cache.n_instances()) * kLog2Pi);
}

double reweighted_log_marginal(const GpCache &cache, const HyperParams &hyper,
                               const GroupedDataset &dataset,
                               const Eigen::VectorXd &weights) {
  check_fresh(cache, hyper);
  const double lml = log_marginal(cache);
  if ((weights.array() == 1.0).all()) {
    return lml;
  }
  const Eigen::ArrayXd log_eps2 = expand_noise(hyper, dataset).array().square().log();
  const Eigen::ArrayXd w = weights.array();
  const double correction = 0.5 * ((log_eps2 - w.log()) - w * log_eps2).sum();
  const double n = static_cast<double>(weights.size());
  return lml + correction - 0.5 * (w.sum() - n) * kLog2Pi;
}

Eigen::VectorXd grad_noise(const GpCache &cache, const HyperParams &hyper,
                           const GroupedDataset &dataset,
                           const Eigen::VectorXd &weights) {
  check_fresh(cache, hyper);
  if (weights.size() != cache.weights.size() || weights != cache.weights) {
    throw StaleCacheError("cache was built for different weights");
  }
  const Eigen::ArrayXd eps = expand_noise(hyper, dataset).array();
  const Eigen::ArrayXd w = weights.array();
  // d/d eps_eff times d eps_eff / d eps_g, with eps_eff = eps_g / sqrt(w).
  Eigen::ArrayXd per_instance =
      (cache.alpha.array().square() - cache.inv_diag.array()) * eps / w;
  per_instance += (1.0 - w) / eps;
  return tie_gradients(per_instance.matrix(), dataset.group_of(), dataset.n_groups());
}

Eigen::VectorXd grad_scales(const GpCache &cache, const HyperParams &hyper) {
  check_fresh(cache, hyper);
  const Eigen::VectorXd per_feature =
      ((cache.f_alpha.array().square() - cache.fkf.diagonal().array()) *
       cache.sigma_feat.array())
          .matrix();
  return tie_gradients(per_feature, hyper.scale_group_of, hyper.n_scale_groups());
}

} // namespace gpgc
