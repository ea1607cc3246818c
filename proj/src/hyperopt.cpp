#include "gpgc/hyperopt.hpp"

#include <cmath>
#include <random>
#include <string>

#include "gpgc/errors.hpp"

namespace gpgc {

void OptimizerConfig::validate() const {
  if (max_iters < 0 || !(grad_tol > 0.0) || !(obj_rel_tol > 0.0) || memory < 1 ||
      !(init_eps > 0.0) || restarts < 1) {
    throw DomainError("invalid optimizer configuration");
  }
}

std::size_t count_scale_groups(const std::vector<GroupIndex> &scale_group_of) {
  if (scale_group_of.empty()) {
    throw DomainError("scale-group map is empty");
  }
  GroupIndex max_index = 0;
  for (auto s : scale_group_of) {
    max_index = std::max(max_index, s);
  }
  std::vector<bool> used(max_index + 1, false);
  for (auto s : scale_group_of) {
    used[s] = true;
  }
  for (std::size_t s = 0; s < used.size(); ++s) {
    if (!used[s]) {
      throw DomainError("scale group " + std::to_string(s) + " has no features");
    }
  }
  return used.size();
}

Eigen::VectorXd to_log_params(const HyperParams &hyper) {
  Eigen::VectorXd rho(hyper.eps.size() + hyper.sigma.size());
  rho << hyper.eps.array().log().matrix(), hyper.sigma.array().log().matrix();
  return rho;
}

HyperParams from_log_params(const Eigen::VectorXd &rho, std::size_t n_groups,
                            const std::vector<GroupIndex> &scale_group_of) {
  const auto g = static_cast<Eigen::Index>(n_groups);
  HyperParams hyper;
  hyper.eps = rho.head(g).array().exp().matrix();
  hyper.sigma = rho.tail(rho.size() - g).array().exp().matrix();
  hyper.scale_group_of = scale_group_of;
  return hyper;
}

double evaluate_objective(FeatureOracle &oracle, const GroupedDataset &dataset,
                          const Eigen::VectorXd &weights, const HyperParams &hyper,
                          GpCache &cache, Eigen::VectorXd &grad_rho) {
  build_cache(oracle, dataset, hyper, weights, cache);
  const double value = reweighted_log_marginal(cache, hyper, dataset, weights);
  const auto g = static_cast<Eigen::Index>(hyper.n_groups());
  const auto s = static_cast<Eigen::Index>(hyper.n_scale_groups());
  grad_rho.resize(g + s);
  grad_rho.head(g) = grad_noise(cache, hyper, dataset, weights).cwiseProduct(hyper.eps);
  grad_rho.tail(s) = grad_scales(cache, hyper).cwiseProduct(hyper.sigma);
  return value;
}

TrainResult train(FeatureOracle &oracle, const GroupedDataset &dataset,
                  const Eigen::VectorXd &weights,
                  const std::vector<GroupIndex> &scale_group_of,
                  const OptimizerConfig &config) {
  config.validate();
  const std::size_t k = oracle.feature_dim();
  if (scale_group_of.size() != k) {
    throw DimensionError("scale-group map has " + std::to_string(scale_group_of.size()) +
                         " entries, features have " + std::to_string(k));
  }
  const std::size_t n_scale = count_scale_groups(scale_group_of);
  const std::size_t n_groups = dataset.n_groups();

  HyperParams init;
  init.eps = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_groups), config.init_eps);
  const double sigma0 =
      config.init_sigma > 0.0 ? config.init_sigma : 1.0 / std::sqrt(static_cast<double>(k));
  init.sigma = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_scale), sigma0);
  init.scale_group_of = scale_group_of;
  const Eigen::VectorXd rho0 = to_log_params(init);

  GpCache cache;
  const ObjectiveFn negated = [&](const Eigen::VectorXd &rho, Eigen::VectorXd &grad) {
    const auto hyper = from_log_params(rho, n_groups, scale_group_of);
    const double value = evaluate_objective(oracle, dataset, weights, hyper, cache, grad);
    grad = -grad;
    return -value;
  };

  LbfgsOptions options;
  options.max_iters = config.max_iters;
  options.grad_tol = config.grad_tol;
  options.obj_rel_tol = config.obj_rel_tol;
  options.memory = config.memory;

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);

  LbfgsResult best;
  int best_restart = -1;
  for (int r = 0; r < config.restarts; ++r) {
    Eigen::VectorXd start = rho0;
    if (r > 0) {
      for (Eigen::Index i = 0; i < start.size(); ++i) {
        start[i] += jitter(rng);
      }
    }
    LbfgsResult run;
    try {
      run = minimize_lbfgs(negated, start, options);
    } catch (const InitializationError &) {
      throw;
    } catch (const WorkerLostError &) {
      throw;
    } catch (const ProtocolError &) {
      throw;
    } catch (const TimeoutError &) {
      throw;
    } catch (const Error &e) {
      throw InitializationError(std::string("objective failed at the starting point: ") +
                                e.what());
    }
    if (best_restart < 0 || run.f < best.f) {
      best = std::move(run);
      best_restart = r;
    }
  }

  TrainResult out;
  const auto hyper = from_log_params(best.x, n_groups, scale_group_of);
  build_cache(oracle, dataset, hyper, weights, cache);
  out.model.beta = prediction_weights(cache);
  out.model.hyper = hyper;
  out.model.group_confidence = confidence_from_noise(hyper.eps);
  out.model.n_instances = dataset.n_instances();
  out.model.final_lml = -best.f;

  out.report.iterations = best.iterations;
  out.report.evaluations = best.evaluations;
  out.report.final_lml = -best.f;
  out.report.converged_by = best.reason;
  out.report.line_search_warning = best.line_search_failed;
  out.report.best_restart = best_restart;
  out.report.lml_trace.reserve(best.trace.size());
  for (double f : best.trace) {
    out.report.lml_trace.push_back(-f);
  }
  return out;
}

Eigen::VectorXd predict_labels(const TrainedModel &model,
                               const Eigen::Ref<const Eigen::MatrixXd> &features) {
  if (features.rows() != model.beta.size()) {
    throw DimensionError("features have dimension " + std::to_string(features.rows()) +
                         ", model expects " + std::to_string(model.beta.size()));
  }
  const Eigen::VectorXd mean = features.transpose() * model.beta;
  return (mean.array() >= 0.0).select(Eigen::VectorXd::Ones(mean.size()),
                                      -Eigen::VectorXd::Ones(mean.size()));
}

} // namespace gpgc
