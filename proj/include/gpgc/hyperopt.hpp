#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "gpgc/dataset.hpp"
#include "gpgc/gp.hpp"
#include "gpgc/lbfgs.hpp"
#include "gpgc/oracle.hpp"

namespace gpgc {

struct OptimizerConfig {
  int max_iters = 500;
  double grad_tol = 1e-5;
  double obj_rel_tol = 1e-9;
  int memory = 10;
  double init_eps = 1.0;
  // <= 0 means 1/sqrt(k).
  double init_sigma = 0.0;
  int restarts = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingReport {
  int iterations = 0;
  int evaluations = 0;
  double final_lml = 0.0;
  StopReason converged_by = StopReason::max_iters;
  bool line_search_warning = false;
  int best_restart = 0;
  // Objective after every accepted step of the winning restart.
  std::vector<double> lml_trace;
};

struct TrainResult {
  TrainedModel model;
  TrainingReport report;
};

// Log-space parametrization rho = (ln eps_1..ln eps_G, ln sigma_1..ln sigma_S).
Eigen::VectorXd to_log_params(const HyperParams &hyper);
HyperParams from_log_params(const Eigen::VectorXd &rho,
                            std::size_t n_groups,
                            const std::vector<GroupIndex> &scale_group_of);

// The training objective at one theta: builds the cache, returns the
// reweighted log marginal likelihood and writes its gradient with respect to
// rho (dL/drho = theta * dL/dtheta).
double evaluate_objective(FeatureOracle &oracle, const GroupedDataset &dataset,
                          const Eigen::VectorXd &weights, const HyperParams &hyper,
                          GpCache &cache, Eigen::VectorXd &grad_rho);

// Type-II maximum likelihood over the tied noise and scale hyperparameters.
// Throws InitializationError when the objective is not finite at the start.
TrainResult train(FeatureOracle &oracle, const GroupedDataset &dataset,
                  const Eigen::VectorXd &weights,
                  const std::vector<GroupIndex> &scale_group_of,
                  const OptimizerConfig &config);

// sign(beta^T phi) for each column of `features` (k x n); zero maps to +1.
Eigen::VectorXd predict_labels(const TrainedModel &model,
                               const Eigen::Ref<const Eigen::MatrixXd> &features);

// Number of scale groups implied by a per-feature map; throws DomainError if
// the indices are not dense.
std::size_t count_scale_groups(const std::vector<GroupIndex> &scale_group_of);

} // namespace gpgc
