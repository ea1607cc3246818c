#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gpgc {

using GroupIndex = std::uint32_t;

// Binary labels, dense group assignment and per-instance weights for N
// training instances. Immutable after construction.
class GroupedDataset {
public:
  GroupedDataset() = default;

  // Validates every invariant: labels in {-1,+1}, groups dense in [0,G) with
  // no empty group, weights strictly positive and finite. Weights default to
  // all-ones when empty.
  GroupedDataset(Eigen::VectorXd labels, std::vector<GroupIndex> group_of,
                 std::size_t n_groups, Eigen::VectorXd weights = {});

  const Eigen::VectorXd &labels() const { return labels_; }
  const std::vector<GroupIndex> &group_of() const { return group_of_; }
  const Eigen::VectorXd &weights() const { return weights_; }
  std::size_t n_instances() const { return group_of_.size(); }
  std::size_t n_groups() const { return n_groups_; }
  const std::vector<std::size_t> &group_sizes() const { return group_sizes_; }

  GroupedDataset with_weights(Eigen::VectorXd weights) const;

  bool has_unit_weights() const;

private:
  Eigen::VectorXd labels_;
  std::vector<GroupIndex> group_of_;
  std::size_t n_groups_ = 0;
  Eigen::VectorXd weights_;
  std::vector<std::size_t> group_sizes_;
};

// Per-group noise standard deviations and per-scale-group feature standard
// deviations. E holds eps^2, Sigma holds sigma^2.
struct HyperParams {
  Eigen::VectorXd eps;
  Eigen::VectorXd sigma;
  std::vector<GroupIndex> scale_group_of;

  std::size_t n_groups() const { return static_cast<std::size_t>(eps.size()); }
  std::size_t n_scale_groups() const {
    return static_cast<std::size_t>(sigma.size());
  }
  std::size_t feature_dim() const { return scale_group_of.size(); }

  // Throws DomainError on a non-positive or non-finite entry or an
  // out-of-range scale group.
  void validate() const;

  // Per-feature sigma_j (k entries).
  Eigen::VectorXd expand_sigma() const;

  bool operator==(const HyperParams &other) const;
};

// Oracle-free result of training: prediction weights plus the learned
// hyperparameters. Confidence is -eps_g; only its ranking is meaningful.
struct TrainedModel {
  Eigen::VectorXd beta;
  HyperParams hyper;
  Eigen::VectorXd group_confidence;
  std::uint64_t n_instances = 0;
  double final_lml = 0.0;

  std::size_t feature_dim() const { return static_cast<std::size_t>(beta.size()); }
  std::size_t n_groups() const { return hyper.n_groups(); }

  bool operator==(const TrainedModel &other) const;
};

// Class-balancing weights: every +1 instance gets w+, every -1 instance w-,
// with w+ N+ = w- N- = N/2. Throws BalanceError for single-class data.
Eigen::VectorXd balance_weights(const GroupedDataset &dataset);

// output[i] = eps[group_of[i]].
Eigen::VectorXd expand_noise(const HyperParams &hyper,
                             const GroupedDataset &dataset);

// Maps arbitrary string tokens to dense indices in first-appearance order.
struct GroupTokens {
  std::vector<std::string> tokens;
  std::vector<GroupIndex> group_of;
};
GroupTokens index_group_tokens(const std::vector<std::string> &per_instance);

Eigen::VectorXd confidence_from_noise(const Eigen::VectorXd &eps);

} // namespace gpgc

namespace gpgc {

// Scatter-add of per-instance values onto their groups:
// out[g] = sum over i with group_of[i] == g of per_instance[i].
// This is the adjoint of the gather in expand_noise.
Eigen::VectorXd tie_gradients(const Eigen::Ref<const Eigen::VectorXd> &per_instance,
                              const std::vector<GroupIndex> &group_of,
                              std::size_t n_groups);

} // namespace gpgc
