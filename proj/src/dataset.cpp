#include "gpgc/dataset.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include "gpgc/errors.hpp"

namespace gpgc {

GroupedDataset::GroupedDataset(Eigen::VectorXd labels,
                               std::vector<GroupIndex> group_of,
                               std::size_t n_groups, Eigen::VectorXd weights)
    : labels_(std::move(labels)), group_of_(std::move(group_of)),
      n_groups_(n_groups), weights_(std::move(weights)) {
  const auto n = static_cast<Eigen::Index>(group_of_.size());
  if (labels_.size() != n) {
    throw DataFormatError("label count " + std::to_string(labels_.size()) +
                          " does not match group count " + std::to_string(n));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels_[i] != 1.0 && labels_[i] != -1.0) {
      throw LabelError("label at instance " + std::to_string(i) +
                       " is not -1 or +1");
    }
  }
  group_sizes_.assign(n_groups_, 0);
  for (std::size_t i = 0; i < group_of_.size(); ++i) {
    if (group_of_[i] >= n_groups_) {
      throw DataFormatError("group index " + std::to_string(group_of_[i]) +
                            " out of range [0," + std::to_string(n_groups_) +
                            ")");
    }
    ++group_sizes_[group_of_[i]];
  }
  for (std::size_t g = 0; g < n_groups_; ++g) {
    if (group_sizes_[g] == 0) {
      throw DataFormatError("group " + std::to_string(g) + " has no instances");
    }
  }
  if (weights_.size() == 0) {
    weights_ = Eigen::VectorXd::Ones(n);
  }
  if (weights_.size() != n) {
    throw DataFormatError("weight count " + std::to_string(weights_.size()) +
                          " does not match instance count " +
                          std::to_string(n));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(weights_[i]) || weights_[i] <= 0.0) {
      throw DomainError("weight at instance " + std::to_string(i) +
                        " is not strictly positive");
    }
  }
}

GroupedDataset GroupedDataset::with_weights(Eigen::VectorXd weights) const {
  return GroupedDataset(labels_, group_of_, n_groups_, std::move(weights));
}

bool GroupedDataset::has_unit_weights() const {
  return (weights_.array() == 1.0).all();
}

void HyperParams::validate() const {
  for (Eigen::Index g = 0; g < eps.size(); ++g) {
    if (!std::isfinite(eps[g]) || eps[g] <= 0.0) {
      throw DomainError("eps[" + std::to_string(g) + "] must be positive");
    }
  }
  for (Eigen::Index s = 0; s < sigma.size(); ++s) {
    if (!std::isfinite(sigma[s]) || sigma[s] <= 0.0) {
      throw DomainError("sigma[" + std::to_string(s) + "] must be positive");
    }
  }
  for (auto s : scale_group_of) {
    if (s >= static_cast<GroupIndex>(sigma.size())) {
      throw DomainError("scale group " + std::to_string(s) + " out of range");
    }
  }
}

Eigen::VectorXd HyperParams::expand_sigma() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(scale_group_of.size()));
  for (std::size_t j = 0; j < scale_group_of.size(); ++j) {
    out[static_cast<Eigen::Index>(j)] = sigma[scale_group_of[j]];
  }
  return out;
}

bool HyperParams::operator==(const HyperParams &other) const {
  return eps.size() == other.eps.size() && sigma.size() == other.sigma.size() &&
         eps == other.eps && sigma == other.sigma &&
         scale_group_of == other.scale_group_of;
}

bool TrainedModel::operator==(const TrainedModel &other) const {
  return beta.size() == other.beta.size() && beta == other.beta &&
         hyper == other.hyper &&
         group_confidence.size() == other.group_confidence.size() &&
         group_confidence == other.group_confidence &&
         n_instances == other.n_instances && final_lml == other.final_lml;
}

Eigen::VectorXd balance_weights(const GroupedDataset &dataset) {
  const auto &y = dataset.labels();
  const double n = static_cast<double>(y.size());
  const double n_pos = static_cast<double>((y.array() > 0.0).count());
  const double n_neg = n - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) {
    throw BalanceError("class balancing needs both labels present");
  }
  const double w_pos = 0.5 * n / n_pos;
  const double w_neg = 0.5 * n / n_neg;
  return (y.array() > 0.0).select(Eigen::VectorXd::Constant(y.size(), w_pos),
                                  Eigen::VectorXd::Constant(y.size(), w_neg));
}

Eigen::VectorXd expand_noise(const HyperParams &hyper,
                             const GroupedDataset &dataset) {
  if (hyper.n_groups() != dataset.n_groups()) {
    throw DimensionError("hyperparameters have " +
                         std::to_string(hyper.n_groups()) +
                         " groups, dataset has " +
                         std::to_string(dataset.n_groups()));
  }
  const auto &group_of = dataset.group_of();
  Eigen::VectorXd out(static_cast<Eigen::Index>(group_of.size()));
  for (std::size_t i = 0; i < group_of.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = hyper.eps[group_of[i]];
  }
  return out;
}

GroupTokens index_group_tokens(const std::vector<std::string> &per_instance) {
  GroupTokens out;
  std::unordered_map<std::string, GroupIndex> seen;
  out.group_of.reserve(per_instance.size());
  for (const auto &token : per_instance) {
    auto [it, inserted] =
        seen.try_emplace(token, static_cast<GroupIndex>(out.tokens.size()));
    if (inserted) {
      out.tokens.push_back(token);
    }
    out.group_of.push_back(it->second);
  }
  return out;
}

Eigen::VectorXd confidence_from_noise(const Eigen::VectorXd &eps) {
  return -eps;
}

} // namespace gpgc

namespace gpgc {

Eigen::VectorXd tie_gradients(const Eigen::Ref<const Eigen::VectorXd> &per_instance,
                              const std::vector<GroupIndex> &group_of,
                              std::size_t n_groups) {
  if (static_cast<std::size_t>(per_instance.size()) != group_of.size()) {
    throw DimensionError("tie_gradients: value and group map lengths differ");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_groups));
  for (std::size_t i = 0; i < group_of.size(); ++i) {
    if (group_of[i] >= n_groups) {
      throw DimensionError("tie_gradients: group index out of range");
    }
    out[group_of[i]] += per_instance[static_cast<Eigen::Index>(i)];
  }
  return out;
}

} // namespace gpgc
