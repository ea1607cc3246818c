#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "gpgc/dataset.hpp"
#include "gpgc/shard.hpp"

namespace gpgc {

// Small random GP problem: Gaussian features, random labels and groups
// (every group non-empty), hyperparameters in a well-conditioned range.
struct RandomProblem {
  Eigen::MatrixXd features; // k x N
  GroupedDataset dataset;
  HyperParams hyper;
  Eigen::VectorXd weights;

  FeatureShard shard() const;
};

RandomProblem random_problem(std::uint64_t seed, std::size_t n, std::size_t k,
                             std::size_t n_groups, std::size_t n_scale_groups,
                             bool random_weights);

// Grouped linearly separable data. Each group is a Gaussian cloud around
// its own center; labels are sign(direction^T x) with points inside the
// margin rejected; the last feature is a constant bias. The first
// n_corrupted groups (in a seeded random order) have every label flipped.
struct BenchmarkConfig {
  std::size_t n_instances = 2000;
  std::size_t k = 10;
  std::size_t n_groups = 20;
  std::size_t n_corrupted = 4;
  double center_spread = 1.0;
  double margin = 0.5;
  std::uint64_t seed = 0;
};

struct BenchmarkData {
  FeatureShard features;
  GroupedDataset dataset;
  Eigen::VectorXd clean_labels;
  std::vector<bool> corrupted;
};

BenchmarkData make_benchmark(const BenchmarkConfig &config);
// Fresh groups from the same distribution (same separating direction), no
// corruption.
BenchmarkData make_benchmark_test_set(const BenchmarkConfig &config,
                                      std::size_t n_instances);

// Fraction of matching signs between predicted and reference labels.
double label_agreement(const Eigen::VectorXd &predicted, const Eigen::VectorXd &truth);

} // namespace gpgc
