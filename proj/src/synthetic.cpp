#include "gpgc/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "gpgc/errors.hpp"

namespace gpgc {

FeatureShard RandomProblem::shard() const {
  std::vector<double> data(features.data(), features.data() + features.size());
  return FeatureShard(static_cast<std::size_t>(features.rows()), 0, std::move(data));
}

RandomProblem random_problem(std::uint64_t seed, std::size_t n, std::size_t k,
                             std::size_t n_groups, std::size_t n_scale_groups,
                             bool random_weights) {
  if (n_groups == 0 || n_groups > n || n_scale_groups == 0 || n_scale_groups > k) {
    throw DomainError("random_problem: bad group counts");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  RandomProblem p;
  const auto ni = static_cast<Eigen::Index>(n);
  const auto ki = static_cast<Eigen::Index>(k);
  p.features.resize(ki, ni);
  for (Eigen::Index j = 0; j < ni; ++j) {
    for (Eigen::Index i = 0; i < ki; ++i) {
      p.features(i, j) = normal(rng);
    }
  }
  Eigen::VectorXd y(ni);
  std::vector<GroupIndex> group_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[static_cast<Eigen::Index>(i)] = unit(rng) < 0.5 ? -1.0 : 1.0;
    group_of[i] = i < n_groups ? static_cast<GroupIndex>(i)
                               : static_cast<GroupIndex>(rng() % n_groups);
  }
  std::shuffle(group_of.begin(), group_of.end(), rng);

  p.hyper.eps.resize(static_cast<Eigen::Index>(n_groups));
  for (auto &e : p.hyper.eps) {
    e = 0.3 + 1.7 * unit(rng);
  }
  p.hyper.sigma.resize(static_cast<Eigen::Index>(n_scale_groups));
  for (auto &s : p.hyper.sigma) {
    s = 0.3 + 1.2 * unit(rng);
  }
  p.hyper.scale_group_of.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    p.hyper.scale_group_of[j] = j < n_scale_groups
                                    ? static_cast<GroupIndex>(j)
                                    : static_cast<GroupIndex>(rng() % n_scale_groups);
  }
  p.weights = Eigen::VectorXd::Ones(ni);
  if (random_weights) {
    for (auto &w : p.weights) {
      w = 0.5 + 2.5 * unit(rng);
    }
  }
  p.dataset = GroupedDataset(std::move(y), std::move(group_of), n_groups, p.weights);
  return p;
}

namespace {

Eigen::VectorXd benchmark_direction(const BenchmarkConfig &config) {
  std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL + 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd d(static_cast<Eigen::Index>(config.k - 1));
  for (auto &v : d) {
    v = normal(rng);
  }
  return d.normalized();
}

BenchmarkData generate(const BenchmarkConfig &config, std::size_t n_instances,
                       std::uint64_t stream, bool corrupt) {
  if (config.k < 2 || config.n_groups == 0 || config.n_groups > n_instances ||
      config.n_corrupted > config.n_groups) {
    throw DomainError("benchmark: bad configuration");
  }
  const Eigen::VectorXd direction = benchmark_direction(config);
  std::mt19937_64 rng(config.seed * 0xBF58476D1CE4E5B9ULL + stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t k = config.k;
  const std::size_t g = config.n_groups;
  const auto dims = static_cast<Eigen::Index>(k - 1);

  std::vector<Eigen::VectorXd> centers(g);
  for (auto &c : centers) {
    c.resize(dims);
    for (auto &v : c) {
      v = config.center_spread * normal(rng);
    }
  }

  std::vector<double> data(n_instances * k);
  Eigen::VectorXd clean(static_cast<Eigen::Index>(n_instances));
  std::vector<GroupIndex> group_of(n_instances);
  Eigen::VectorXd x(dims);
  for (std::size_t i = 0; i < n_instances; ++i) {
    const auto grp = static_cast<GroupIndex>(i * g / n_instances);
    double score = 0.0;
    do {
      for (Eigen::Index d = 0; d < dims; ++d) {
        x[d] = centers[grp][d] + normal(rng);
      }
      score = direction.dot(x);
    } while (std::abs(score) < config.margin);
    std::copy(x.data(), x.data() + dims, data.begin() + static_cast<std::ptrdiff_t>(i * k));
    data[i * k + k - 1] = 1.0;
    clean[static_cast<Eigen::Index>(i)] = score > 0.0 ? 1.0 : -1.0;
    group_of[i] = grp;
  }

  BenchmarkData out;
  out.corrupted.assign(g, false);
  if (corrupt) {
    std::vector<std::size_t> order(g);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t c = 0; c < config.n_corrupted; ++c) {
      out.corrupted[order[c]] = true;
    }
  }
  Eigen::VectorXd observed = clean;
  for (std::size_t i = 0; i < n_instances; ++i) {
    if (out.corrupted[group_of[i]]) {
      observed[static_cast<Eigen::Index>(i)] = -observed[static_cast<Eigen::Index>(i)];
    }
  }
  out.features = FeatureShard(k, 0, std::move(data));
  out.dataset = GroupedDataset(std::move(observed), std::move(group_of), g);
  out.clean_labels = std::move(clean);
  return out;
}

} // namespace

BenchmarkData make_benchmark(const BenchmarkConfig &config) {
  return generate(config, config.n_instances, 0, true);
}

BenchmarkData make_benchmark_test_set(const BenchmarkConfig &config,
                                      std::size_t n_instances) {
  return generate(config, n_instances, 7919, false);
}

double label_agreement(const Eigen::VectorXd &predicted, const Eigen::VectorXd &truth) {
  if (predicted.size() != truth.size() || truth.size() == 0) {
    throw DimensionError("label_agreement: size mismatch");
  }
  const auto same = ((predicted.array() > 0.0) == (truth.array() > 0.0)).count();
  return static_cast<double>(same) / static_cast<double>(truth.size());
}

} // namespace gpgc
