#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "gpgc/shard.hpp"

namespace gpgc {

// Partition of [0, N) into p contiguous column ranges.
class ShardLayout {
public:
  ShardLayout() = default;
  // boundaries: p+1 non-decreasing offsets, first 0, last N.
  explicit ShardLayout(std::vector<std::size_t> boundaries);

  // p roughly equal parts; the N mod p remainder goes to the lowest shards.
  static ShardLayout even(std::size_t n, std::size_t p);

  std::size_t n_shards() const { return boundaries_.size() - 1; }
  std::size_t n_instances() const { return boundaries_.back(); }
  std::size_t begin(std::size_t shard) const { return boundaries_[shard]; }
  std::size_t end(std::size_t shard) const { return boundaries_[shard + 1]; }
  std::size_t size(std::size_t shard) const { return end(shard) - begin(shard); }
  const std::vector<std::size_t> &boundaries() const { return boundaries_; }

private:
  std::vector<std::size_t> boundaries_{0};
};

// The four feature-matrix queries that exact low-rank GP inference needs.
// Callers supply output buffers; inputs are validated here, backends
// implement the do_* hooks.
class FeatureOracle {
public:
  virtual ~FeatureOracle() = default;

  virtual std::size_t n_instances() const = 0;
  virtual std::size_t feature_dim() const = 0;

  // (i) out = F v
  void mat_vec(const Eigen::Ref<const Eigen::VectorXd> &v,
               Eigen::Ref<Eigen::VectorXd> out);
  // (ii) out = F^T u
  void mat_t_vec(const Eigen::Ref<const Eigen::VectorXd> &u,
                 Eigen::Ref<Eigen::VectorXd> out);
  // (iii) out = F diag(d) F^T, d > 0
  void weighted_gram(const Eigen::Ref<const Eigen::VectorXd> &d,
                     Eigen::Ref<Eigen::MatrixXd> out);
  // (iv) out = diag(F^T A F), A symmetric
  void diag_quadratic(const Eigen::Ref<const Eigen::MatrixXd> &a,
                      Eigen::Ref<Eigen::VectorXd> out);

  Eigen::VectorXd mat_vec(const Eigen::Ref<const Eigen::VectorXd> &v);
  Eigen::VectorXd mat_t_vec(const Eigen::Ref<const Eigen::VectorXd> &u);
  Eigen::MatrixXd weighted_gram(const Eigen::Ref<const Eigen::VectorXd> &d);
  Eigen::VectorXd diag_quadratic(const Eigen::Ref<const Eigen::MatrixXd> &a);

protected:
  virtual void do_mat_vec(const Eigen::Ref<const Eigen::VectorXd> &v,
                          Eigen::Ref<Eigen::VectorXd> out) = 0;
  virtual void do_mat_t_vec(const Eigen::Ref<const Eigen::VectorXd> &u,
                            Eigen::Ref<Eigen::VectorXd> out) = 0;
  virtual void do_weighted_gram(const Eigen::Ref<const Eigen::VectorXd> &d,
                                Eigen::Ref<Eigen::MatrixXd> out) = 0;
  virtual void do_diag_quadratic(const Eigen::Ref<const Eigen::MatrixXd> &a,
                                 Eigen::Ref<Eigen::VectorXd> out) = 0;
};

// Fixed set of threads executing index-range tasks. run() blocks until all
// tasks are done; tasks are claimed dynamically but each index is executed
// exactly once.
class WorkerPool {
public:
  explicit WorkerPool(std::size_t n_threads);
  ~WorkerPool();
  WorkerPool(const WorkerPool &) = delete;
  WorkerPool &operator=(const WorkerPool &) = delete;

  void run(std::size_t n_tasks, const std::function<void(std::size_t)> &task);
  std::size_t n_threads() const { return threads_.size(); }

private:
  void loop();

  std::vector<std::thread> threads_;
  std::mutex run_mutex_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)> *task_ = nullptr;
  std::size_t n_tasks_ = 0;
  std::size_t next_ = 0;
  std::size_t pending_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
};

// In-memory oracle over p shards. Per-shard partials run on a worker pool;
// sums are reduced in shard-index order so results are bit-reproducible.
class LocalOracle final : public FeatureOracle {
public:
  // Takes ownership of the full matrix and splits it into n_shards even parts.
  explicit LocalOracle(FeatureShard features, std::size_t n_shards = 1,
                       std::size_t n_threads = 0);
  // Pre-split shards; their col_offsets must tile [0, N) in order.
  explicit LocalOracle(std::vector<FeatureShard> shards,
                       std::size_t n_threads = 0);

  std::size_t n_instances() const override { return layout_.n_instances(); }
  std::size_t feature_dim() const override { return k_; }
  const ShardLayout &layout() const { return layout_; }
  const std::vector<FeatureShard> &shards() const { return shards_; }

protected:
  void do_mat_vec(const Eigen::Ref<const Eigen::VectorXd> &v,
                  Eigen::Ref<Eigen::VectorXd> out) override;
  void do_mat_t_vec(const Eigen::Ref<const Eigen::VectorXd> &u,
                    Eigen::Ref<Eigen::VectorXd> out) override;
  void do_weighted_gram(const Eigen::Ref<const Eigen::VectorXd> &d,
                        Eigen::Ref<Eigen::MatrixXd> out) override;
  void do_diag_quadratic(const Eigen::Ref<const Eigen::MatrixXd> &a,
                         Eigen::Ref<Eigen::VectorXd> out) override;

private:
  void init(std::size_t n_threads);

  std::size_t k_ = 0;
  std::vector<FeatureShard> shards_;
  ShardLayout layout_;
  std::unique_ptr<WorkerPool> pool_;
  std::mutex scratch_mutex_;
  std::vector<Eigen::VectorXd> vec_partials_;
  std::vector<Eigen::MatrixXd> mat_partials_;
};

} // namespace gpgc
