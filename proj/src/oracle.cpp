#include "gpgc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "gpgc/errors.hpp"

namespace gpgc {

namespace {

// Columns per block in the gram kernel; bounds scratch memory to
// O(k * kBlockCols).
constexpr std::size_t kBlockCols = 256;

void require_size(Eigen::Index actual, std::size_t expected, const char *what) {
  if (static_cast<std::size_t>(actual) != expected) {
    throw DimensionError(std::string(what) + ": expected length " +
                         std::to_string(expected) + ", got " +
                         std::to_string(actual));
  }
}

} // namespace

// ---------------------------------------------------------------------------
// FeatureShard

FeatureShard::FeatureShard(std::size_t k, std::size_t col_offset,
                           std::vector<double> data)
    : k_(k), col_offset_(col_offset), data_(std::move(data)) {
  if (k_ == 0) {
    throw DataFormatError("feature dimension must be at least 1");
  }
  if (data_.size() % k_ != 0) {
    throw DataFormatError("feature storage is not a multiple of k");
  }
  n_cols_ = data_.size() / k_;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericError("non-finite feature value at instance " +
                         std::to_string(col_offset_ + i / k_));
    }
  }
}

FeatureShard FeatureShard::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > n_cols_) {
    throw DimensionError("shard slice out of range");
  }
  std::vector<double> part(data_.begin() + static_cast<std::ptrdiff_t>(begin * k_),
                           data_.begin() + static_cast<std::ptrdiff_t>(end * k_));
  return FeatureShard(k_, col_offset_ + begin, std::move(part));
}

void FeatureShard::mat_vec(const Eigen::Ref<const Eigen::VectorXd> &v,
                           Eigen::Ref<Eigen::VectorXd> out) const {
  out.noalias() = matrix() * v;
}

void FeatureShard::mat_t_vec(const Eigen::Ref<const Eigen::VectorXd> &u,
                             Eigen::Ref<Eigen::VectorXd> out) const {
  // Column by column so that each entry is independent of how the columns
  // are split into shards (concatenation must be bit-exact).
  const auto f = matrix();
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    out[j] = f.col(j).dot(u);
  }
}

void FeatureShard::weighted_gram(const Eigen::Ref<const Eigen::VectorXd> &d,
                                 Eigen::Ref<Eigen::MatrixXd> out) const {
  const auto f = matrix();
  const auto k = static_cast<Eigen::Index>(k_);
  out.setZero();
  Eigen::MatrixXd scaled(k, static_cast<Eigen::Index>(
                                std::min(kBlockCols, std::max<std::size_t>(n_cols_, 1))));
  for (std::size_t start = 0; start < n_cols_; start += kBlockCols) {
    const auto width =
        static_cast<Eigen::Index>(std::min(kBlockCols, n_cols_ - start));
    const auto s = static_cast<Eigen::Index>(start);
    auto block = scaled.leftCols(width);
    block.noalias() =
        f.middleCols(s, width) *
        d.segment(s, width).cwiseSqrt().asDiagonal();
    out.selfadjointView<Eigen::Upper>().rankUpdate(block);
  }
  out.triangularView<Eigen::StrictlyLower>() = out.transpose();
}

void FeatureShard::diag_quadratic(const Eigen::Ref<const Eigen::MatrixXd> &a,
                                  Eigen::Ref<Eigen::VectorXd> out) const {
  const auto f = matrix();
  Eigen::VectorXd a_phi(a.rows());
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    a_phi.noalias() = a * f.col(j);
    out[j] = f.col(j).dot(a_phi);
  }
}

// ---------------------------------------------------------------------------
// ShardLayout

ShardLayout::ShardLayout(std::vector<std::size_t> boundaries)
    : boundaries_(std::move(boundaries)) {
  if (boundaries_.size() < 2 || boundaries_.front() != 0) {
    throw DimensionError("shard layout needs at least two boundaries starting at 0");
  }
  if (!std::is_sorted(boundaries_.begin(), boundaries_.end())) {
    throw DimensionError("shard boundaries must be non-decreasing");
  }
}

ShardLayout ShardLayout::even(std::size_t n, std::size_t p) {
  if (p == 0) {
    throw DimensionError("shard count must be positive");
  }
  std::vector<std::size_t> b(p + 1, 0);
  const std::size_t base = n / p;
  const std::size_t extra = n % p;
  for (std::size_t i = 0; i < p; ++i) {
    b[i + 1] = b[i] + base + (i < extra ? 1 : 0);
  }
  return ShardLayout(std::move(b));
}

// ---------------------------------------------------------------------------
// FeatureOracle

void FeatureOracle::mat_vec(const Eigen::Ref<const Eigen::VectorXd> &v,
                            Eigen::Ref<Eigen::VectorXd> out) {
  require_size(v.size(), n_instances(), "mat_vec input");
  require_size(out.size(), feature_dim(), "mat_vec output");
  do_mat_vec(v, out);
}

void FeatureOracle::mat_t_vec(const Eigen::Ref<const Eigen::VectorXd> &u,
                              Eigen::Ref<Eigen::VectorXd> out) {
  require_size(u.size(), feature_dim(), "mat_t_vec input");
  require_size(out.size(), n_instances(), "mat_t_vec output");
  do_mat_t_vec(u, out);
}

void FeatureOracle::weighted_gram(const Eigen::Ref<const Eigen::VectorXd> &d,
                                  Eigen::Ref<Eigen::MatrixXd> out) {
  require_size(d.size(), n_instances(), "weighted_gram input");
  require_size(out.rows(), feature_dim(), "weighted_gram output rows");
  require_size(out.cols(), feature_dim(), "weighted_gram output cols");
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0) || !std::isfinite(d[i])) {
      throw DomainError("weighted_gram needs strictly positive finite weights");
    }
  }
  do_weighted_gram(d, out);
}

void FeatureOracle::diag_quadratic(const Eigen::Ref<const Eigen::MatrixXd> &a,
                                   Eigen::Ref<Eigen::VectorXd> out) {
  require_size(a.rows(), feature_dim(), "diag_quadratic matrix rows");
  require_size(a.cols(), feature_dim(), "diag_quadratic matrix cols");
  require_size(out.size(), n_instances(), "diag_quadratic output");
  if (!a.allFinite()) {
    throw DomainError("diag_quadratic matrix is not finite");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (a.size() > 0 && (a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw DomainError("diag_quadratic matrix is not symmetric");
  }
  do_diag_quadratic(a, out);
}

Eigen::VectorXd FeatureOracle::mat_vec(const Eigen::Ref<const Eigen::VectorXd> &v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(feature_dim()));
  mat_vec(v, out);
  return out;
}

Eigen::VectorXd FeatureOracle::mat_t_vec(const Eigen::Ref<const Eigen::VectorXd> &u) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(n_instances()));
  mat_t_vec(u, out);
  return out;
}

Eigen::MatrixXd FeatureOracle::weighted_gram(const Eigen::Ref<const Eigen::VectorXd> &d) {
  const auto k = static_cast<Eigen::Index>(feature_dim());
  Eigen::MatrixXd out(k, k);
  weighted_gram(d, out);
  return out;
}

Eigen::VectorXd FeatureOracle::diag_quadratic(const Eigen::Ref<const Eigen::MatrixXd> &a) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(n_instances()));
  diag_quadratic(a, out);
  return out;
}

// ---------------------------------------------------------------------------
// WorkerPool

WorkerPool::WorkerPool(std::size_t n_threads) {
  threads_.reserve(n_threads);
  for (std::size_t i = 0; i < n_threads; ++i) {
    threads_.emplace_back([this] { loop(); });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto &t : threads_) {
    t.join();
  }
}

void WorkerPool::run(std::size_t n_tasks,
                     const std::function<void(std::size_t)> &task) {
  if (threads_.empty() || n_tasks <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) {
      task(i);
    }
    return;
  }
  std::lock_guard serial(run_mutex_);
  std::unique_lock lock(mutex_);
  task_ = &task;
  n_tasks_ = n_tasks;
  next_ = 0;
  pending_ = n_tasks;
  ++generation_;
  wake_.notify_all();
  done_.wait(lock, [this] { return pending_ == 0; });
  task_ = nullptr;
}

void WorkerPool::loop() {
  std::size_t seen = 0;
  std::unique_lock lock(mutex_);
  while (true) {
    wake_.wait(lock, [&] { return stop_ || (generation_ != seen && next_ < n_tasks_); });
    if (stop_) {
      return;
    }
    while (task_ != nullptr && next_ < n_tasks_) {
      const std::size_t index = next_++;
      const auto *task = task_;
      lock.unlock();
      (*task)(index);
      lock.lock();
      if (--pending_ == 0) {
        done_.notify_all();
      }
    }
    seen = generation_;
  }
}

// ---------------------------------------------------------------------------
// LocalOracle

LocalOracle::LocalOracle(FeatureShard features, std::size_t n_shards,
                         std::size_t n_threads) {
  k_ = features.k();
  if (features.col_offset() != 0) {
    throw DimensionError("LocalOracle expects the full feature matrix");
  }
  layout_ = ShardLayout::even(features.n_cols(), n_shards);
  if (n_shards == 1) {
    shards_.push_back(std::move(features));
  } else {
    shards_.reserve(n_shards);
    for (std::size_t s = 0; s < n_shards; ++s) {
      shards_.push_back(features.slice(layout_.begin(s), layout_.end(s)));
    }
  }
  init(n_threads);
}

LocalOracle::LocalOracle(std::vector<FeatureShard> shards, std::size_t n_threads)
    : shards_(std::move(shards)) {
  if (shards_.empty()) {
    throw DimensionError("LocalOracle needs at least one shard");
  }
  k_ = shards_.front().k();
  std::vector<std::size_t> b{0};
  for (const auto &s : shards_) {
    if (s.k() != k_) {
      throw DimensionError("shards disagree on feature dimension");
    }
    if (s.col_offset() != b.back()) {
      throw DimensionError("shard offsets do not tile the instance range");
    }
    b.push_back(b.back() + s.n_cols());
  }
  layout_ = ShardLayout(std::move(b));
  init(n_threads);
}

void LocalOracle::init(std::size_t n_threads) {
  const std::size_t p = shards_.size();
  if (n_threads == 0) {
    n_threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
  n_threads = std::min(n_threads, p);
  pool_ = std::make_unique<WorkerPool>(n_threads > 1 ? n_threads : 0);
  const auto k = static_cast<Eigen::Index>(k_);
  if (p > 1) {
    vec_partials_.assign(p, Eigen::VectorXd::Zero(k));
    mat_partials_.assign(p, Eigen::MatrixXd::Zero(k, k));
  }
}

void LocalOracle::do_mat_vec(const Eigen::Ref<const Eigen::VectorXd> &v,
                             Eigen::Ref<Eigen::VectorXd> out) {
  if (shards_.size() == 1) {
    shards_[0].mat_vec(v, out);
    return;
  }
  std::lock_guard lock(scratch_mutex_);
  pool_->run(shards_.size(), [&](std::size_t s) {
    const auto b = static_cast<Eigen::Index>(layout_.begin(s));
    const auto n = static_cast<Eigen::Index>(layout_.size(s));
    shards_[s].mat_vec(v.segment(b, n), vec_partials_[s]);
  });
  out = vec_partials_[0];
  for (std::size_t s = 1; s < shards_.size(); ++s) {
    out += vec_partials_[s];
  }
}

void LocalOracle::do_mat_t_vec(const Eigen::Ref<const Eigen::VectorXd> &u,
                               Eigen::Ref<Eigen::VectorXd> out) {
  pool_->run(shards_.size(), [&](std::size_t s) {
    const auto b = static_cast<Eigen::Index>(layout_.begin(s));
    const auto n = static_cast<Eigen::Index>(layout_.size(s));
    shards_[s].mat_t_vec(u, out.segment(b, n));
  });
}

void LocalOracle::do_weighted_gram(const Eigen::Ref<const Eigen::VectorXd> &d,
                                   Eigen::Ref<Eigen::MatrixXd> out) {
  if (shards_.size() == 1) {
    shards_[0].weighted_gram(d, out);
    return;
  }
  std::lock_guard lock(scratch_mutex_);
  pool_->run(shards_.size(), [&](std::size_t s) {
    const auto b = static_cast<Eigen::Index>(layout_.begin(s));
    const auto n = static_cast<Eigen::Index>(layout_.size(s));
    shards_[s].weighted_gram(d.segment(b, n), mat_partials_[s]);
  });
  out = mat_partials_[0];
  for (std::size_t s = 1; s < shards_.size(); ++s) {
    out += mat_partials_[s];
  }
}

void LocalOracle::do_diag_quadratic(const Eigen::Ref<const Eigen::MatrixXd> &a,
                                    Eigen::Ref<Eigen::VectorXd> out) {
  pool_->run(shards_.size(), [&](std::size_t s) {
    const auto b = static_cast<Eigen::Index>(layout_.begin(s));
    const auto n = static_cast<Eigen::Index>(layout_.size(s));
    shards_[s].diag_quadratic(a, out.segment(b, n));
  });
}

} // namespace gpgc
