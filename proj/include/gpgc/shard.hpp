#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace gpgc {

// A contiguous block of columns of the k x N feature matrix F. Storage is
// instance-major: the k features of one instance are contiguous, so the
// block maps directly onto a column-major k x n Eigen matrix.
//
// This is the only type that touches raw feature storage; every oracle
// backend is built from the four per-shard kernels below.
class FeatureShard {
public:
  FeatureShard() = default;

  // Throws NumericError on a non-finite value, DataFormatError when
  // data.size() is not a multiple of k.
  FeatureShard(std::size_t k, std::size_t col_offset, std::vector<double> data);

  std::size_t k() const { return k_; }
  std::size_t n_cols() const { return n_cols_; }
  std::size_t col_offset() const { return col_offset_; }
  std::span<const double> data() const { return data_; }

  Eigen::Map<const Eigen::MatrixXd> matrix() const {
    return {data_.data(), static_cast<Eigen::Index>(k_),
            static_cast<Eigen::Index>(n_cols_)};
  }

  // Columns [begin, end) of this shard as a new shard (global offset kept).
  FeatureShard slice(std::size_t begin, std::size_t end) const;

  // out = F_i v_i  (k)
  void mat_vec(const Eigen::Ref<const Eigen::VectorXd> &v,
               Eigen::Ref<Eigen::VectorXd> out) const;
  // out = F_i^T u  (n)
  void mat_t_vec(const Eigen::Ref<const Eigen::VectorXd> &u,
                 Eigen::Ref<Eigen::VectorXd> out) const;
  // out = F_i D_i F_i^T  (k x k). Accumulated in the upper triangle, then
  // mirrored, so the result is exactly symmetric.
  void weighted_gram(const Eigen::Ref<const Eigen::VectorXd> &d,
                     Eigen::Ref<Eigen::MatrixXd> out) const;
  // out[j] = phi_j^T A phi_j  (n)
  void diag_quadratic(const Eigen::Ref<const Eigen::MatrixXd> &a,
                      Eigen::Ref<Eigen::VectorXd> out) const;

private:
  std::size_t k_ = 0;
  std::size_t n_cols_ = 0;
  std::size_t col_offset_ = 0;
  std::vector<double> data_;
};

} // namespace gpgc
