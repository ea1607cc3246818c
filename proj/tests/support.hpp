#pragma once

// Test-only oracles: straightforward loop implementations that share no code
// with the library's inference path.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "gpgc/distnet.hpp"
#include "gpgc/oracle.hpp"

namespace gpgc::testing {

// Column-major k x N matrix with the four queries written as plain loops.
class LoopOracle final : public FeatureOracle {
public:
  explicit LoopOracle(Eigen::MatrixXd f) : f_(std::move(f)) {}
  std::size_t n_instances() const override { return static_cast<std::size_t>(f_.cols()); }
  std::size_t feature_dim() const override { return static_cast<std::size_t>(f_.rows()); }

protected:
  void do_mat_vec(const Eigen::Ref<const Eigen::VectorXd> &v,
                  Eigen::Ref<Eigen::VectorXd> out) override {
    for (Eigen::Index r = 0; r < f_.rows(); ++r) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < f_.cols(); ++c) s += f_(r, c) * v[c];
      out[r] = s;
    }
  }
  void do_mat_t_vec(const Eigen::Ref<const Eigen::VectorXd> &u,
                    Eigen::Ref<Eigen::VectorXd> out) override {
    for (Eigen::Index c = 0; c < f_.cols(); ++c) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < f_.rows(); ++r) s += f_(r, c) * u[r];
      out[c] = s;
    }
  }
  void do_weighted_gram(const Eigen::Ref<const Eigen::VectorXd> &d,
                        Eigen::Ref<Eigen::MatrixXd> out) override {
    for (Eigen::Index a = 0; a < f_.rows(); ++a)
      for (Eigen::Index b = 0; b < f_.rows(); ++b) {
        double s = 0.0;
        for (Eigen::Index c = 0; c < f_.cols(); ++c) s += f_(a, c) * d[c] * f_(b, c);
        out(a, b) = s;
      }
  }
  void do_diag_quadratic(const Eigen::Ref<const Eigen::MatrixXd> &m,
                         Eigen::Ref<Eigen::VectorXd> out) override {
    for (Eigen::Index c = 0; c < f_.cols(); ++c) {
      double s = 0.0;
      for (Eigen::Index a = 0; a < f_.rows(); ++a)
        for (Eigen::Index b = 0; b < f_.rows(); ++b) s += f_(a, c) * m(a, b) * f_(b, c);
      out[c] = s;
    }
  }

private:
  Eigen::MatrixXd f_;
};

// Hand-rolled Cholesky: returns lower L with A = L L^T.
inline Eigen::MatrixXd cholesky(const Eigen::MatrixXd &a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = a(j, j);
    for (Eigen::Index p = 0; p < j; ++p) s -= l(j, p) * l(j, p);
    if (!(s > 0.0)) throw std::runtime_error("not positive definite");
    l(j, j) = std::sqrt(s);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double t = a(i, j);
      for (Eigen::Index p = 0; p < j; ++p) t -= l(i, p) * l(j, p);
      l(i, j) = t / l(j, j);
    }
  }
  return l;
}

inline Eigen::VectorXd cholesky_solve(const Eigen::MatrixXd &l, const Eigen::VectorXd &b) {
  const Eigen::Index n = l.rows();
  Eigen::VectorXd z(n), x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = b[i];
    for (Eigen::Index p = 0; p < i; ++p) s -= l(i, p) * z[p];
    z[i] = s / l(i, i);
  }
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double s = z[i];
    for (Eigen::Index p = i + 1; p < n; ++p) s -= l(p, i) * x[p];
    x[i] = s / l(i, i);
  }
  return x;
}

// Gaussian log density of y under N(0, K), computed densely.
inline double gaussian_log_density(const Eigen::MatrixXd &k, const Eigen::VectorXd &y) {
  const Eigen::MatrixXd l = cholesky(k);
  const Eigen::VectorXd a = cholesky_solve(l, y);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  return -0.5 * (y.dot(a) + log_det + static_cast<double>(y.size()) * std::log(2.0 * M_PI));
}

// K = diag(noise_var) + F^T diag(sigma^2) F, built entry by entry.
inline Eigen::MatrixXd dense_kernel(const Eigen::MatrixXd &f, const Eigen::VectorXd &sigma,
                                    const Eigen::VectorXd &noise_var) {
  const Eigen::Index n = f.cols();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < f.rows(); ++r) s += f(r, i) * sigma[r] * sigma[r] * f(r, j);
      k(i, j) = s + (i == j ? noise_var[i] : 0.0);
    }
  return k;
}

inline double rel_err(double a, double b, double floor = 1e-300) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string &tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("gpgc_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

// p in-process workers on ephemeral ports.
class LocalCluster {
public:
  explicit LocalCluster(std::size_t p) {
    for (std::size_t i = 0; i < p; ++i) {
      servers_.push_back(std::make_unique<WorkerServer>("127.0.0.1:0"));
      addresses_.push_back("127.0.0.1:" + std::to_string(servers_.back()->port()));
    }
    for (auto &s : servers_) threads_.emplace_back([srv = s.get()] { srv->serve(); });
  }
  // Workers the test already shut down ignore the extra SHUTDOWN (nobody
  // accepts it); the rest stop here so join() cannot hang.
  ~LocalCluster() {
    for (const auto &addr : addresses_) {
      try {
        Socket s = connect_to(addr, std::chrono::milliseconds(1000));
        s.send_frame({Opcode::shutdown, {}});
        s.recv_frame(std::chrono::milliseconds(200));
      } catch (const std::exception &) {
      }
    }
    for (auto &t : threads_) t.join();
  }
  const std::vector<std::string> &addresses() const { return addresses_; }

private:
  std::vector<std::unique_ptr<WorkerServer>> servers_;
  std::vector<std::string> addresses_;
  std::vector<std::thread> threads_;
};

} // namespace gpgc::testing
