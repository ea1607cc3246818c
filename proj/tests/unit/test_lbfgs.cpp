#include <gtest/gtest.h>

#include "gpgc/errors.hpp"
#include "gpgc/lbfgs.hpp"

namespace gpgc {
namespace {

double rosenbrock(const Eigen::VectorXd &x, Eigen::VectorXd &g) {
  g.setZero(x.size());
  double f = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i], b = 1.0 - x[i];
    f += 100 * a * a + b * b;
    g[i] += -400 * a * x[i] - 2 * b;
    g[i + 1] += 200 * a;
  }
  return f;
}

TEST(Lbfgs, Rosenbrock) {
  LbfgsOptions opt;
  opt.max_iters = 2000;
  opt.obj_rel_tol = 0.0;
  opt.grad_tol = 1e-8;
  const auto r = minimize_lbfgs(rosenbrock, Eigen::VectorXd::Constant(6, -1.2), opt);
  EXPECT_EQ(r.reason, StopReason::gradient);
  EXPECT_LT((r.x - Eigen::VectorXd::Ones(6)).norm(), 1e-6);
}

TEST(Lbfgs, TraceIsNonIncreasing) {
  LbfgsOptions opt;
  const auto r = minimize_lbfgs(rosenbrock, Eigen::VectorXd::Constant(4, 2.0), opt);
  ASSERT_GE(r.trace.size(), 2u);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
  EXPECT_EQ(r.trace.size(), static_cast<std::size_t>(r.iterations) + 1);
}

TEST(Lbfgs, QuadraticConvergesQuickly) {
  Eigen::VectorXd d(5);
  d << 1, 2, 5, 10, 50;
  auto quad = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
    g = d.cwiseProduct(x);
    return 0.5 * x.dot(g);
  };
  const auto r = minimize_lbfgs(quad, Eigen::VectorXd::Ones(5), {});
  EXPECT_LT(r.x.norm(), 1e-5);
  EXPECT_LT(r.iterations, 30);
}

TEST(Lbfgs, BacktracksOutOfDomain) {
  // f = x - ln x on x > 0; an overly long first step lands at x <= 0.
  auto f = [](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
    if (x[0] <= 0) throw DomainError("x must be positive");
    g.resize(1);
    g[0] = 1.0 - 1.0 / x[0];
    return x[0] - std::log(x[0]);
  };
  Eigen::VectorXd x0(1);
  x0[0] = 0.01;
  const auto r = minimize_lbfgs(f, x0, {});
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
}

TEST(Lbfgs, NonFiniteStartThrows) {
  auto f = [](const Eigen::VectorXd &, Eigen::VectorXd &g) {
    g.setZero(1);
    return std::numeric_limits<double>::quiet_NaN();
  };
  EXPECT_THROW(minimize_lbfgs(f, Eigen::VectorXd::Zero(1), {}), InitializationError);
}

TEST(Lbfgs, NetworkErrorsPropagate) {
  int calls = 0;
  auto f = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
    if (++calls > 1) throw WorkerLostError("gone");
    g = x;
    return 0.5 * x.squaredNorm();
  };
  EXPECT_THROW(minimize_lbfgs(f, Eigen::VectorXd::Ones(2), {}), WorkerLostError);
}

TEST(Lbfgs, MaxItersReported) {
  LbfgsOptions opt;
  opt.max_iters = 3;
  opt.obj_rel_tol = 0.0;
  const auto r = minimize_lbfgs(rosenbrock, Eigen::VectorXd::Constant(4, -1.2), opt);
  EXPECT_EQ(r.reason, StopReason::max_iters);
  EXPECT_EQ(r.iterations, 3);
}

} // namespace
} // namespace gpgc
