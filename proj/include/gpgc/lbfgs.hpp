#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace gpgc {

struct LbfgsOptions {
  int max_iters = 500;
  // Infinity norm of the gradient.
  double grad_tol = 1e-5;
  // Relative decrease of the objective between accepted iterates.
  double obj_rel_tol = 1e-9;
  int memory = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_search_evals = 40;
};

enum class StopReason { gradient, objective, max_iters };

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  int evaluations = 0;
  StopReason reason = StopReason::max_iters;
  bool line_search_failed = false;
  // f at the start point and after every accepted step (non-increasing).
  std::vector<double> trace;
};

// Returns f(x) and writes the gradient. May return a non-finite value or
// throw SingularityError, DomainError or NumericError for points outside the
// domain; the line search then backtracks. Other exceptions propagate.
using ObjectiveFn = std::function<double(const Eigen::VectorXd &x, Eigen::VectorXd &grad)>;

// Limited-memory BFGS with a strong-Wolfe line search (bracketing plus
// cubic-interpolation zoom). The caller must make sure f(x0) is finite.
LbfgsResult minimize_lbfgs(const ObjectiveFn &objective, Eigen::VectorXd x0,
                           const LbfgsOptions &options);

const char *to_string(StopReason reason);

} // namespace gpgc
