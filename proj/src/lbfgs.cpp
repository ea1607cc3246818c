#include "gpgc/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "gpgc/errors.hpp"

namespace gpgc {

namespace {

struct Point {
  double step = 0.0;
  double f = 0.0;
  double slope = 0.0; // directional derivative
  Eigen::VectorXd x;
  Eigen::VectorXd grad;
};

class LineSearch {
public:
  LineSearch(const ObjectiveFn &objective, const LbfgsOptions &options,
             int &evaluations)
      : objective_(objective), options_(options), evaluations_(evaluations) {}

  // Returns true when a strong-Wolfe step was found; otherwise `best` holds
  // the lowest point seen (which may or may not improve on the start).
  bool search(const Point &start, const Eigen::VectorXd &direction,
              double initial_step, Point &accepted) {
    start_ = &start;
    direction_ = &direction;
    budget_ = options_.max_line_search_evals;

    // The start may carry the step length of the previous search.
    Point prev = start;
    prev.step = 0.0;
    best_ = prev;
    double step = initial_step;
    for (int i = 0; budget_ > 0; ++i) {
      Point cur = evaluate(step);
      if (!std::isfinite(cur.f)) {
        // Outside the domain: shrink towards the last good step.
        step = prev.step + 0.25 * (step - prev.step);
        continue;
      }
      if (cur.f > start.f + options_.wolfe_c1 * step * start.slope ||
          (i > 0 && cur.f >= prev.f)) {
        return zoom(prev, cur, accepted);
      }
      if (std::abs(cur.slope) <= -options_.wolfe_c2 * start.slope) {
        accepted = std::move(cur);
        return true;
      }
      if (cur.slope >= 0.0) {
        return zoom(cur, prev, accepted);
      }
      prev = std::move(cur);
      step *= 2.0;
    }
    accepted = best_;
    return false;
  }

private:
  Point evaluate(double step) {
    --budget_;
    ++evaluations_;
    Point p;
    p.step = step;
    p.x = start_->x + step * *direction_;
    p.grad.resize(p.x.size());
    try {
      p.f = objective_(p.x, p.grad);
    } catch (const SingularityError &) {
      p.f = std::numeric_limits<double>::infinity();
    } catch (const DomainError &) {
      p.f = std::numeric_limits<double>::infinity();
    } catch (const NumericError &) {
      p.f = std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(p.f) || !p.grad.allFinite()) {
      p.f = std::numeric_limits<double>::infinity();
      return p;
    }
    p.slope = p.grad.dot(*direction_);
    if (p.f < best_.f) {
      best_ = p;
    }
    return p;
  }

  static double cubic_minimizer(const Point &a, const Point &b) {
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.step - b.step);
    const double disc = d1 * d1 - a.slope * b.slope;
    if (disc < 0.0) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
    return b.step - (b.step - a.step) * (b.slope + d2 - d1) /
                        (b.slope - a.slope + 2.0 * d2);
  }

  bool zoom(Point lo, Point hi, Point &accepted) {
    const Point &start = *start_;
    while (budget_ > 0) {
      const double left = std::min(lo.step, hi.step);
      const double right = std::max(lo.step, hi.step);
      const double width = right - left;
      if (width <= 1e-16 * std::max(1.0, right)) {
        break;
      }
      double step = std::isfinite(hi.f) ? cubic_minimizer(lo, hi)
                                        : std::numeric_limits<double>::quiet_NaN();
      if (!std::isfinite(step) || step < left + 0.1 * width ||
          step > right - 0.1 * width) {
        step = 0.5 * (lo.step + hi.step);
      }
      Point cur = evaluate(step);
      if (!std::isfinite(cur.f) ||
          cur.f > start.f + options_.wolfe_c1 * step * start.slope ||
          cur.f >= lo.f) {
        hi = std::move(cur);
        continue;
      }
      if (std::abs(cur.slope) <= -options_.wolfe_c2 * start.slope) {
        accepted = std::move(cur);
        return true;
      }
      if (cur.slope * (hi.step - lo.step) >= 0.0) {
        hi = lo;
      }
      lo = std::move(cur);
    }
    accepted = best_;
    return false;
  }

  const ObjectiveFn &objective_;
  const LbfgsOptions &options_;
  int &evaluations_;
  const Point *start_ = nullptr;
  const Eigen::VectorXd *direction_ = nullptr;
  Point best_;
  int budget_ = 0;
};

} // namespace

const char *to_string(StopReason reason) {
  switch (reason) {
  case StopReason::gradient:
    return "gradient";
  case StopReason::objective:
    return "objective";
  case StopReason::max_iters:
    return "max_iters";
  }
  return "unknown";
}

LbfgsResult minimize_lbfgs(const ObjectiveFn &objective, Eigen::VectorXd x0,
                           const LbfgsOptions &options) {
  if (options.memory < 1 || options.grad_tol <= 0.0 || options.obj_rel_tol < 0.0) {
    throw DomainError("invalid L-BFGS options");
  }
  LbfgsResult result;
  Point current;
  current.x = std::move(x0);
  current.grad.resize(current.x.size());
  current.f = objective(current.x, current.grad);
  result.evaluations = 1;
  if (!std::isfinite(current.f) || !current.grad.allFinite()) {
    throw InitializationError("objective is not finite at the starting point");
  }
  result.trace.push_back(current.f);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  LineSearch line_search(objective, options, result.evaluations);
  result.reason = StopReason::max_iters;

  if (current.grad.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
    result.reason = StopReason::gradient;
  }

  while (result.reason == StopReason::max_iters &&
         result.iterations < options.max_iters) {
    // Two-loop recursion for d = -H g.
    Eigen::VectorXd d = -current.grad;
    const auto m = s_hist.size();
    std::vector<double> a(m);
    for (std::size_t i = m; i-- > 0;) {
      a[i] = rho_hist[i] * s_hist[i].dot(d);
      d -= a[i] * y_hist[i];
    }
    if (m > 0) {
      d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double b = rho_hist[i] * y_hist[i].dot(d);
      d += (a[i] - b) * s_hist[i];
    }
    current.slope = current.grad.dot(d);
    if (!(current.slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -current.grad;
      current.slope = -current.grad.squaredNorm();
    }
    const double initial_step =
        m == 0 ? std::min(1.0, 1.0 / current.grad.lpNorm<Eigen::Infinity>()) : 1.0;

    Point next;
    const bool wolfe = line_search.search(current, d, initial_step, next);
    if (!wolfe && !(next.f < current.f)) {
      result.line_search_failed = true;
      result.reason = StopReason::objective;
      break;
    }
    ++result.iterations;

    Eigen::VectorXd s = next.x - current.x;
    Eigen::VectorXd yv = next.grad - current.grad;
    const double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double decrease = current.f - next.f;
    const double scale = std::max({std::abs(current.f), std::abs(next.f), 1.0});
    current = std::move(next);
    result.trace.push_back(current.f);

    if (current.grad.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
      result.reason = StopReason::gradient;
    } else if (decrease <= options.obj_rel_tol * scale) {
      result.reason = StopReason::objective;
    } else if (!wolfe) {
      // Accepted a sufficient-decrease point without curvature; keep going
      // but do not trust the history.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }
  }

  result.x = std::move(current.x);
  result.f = current.f;
  result.grad = std::move(current.grad);
  return result;
}

} // namespace gpgc
