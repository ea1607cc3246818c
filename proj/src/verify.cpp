#include "gpgc/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gpgc/gp.hpp"
#include "gpgc/oracle.hpp"
#include "gpgc/reference.hpp"
#include "gpgc/synthetic.hpp"

namespace gpgc {

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

namespace {

struct Accumulator {
  std::string name;
  double tolerance;
  double worst = 0.0;
  void add(double err) { worst = std::max(worst, std::isfinite(err) ? err : INFINITY); }
  VerifyCheck done() const { return {name, worst, tolerance, worst <= tolerance}; }
};

double objective_at(LocalOracle &oracle, const RandomProblem &p, const HyperParams &h) {
  const auto cache = build_cache(oracle, p.dataset, h, p.weights);
  return reweighted_log_marginal(cache, h, p.dataset, p.weights);
}

} // namespace

std::vector<VerifyCheck> run_verification(const VerifyOptions &options) {
  Accumulator lml{"log marginal vs dense", 1e-8};
  Accumulator alpha{"alpha vs dense", 1e-8};
  Accumulator inv_diag{"diag(K^-1) vs dense", 1e-8};
  Accumulator mean{"posterior mean vs dense", 1e-8};
  Accumulator var{"posterior variance vs dense", 1e-8};
  Accumulator trace{"gradient vs dense trace formula", 1e-8};
  Accumulator fd{"gradient vs finite differences", 1e-5};

  const double perturb = options.perturb_gradient ? 1.0 + 1e-3 : 1.0;
  for (int d = 0; d < options.draws; ++d) {
    const auto seed = options.seed + static_cast<std::uint64_t>(d);
    const std::size_t n = 20 + static_cast<std::size_t>(d) * 13;
    const std::size_t k = 2 + static_cast<std::size_t>(d) % 5;
    const std::size_t g = 1 + static_cast<std::size_t>(d) * 3 % n;
    const std::size_t s = 1 + static_cast<std::size_t>(d) % k;
    const auto p = random_problem(seed, n, k, g, s, d % 2 == 1);
    LocalOracle oracle(p.shard());
    const auto cache = build_cache(oracle, p.dataset, p.hyper, p.weights);
    const reference::DenseGp dense(p.features, p.dataset, p.hyper, p.weights);

    lml.add(relative_error(log_marginal(cache), dense.log_marginal()));
    const auto dense_inv_diag = dense.inverse_diagonal();
    for (Eigen::Index i = 0; i < p.features.cols(); ++i) {
      alpha.add(relative_error(cache.alpha[i], dense.alpha()[i], 1e-12));
      inv_diag.add(relative_error(cache.inv_diag[i], dense_inv_diag[i]));
    }
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(5, p.features.cols()); ++i) {
      const Eigen::VectorXd x = p.features.col(i) * 0.7;
      mean.add(relative_error(posterior_mean(cache, x), dense.mean(x), 1e-12));
      var.add(relative_error(posterior_variance_raw(cache, x), dense.variance(x), 1e-12));
    }

    Eigen::VectorXd grad(static_cast<Eigen::Index>(g + s));
    grad << grad_noise(cache, p.hyper, p.dataset, p.weights),
        grad_scales(cache, p.hyper);
    grad *= perturb;
    for (std::size_t c = 0; c < g + s; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      trace.add(relative_error(grad[ci], dense.gradient(c), 1e-9));
      HyperParams plus = p.hyper, minus = p.hyper;
      double &tp = c < g ? plus.eps[ci] : plus.sigma[ci - static_cast<Eigen::Index>(g)];
      double &tm = c < g ? minus.eps[ci] : minus.sigma[ci - static_cast<Eigen::Index>(g)];
      const double h = 1e-5 * std::abs(tp) + 1e-8;
      tp += h;
      tm -= h;
      const double numeric =
          (objective_at(oracle, p, plus) - objective_at(oracle, p, minus)) / (2.0 * h);
      fd.add(relative_error(grad[ci], numeric, 1e-3));
    }
  }
  return {lml.done(), alpha.done(), inv_diag.done(), mean.done(),
          var.done(),  trace.done(), fd.done()};
}

void print_verification(std::ostream &out, const std::vector<VerifyCheck> &checks) {
  char line[160];
  std::snprintf(line, sizeof line, "%-36s %12s %10s  %s\n", "check", "max error",
                "tolerance", "result");
  out << line;
  for (const auto &c : checks) {
    std::snprintf(line, sizeof line, "%-36s %12.3e %10.1e  %s\n", c.name.c_str(),
                  c.max_error, c.tolerance, c.passed ? "PASS" : "FAIL");
    out << line;
  }
}

} // namespace gpgc
