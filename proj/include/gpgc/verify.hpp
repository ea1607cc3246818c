#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace gpgc {

struct VerifyOptions {
  int draws = 5;
  std::uint64_t seed = 12345;
  // Negative control: scales every analytic gradient by (1 + 1e-3) so the
  // gradient checks must fail.
  bool perturb_gradient = false;
};

struct VerifyCheck {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Dense-vs-low-rank and finite-difference gradient checks on small random
// problems.
std::vector<VerifyCheck> run_verification(const VerifyOptions &options);
void print_verification(std::ostream &out, const std::vector<VerifyCheck> &checks);

// |a - b| / max(|a|, |b|, floor)
double relative_error(double a, double b, double floor = 1e-300);

} // namespace gpgc
