#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace gpgc::cli {

struct TrainArgs {
  std::filesystem::path features, labels, groups, out;
  std::optional<std::filesystem::path> scale_groups, weights, report;
  bool balance = false;
  std::string workers;
  int max_iter = 500;
  double tol = 1e-5;
  int restarts = 1;
  std::uint64_t seed = 0;
};

struct FilterArgs {
  std::filesystem::path model, out;
  double top_percent = 0.0;
};

struct PredictArgs {
  std::filesystem::path model, features, out;
  bool variance = false;
  std::optional<std::filesystem::path> with_train;
};

struct SynthArgs {
  std::filesystem::path out_dir;
  std::size_t instances = 2000;
  std::size_t k = 10;
  std::size_t groups = 20;
  std::size_t corrupted = 4;
  std::uint64_t seed = 0;
  std::size_t test_instances = 0;
};

// Each returns the process exit code; errors propagate as gpgc::Error.
int cmd_train(const TrainArgs &args, std::ostream &log);
int cmd_filter(const FilterArgs &args);
int cmd_predict(const PredictArgs &args);
int cmd_worker(const std::string &listen);
int cmd_verify(bool perturb_gradient, std::ostream &out);
int cmd_synth(const SynthArgs &args);

// Sidecar holding group tokens, one per line, in group-index order.
std::filesystem::path groups_sidecar(const std::filesystem::path &model);
std::filesystem::path default_report_path(const std::filesystem::path &model);

} // namespace gpgc::cli
