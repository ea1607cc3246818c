#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "gpgc/distnet.hpp"
#include "gpgc/errors.hpp"
#include "gpgc/gp.hpp"
#include "gpgc/hyperopt.hpp"
#include "gpgc/io.hpp"
#include "gpgc/oracle.hpp"
#include "gpgc/synthetic.hpp"
#ifdef GPGC_WITH_REFERENCE
#include "gpgc/verify.hpp"
#endif

namespace gpgc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path groups_sidecar(const fs::path &model) {
  return fs::path(model.string() + ".groups");
}

fs::path default_report_path(const fs::path &model) {
  return fs::path(model.string() + ".report.json");
}

namespace {

const char *stop_name(StopReason r) {
  switch (r) {
  case StopReason::gradient:
    return "gradient";
  case StopReason::objective:
    return "objective";
  case StopReason::max_iters:
    return "max_iters";
  }
  return "unknown";
}

std::string absolute_string(const fs::path &p) { return fs::absolute(p).lexically_normal().string(); }

std::vector<std::string> read_lines(const fs::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    lines.push_back(line);
  }
  return lines;
}

json read_json(const fs::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw DataFormatError(path.string() + ": " + e.what());
  }
}

// Weights implied by the training flags; empty means unit weights.
Eigen::VectorXd training_weights(const GroupedDataset &dataset, bool balance,
                                 const std::optional<fs::path> &weights_file) {
  if (balance) {
    return balance_weights(dataset);
  }
  if (weights_file) {
    Eigen::VectorXd w = read_weights(*weights_file);
    if (static_cast<std::size_t>(w.size()) != dataset.n_instances()) {
      throw DataFormatError("weights file has " + std::to_string(w.size()) +
                            " entries, expected " +
                            std::to_string(dataset.n_instances()));
    }
    return w;
  }
  return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dataset.n_instances()));
}

json weight_summary(const GroupedDataset &dataset, const Eigen::VectorXd &w,
                    const std::string &mode) {
  double wp_np = 0.0, wm_nm = 0.0;
  std::size_t n_plus = 0, n_minus = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (dataset.labels()[i] > 0) {
      wp_np += w[i];
      ++n_plus;
    } else {
      wm_nm += w[i];
      ++n_minus;
    }
  }
  json j = {{"mode", mode},          {"n_plus", n_plus},
            {"n_minus", n_minus},    {"w_plus_n_plus", wp_np},
            {"w_minus_n_minus", wm_nm}, {"sum", w.sum()}};
  if (mode == "balance") {
    j["w_plus"] = n_plus > 0 ? wp_np / static_cast<double>(n_plus) : 0.0;
    j["w_minus"] = n_minus > 0 ? wm_nm / static_cast<double>(n_minus) : 0.0;
  }
  return j;
}

std::size_t default_threads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace

int cmd_train(const TrainArgs &args, std::ostream &log) {
  if (args.balance && args.weights) {
    throw Error("--balance and --weights are mutually exclusive");
  }
  OptimizerConfig config;
  config.max_iters = args.max_iter;
  config.grad_tol = args.tol;
  config.restarts = args.restarts;
  config.seed = args.seed;
  config.validate();

  GroupedDataset dataset;
  std::vector<std::string> tokens;
  std::vector<GroupIndex> scale_group_of;
  std::unique_ptr<FeatureOracle> oracle;
  std::size_t k = 0;

  if (!args.workers.empty()) {
    auto loaded = load_labels_and_groups(args.features, args.labels, args.groups);
    dataset = std::move(loaded.dataset);
    tokens = std::move(loaded.group_tokens);
    scale_group_of = std::move(loaded.scale_group_of);
    k = loaded.header.k;
    auto cluster = std::make_unique<ClusterOracle>(split_worker_list(args.workers),
                                                   dataset.n_instances(), k);
    cluster->load_shards_from_file(args.features);
    oracle = std::move(cluster);
  } else {
    auto loaded = load_dataset(args.features, args.labels, args.groups);
    dataset = std::move(loaded.dataset);
    tokens = std::move(loaded.group_tokens);
    scale_group_of = std::move(loaded.scale_group_of);
    k = loaded.features.k();
    const std::size_t threads = default_threads();
    oracle = std::make_unique<LocalOracle>(std::move(loaded.features), threads,
                                           threads > 1 ? threads : 0);
  }
  if (args.scale_groups) {
    scale_group_of = read_scale_groups(*args.scale_groups);
    if (scale_group_of.size() != k) {
      throw DataFormatError("scale-groups file has " +
                            std::to_string(scale_group_of.size()) +
                            " lines, expected k = " + std::to_string(k));
    }
  }

  const Eigen::VectorXd weights = training_weights(dataset, args.balance, args.weights);
  const std::string mode = args.balance ? "balance" : args.weights ? "file" : "unit";

  TrainResult result = [&] {
    try {
      return train(*oracle, dataset, weights, scale_group_of, config);
    } catch (...) {
      if (auto *cluster = dynamic_cast<ClusterOracle *>(oracle.get())) {
        cluster->shutdown();
      }
      throw;
    }
  }();
  if (auto *cluster = dynamic_cast<ClusterOracle *>(oracle.get())) {
    cluster->shutdown();
  }

  save_model(args.out, result.model);
  write_lines(groups_sidecar(args.out), tokens);

  const auto &rep = result.report;
  json report;
  report["iterations"] = rep.iterations;
  report["evaluations"] = rep.evaluations;
  report["final_lml"] = rep.final_lml;
  report["converged_by"] = stop_name(rep.converged_by);
  report["line_search_warning"] = rep.line_search_warning;
  report["restarts"] = config.restarts;
  report["best_restart"] = rep.best_restart;
  report["seed"] = config.seed;
  report["n_instances"] = dataset.n_instances();
  report["k"] = k;
  json groups = json::array();
  for (std::size_t g = 0; g < tokens.size(); ++g) {
    const auto gi = static_cast<Eigen::Index>(g);
    groups.push_back({{"token", tokens[g]},
                      {"size", dataset.group_sizes()[g]},
                      {"eps", result.model.hyper.eps[gi]},
                      {"confidence", result.model.group_confidence[gi]}});
  }
  report["groups"] = std::move(groups);
  report["sigma"] = std::vector<double>(result.model.hyper.sigma.data(),
                                        result.model.hyper.sigma.data() +
                                            result.model.hyper.sigma.size());
  report["weights"] = weight_summary(dataset, weights, mode);
  report["inputs"] = {{"features", absolute_string(args.features)},
                      {"labels", absolute_string(args.labels)},
                      {"groups", absolute_string(args.groups)},
                      {"scale_groups", args.scale_groups ? absolute_string(*args.scale_groups) : ""},
                      {"weights", args.weights ? absolute_string(*args.weights) : ""}};
  report["model"] = absolute_string(args.out);
  report["workers"] = args.workers;

  const fs::path report_path = args.report ? *args.report : default_report_path(args.out);
  std::ofstream out(report_path);
  if (!out) {
    throw Error("cannot write " + report_path.string());
  }
  out << report.dump(2) << '\n';
  if (!out) {
    throw Error("cannot write " + report_path.string());
  }
  log << "trained: " << rep.iterations << " iterations, final lml "
      << format_real(rep.final_lml) << ", converged by " << stop_name(rep.converged_by)
      << '\n';
  return 0;
}

int cmd_filter(const FilterArgs &args) {
  const double gamma = args.top_percent;
  if (!(gamma > 0.0 && gamma <= 100.0)) {
    throw DomainError("--top-percent must be in (0, 100]");
  }
  const TrainedModel model = load_model(args.model);
  const auto tokens = read_lines(groups_sidecar(args.model));
  const std::size_t n_groups = model.n_groups();
  if (tokens.size() != n_groups) {
    throw DataFormatError(groups_sidecar(args.model).string() + " has " +
                          std::to_string(tokens.size()) + " tokens, model has " +
                          std::to_string(n_groups) + " groups");
  }
  std::vector<std::size_t> order(n_groups);
  std::iota(order.begin(), order.end(), 0);
  const auto &conf = model.group_confidence;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ca = conf[static_cast<Eigen::Index>(a)];
    const double cb = conf[static_cast<Eigen::Index>(b)];
    return ca != cb ? ca > cb : a < b;
  });
  const auto n_selected = static_cast<std::size_t>(
      std::ceil(gamma / 100.0 * static_cast<double>(n_groups) - 1e-9));
  std::vector<std::string> lines;
  lines.reserve(n_groups);
  for (std::size_t r = 0; r < n_groups; ++r) {
    const std::size_t g = order[r];
    lines.push_back(tokens[g] + '\t' + format_real(conf[static_cast<Eigen::Index>(g)]) +
                    '\t' + (r < n_selected ? '1' : '0'));
  }
  write_lines(args.out, lines);
  return 0;
}

int cmd_predict(const PredictArgs &args) {
  if (args.variance && !args.with_train) {
    throw Error("--variance needs the training set: pass --with-train <training report json>");
  }
  const TrainedModel model = load_model(args.model);
  const FeatureShard test = read_feature_file(args.features);
  if (test.k() != model.feature_dim()) {
    throw DimensionError("feature dimension " + std::to_string(test.k()) +
                         " does not match model k = " +
                         std::to_string(model.feature_dim()));
  }

  std::optional<GpCache> cache;
  if (args.variance) {
    const json report = read_json(*args.with_train);
    const auto &inputs = report.at("inputs");
    auto loaded = load_dataset(inputs.at("features").get<std::string>(),
                               inputs.at("labels").get<std::string>(),
                               inputs.at("groups").get<std::string>());
    if (loaded.features.k() != model.feature_dim() ||
        loaded.dataset.n_instances() != model.n_instances ||
        loaded.dataset.n_groups() != model.n_groups()) {
      throw DimensionError("training set referenced by --with-train does not match the model");
    }
    const std::string mode = report.at("weights").at("mode").get<std::string>();
    const std::string weights_path = inputs.at("weights").get<std::string>();
    const Eigen::VectorXd weights = training_weights(
        loaded.dataset, mode == "balance",
        mode == "file" ? std::optional<fs::path>(weights_path) : std::nullopt);
    LocalOracle oracle(std::move(loaded.features));
    cache = build_cache(oracle, loaded.dataset, model.hyper, weights);
  }

  const auto features = test.matrix();
  const Eigen::VectorXd labels = predict_labels(model, features);
  std::vector<std::string> lines;
  lines.reserve(static_cast<std::size_t>(features.cols()));
  for (Eigen::Index i = 0; i < features.cols(); ++i) {
    std::string line = format_real(model.beta.dot(features.col(i))) + '\t' +
                       (labels[i] > 0 ? "1" : "-1");
    if (cache) {
      line += '\t' + format_real(posterior_variance(*cache, features.col(i)));
    }
    lines.push_back(std::move(line));
  }
  write_lines(args.out, lines);
  return 0;
}

int cmd_worker(const std::string &listen) {
  worker_serve(listen);
  return 0;
}

int cmd_verify(bool perturb_gradient, std::ostream &out) {
#ifdef GPGC_WITH_REFERENCE
  VerifyOptions options;
  options.perturb_gradient = perturb_gradient;
  const auto checks = run_verification(options);
  print_verification(out, checks);
  const bool ok = std::all_of(checks.begin(), checks.end(),
                              [](const VerifyCheck &c) { return c.passed; });
  out << (ok ? "all checks passed\n" : "verification FAILED\n");
  return ok ? 0 : 1;
#else
  (void)perturb_gradient;
  out << "built without the dense reference (GPGC_WITH_REFERENCE=OFF)\n";
  return 2;
#endif
}

namespace {

void write_benchmark(const fs::path &dir, const std::string &prefix, const BenchmarkData &data,
                     bool with_truth) {
  write_feature_file(dir / (prefix + "features.bin"), data.features);
  std::vector<std::string> groups;
  groups.reserve(data.dataset.n_instances());
  for (auto g : data.dataset.group_of()) {
    groups.push_back("group" + std::to_string(g));
  }
  write_labels(dir / (prefix + "labels.txt"), data.dataset.labels());
  write_lines(dir / (prefix + "groups.txt"), groups);
  if (with_truth) {
    std::vector<std::string> truth;
    for (std::size_t g = 0; g < data.corrupted.size(); ++g) {
      truth.push_back("group" + std::to_string(g) + '\t' + (data.corrupted[g] ? '1' : '0'));
    }
    write_lines(dir / (prefix + "corrupted.txt"), truth);
  }
}

} // namespace

int cmd_synth(const SynthArgs &args) {
  BenchmarkConfig config;
  config.n_instances = args.instances;
  config.k = args.k;
  config.n_groups = args.groups;
  config.n_corrupted = args.corrupted;
  config.seed = args.seed;
  fs::create_directories(args.out_dir);
  write_benchmark(args.out_dir, "", make_benchmark(config), true);
  if (args.test_instances > 0) {
    write_benchmark(args.out_dir, "test_", make_benchmark_test_set(config, args.test_instances),
                    false);
  }
  return 0;
}

} // namespace gpgc::cli
