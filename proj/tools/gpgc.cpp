#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "gpgc/errors.hpp"

int main(int argc, char **argv) {
  using namespace gpgc::cli;
  CLI::App app{"Grouped-confidence Gaussian process: train, predict, filter"};
  app.require_subcommand(1);

  TrainArgs train;
  auto *t = app.add_subcommand("train", "Learn per-group noise and a linear GP predictor");
  t->add_option("--features", train.features, "Binary feature file")->required();
  t->add_option("--labels", train.labels, "Labels, one of -1/+1 per line")->required();
  t->add_option("--groups", train.groups, "Group token per line")->required();
  t->add_option("--scale-groups", train.scale_groups, "Scale-group index per feature");
  auto *bal = t->add_flag("--balance", train.balance, "Class-balancing weights");
  t->add_option("--weights", train.weights, "Per-instance weights file")->excludes(bal);
  t->add_option("--workers", train.workers, "Comma-separated host:port list");
  t->add_option("--max-iter", train.max_iter)->check(CLI::PositiveNumber);
  t->add_option("--tol", train.tol, "Gradient tolerance")->check(CLI::PositiveNumber);
  t->add_option("--restarts", train.restarts)->check(CLI::PositiveNumber);
  t->add_option("--seed", train.seed);
  t->add_option("--out", train.out, "Model output path")->required();
  t->add_option("--report", train.report, "JSON report path (default <out>.report.json)");

  FilterArgs filter;
  auto *f = app.add_subcommand("filter", "Select the most confident groups");
  f->add_option("--model", filter.model)->required();
  f->add_option("--top-percent", filter.top_percent, "gamma in (0, 100]")->required();
  f->add_option("--out", filter.out)->required();

  PredictArgs predict;
  auto *p = app.add_subcommand("predict", "Posterior mean and sign labels");
  p->add_option("--model", predict.model)->required();
  p->add_option("--features", predict.features)->required();
  p->add_option("--out", predict.out)->required();
  p->add_flag("--variance", predict.variance, "Also write the posterior variance");
  p->add_option("--with-train", predict.with_train, "Training report JSON");

  std::string listen;
  auto *w = app.add_subcommand("worker", "Serve oracle queries for a master");
  w->add_option("--listen", listen, "host:port")->required();

  bool perturb = false;
  auto *v = app.add_subcommand("verify", "Check low-rank inference and gradients");
  v->add_flag("--perturb-gradient", perturb, "Negative control (must fail)");

  SynthArgs synth;
  auto *s = app.add_subcommand("synth", "Write a grouped toy dataset with corrupted groups");
  s->add_option("--out-dir", synth.out_dir)->required();
  s->add_option("--instances", synth.instances)->check(CLI::PositiveNumber);
  s->add_option("--k", synth.k, "Features including the bias")->check(CLI::Range(2, 1 << 20));
  s->add_option("--groups", synth.groups)->check(CLI::PositiveNumber);
  s->add_option("--corrupted", synth.corrupted, "Groups with every label flipped");
  s->add_option("--seed", synth.seed);
  s->add_option("--test-instances", synth.test_instances, "Also write a clean test set");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*t) return cmd_train(train, std::cerr);
    if (*f) return cmd_filter(filter);
    if (*p) return cmd_predict(predict);
    if (*w) return cmd_worker(listen);
    if (*v) return cmd_verify(perturb, std::cout);
    if (*s) return cmd_synth(synth);
  } catch (const std::exception &e) {
    std::cerr << "gpgc: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
