#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "modelavg/experiments.hpp"

using modelavg::ExperimentConfig;
using modelavg::ExperimentKind;

int main(int argc, char** argv) {
  CLI::App app{"Parallel SGD model-averaging experiments"};
  app.set_config("--config", "", "Flat key=value file with option values");
  app.require_subcommand(1);
  app.fallthrough();

  ExperimentConfig cfg;
  std::string out;
  auto* workers = app.add_option("--workers,-M", cfg.workers, "Number of workers");
  auto* alpha = app.add_option("--alpha", cfg.alpha, "Constant step size (quartic, pca, lemma-sweep)");
  app.add_option("--data", cfg.data_path, "libsvm dataset");
  app.add_option("--synthetic", cfg.synthetic,
                 "Synthetic dataset: sparse:ROWS:FEATURES:NNZ:NOISE or dense:ROWS:FEATURES:NOISE:WSCALE[:COND]");
  app.add_option("--model", cfg.model, "Loss for dataset objectives")->check(CLI::IsMember({"ls", "lr"}));
  app.add_flag("--scale-features", cfg.scale_features, "Scale each feature to max |x| = 1");
  app.add_option("--steps,-T", cfg.steps, "Steps per worker");
  app.add_option("--schedule", cfg.schedules, "oneshot | every:K | bernoulli:Z | minibatch | single (repeatable)");
  app.add_option("--seed", cfg.seed, "Master seed");
  app.add_option("--repeats", cfg.repeats, "Repeats (convex-compare) or seeds (quartic, pca)")
      ->check(CLI::PositiveNumber);
  app.add_option("--grid-alpha", cfg.grid_alpha, "Step-size grid alpha")->delimiter(',');
  app.add_option("--grid-d", cfg.grid_d, "Step-size grid offset d")->delimiter(',');
  app.add_option("--trace-every", cfg.trace_every, "Trace cadence in iterations (0 = endpoints only)");
  app.add_option("--threshold", cfg.threshold, "Normalized error threshold for the speedup table");
  app.add_option("--dim", cfg.dim, "PCA dimension");
  app.add_option("--averaging-counts", cfg.averaging_counts, "PCA averaging-event counts")->delimiter(',');
  app.add_option("--sweep-c", cfg.sweep_c, "Lemma sweep curvature values")->delimiter(',');
  app.add_option("--sweep-beta2", cfg.sweep_beta2, "Lemma sweep beta^2 values")->delimiter(',');
  app.add_option("--sweep-sigma2", cfg.sweep_sigma2, "Lemma sweep sigma^2 values")->delimiter(',');
  app.add_option("--sweep-zeta", cfg.sweep_zeta, "Lemma sweep averaging probabilities")->delimiter(',');
  app.add_option("--trials", cfg.trials, "Monte Carlo trials per sweep row");
  app.add_option("--horizon", cfg.horizon, "Monte Carlo horizon");
  app.add_option("--period", cfg.period, "EveryK period for the equivalence check");
  app.add_option("--threads", cfg.threads, "Job threads (0 = hardware concurrency)");
  app.add_option("--out", out, "Output directory");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"convex-compare", "Best-of-grid schedule comparison on a convex objective"},
      {"quartic", "Double-well study: mean final objective per schedule"},
      {"pca", "Oja PCA: final error against averaging count"},
      {"lemma-sweep", "Closed form vs fixed point vs Monte Carlo noise-ball variance"},
      {"profile-envelope", "Fit beta^2 and sigma^2 and report rho"},
      {"equivalence", "Schedule equivalence on a homogeneous quadratic"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    cfg.kind = modelavg::parse_experiment_kind(app.get_subcommands().front()->get_name());
    cfg.out_dir = out;
    if (workers->count() == 0) {
      if (cfg.kind == ExperimentKind::kPca) cfg.workers = 48;
      if (cfg.kind == ExperimentKind::kLemmaSweep) cfg.workers = 4;
      if (cfg.kind == ExperimentKind::kEquivalence) cfg.workers = 4;
    }
    if (alpha->count() == 0) cfg.alpha = 0.0;
    if (cfg.kind == ExperimentKind::kEquivalence && app.get_option("--steps")->count() == 0) cfg.steps = 256;
    modelavg::run_experiment(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
