#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "modelavg/data_io.hpp"
#include "modelavg/moments.hpp"
#include "modelavg/objectives.hpp"
#include "modelavg/parallel.hpp"
#include "modelavg/variance.hpp"

namespace modelavg {

enum class ExperimentKind { kConvexCompare, kQuartic, kPca, kLemmaSweep, kProfileEnvelope, kEquivalence };

ExperimentKind parse_experiment_kind(const std::string& name);
struct ExperimentConfig;
/// The configured alpha, or the experiment's default when it is 0.
double effective_alpha(const ExperimentConfig& cfg);
std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kConvexCompare;

  // Objective source: a libsvm file, or a synthetic spec
  // (sparse:ROWS:FEATURES:NNZ:NOISE or dense:ROWS:FEATURES:NOISE:WSCALE[:COND]).
  std::string data_path;
  std::string synthetic;
  std::string model = "ls";  // ls | lr
  bool scale_features = false;

  std::size_t workers = 24;
  std::uint64_t steps = 10000;
  /// Schedule tokens (oneshot, every:K, bernoulli:Z, minibatch, and `single`
  /// for a one-worker run). Empty selects the experiment's default list.
  std::vector<std::string> schedules;
  std::vector<double> grid_alpha{1e-3, 1e-2, 1e-1, 1.0, 10.0};
  std::vector<double> grid_d{1.0, 1e2, 1e4};
  /// 0 selects the default: 3 for convex-compare, 100 for quartic and pca.
  std::size_t repeats = 0;
  std::uint64_t seed = 1;
  std::uint64_t trace_every = 64;
  double threshold = 0.1;
  /// Constant step for quartic (0.025), pca (0.01) and lemma-sweep (0.1) when 0.
  double alpha = 0.0;

  // pca
  std::size_t dim = 20;
  /// Averaging-event counts for the pca curve; empty = {1, 10, 100, 1000, steps}.
  std::vector<std::uint64_t> averaging_counts;

  // lemma-sweep grid
  std::vector<double> sweep_c{1.0};
  std::vector<double> sweep_beta2{0.0, 1.0};
  std::vector<double> sweep_sigma2{1.0};
  std::vector<double> sweep_zeta{0.0, 0.1, 1.0};
  std::size_t trials = 10000;
  std::uint64_t horizon = 500;

  // equivalence
  std::uint64_t period = 16;

  std::filesystem::path out_dir;
  /// Job-level parallelism; 0 = hardware concurrency.
  std::size_t threads = 0;

  void validate() const;
  /// Every field as key=value pairs, embedded in each output file.
  Metadata describe() const;
};

/// Parses ROWS:FEATURES:... synthetic specs into a dataset.
SparseDataset make_synthetic_dataset(const std::string& spec, std::uint64_t seed);

/// Random sparse regression: each row has `nnz` N(0,1) entries at random
/// columns, labels a'w_true + noise with w_true ~ N(0, I).
SparseDataset make_sparse_regression(std::size_t rows, std::size_t features, std::size_t nnz,
                                     double noise_sd, std::uint64_t seed);
/// Dense N(0,1) design, w_true ~ N(0, w_scale^2 I). Column k is scaled by
/// condition^(-k / (2(n-1))), so the Hessian spectrum spans about `condition`,
/// and w_true[k] by the inverse factor.
SparseDataset make_dense_regression(std::size_t rows, std::size_t features, double noise_sd,
                                    double w_scale, std::uint64_t seed, double condition = 1.0);

/// Loads or synthesizes the dataset and wraps it in the configured model.
std::unique_ptr<LinearModelObjective> make_objective(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------

struct ConvexCurve {
  std::string label;
  std::vector<std::uint64_t> iters;
  std::vector<double> normalized;   // pointwise min over grid cells of the repeat-mean
  std::vector<double> best_alpha;   // grid cell achieving the min at each tick
  std::vector<double> best_d;
  std::optional<std::uint64_t> iterations_to_threshold;
};

struct SpeedupRow {
  std::string label;
  std::optional<std::uint64_t> iterations;
  /// iterations(oneshot) / iterations(label), when both reached the threshold.
  std::optional<double> speedup_vs_oneshot;
};

struct ConvexCompareResult {
  double f0 = 0.0;
  double f_star = 0.0;
  std::vector<ConvexCurve> curves;
  std::vector<SpeedupRow> speedups;
};

/// Grid search over (alpha, d) of the alpha/(t + d) schedule; per schedule,
/// averages the normalized objective over repeats per grid cell and keeps the
/// pointwise minimum over cells. Threshold crossings are read off those
/// best-of-grid curves.
ConvexCompareResult run_convex_compare(const FiniteSumObjective& obj, const ExperimentConfig& cfg);
ConvexCompareResult run_convex_compare(const ExperimentConfig& cfg);

struct ScheduleSummary {
  std::string label;
  double mean = 0.0;
  double standard_error = 0.0;
  double mean_events = 0.0;
  std::vector<double> values;  // one per seed
};

/// Double-well study: mean final f(wbar) per schedule over seeds, w0 = 0.
std::vector<ScheduleSummary> run_quartic(const ExperimentConfig& cfg);

/// Oja PCA study: one entry per averaging-count setting (one-shot first),
/// values are the final pca_error per seed.
std::vector<ScheduleSummary> run_pca(const ExperimentConfig& cfg);

struct LemmaRow {
  MomentParams params;
  double q_closed = 0.0;
  double q_fixed_point = 0.0;
  double q_monte_carlo = 0.0;
  double mc_standard_error = 0.0;
};

std::vector<LemmaRow> run_lemma_sweep(const ExperimentConfig& cfg);

struct EnvelopeProfile {
  std::string dataset;
  std::string model;
  VarianceEnvelope envelope;
  double gradient_norm_at_optimum = 0.0;
};

/// Finds w*, then fits the variance envelope with w0 = 0.
EnvelopeProfile run_profile_envelope(const ExperimentConfig& cfg);

/// Random homogeneous quadratic (dimension 8, 16 components); returns the
/// maximum relative deviation across schedules.
double run_equivalence(const ExperimentConfig& cfg);

/// Dispatches on cfg.kind, writes files under cfg.out_dir (when set) and a
/// short summary to `log`.
void run_experiment(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace modelavg
