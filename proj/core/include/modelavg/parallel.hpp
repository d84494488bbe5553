#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modelavg/model_vector.hpp"
#include "modelavg/objectives.hpp"
#include "modelavg/sgd.hpp"

namespace modelavg {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// When a phase ends. Every schedule also averages once after the last step
/// if the last step did not already end a phase.
class AveragingSchedule {
 public:
  enum class Kind { kOneShot, kEveryK, kBernoulli, kMiniBatch };

  static AveragingSchedule one_shot() { return {Kind::kOneShot, 0, 0.0}; }
  static AveragingSchedule every(std::uint64_t k);
  static AveragingSchedule bernoulli(double zeta);
  static AveragingSchedule mini_batch() { return {Kind::kMiniBatch, 1, 1.0}; }

  /// oneshot | every:K | bernoulli:Z | minibatch
  static AveragingSchedule parse(const std::string& text);
  std::string to_string() const;

  Kind kind() const { return kind_; }
  std::uint64_t period() const { return k_; }
  double probability() const { return zeta_; }

  /// Whether the coordinator averages right after `completed` steps
  /// (1-based), ignoring the terminal average.
  bool averages_after(std::uint64_t completed, std::uint64_t seed) const;

  bool operator==(const AveragingSchedule&) const = default;

 private:
  AveragingSchedule(Kind kind, std::uint64_t k, double zeta) : kind_(kind), k_(k), zeta_(zeta) {}
  Kind kind_;
  std::uint64_t k_;
  double zeta_;
};

struct ParallelRunConfig {
  std::size_t workers = 1;
  std::uint64_t total_steps = 1;  // per worker
  AveragingSchedule schedule = AveragingSchedule::one_shot();
  StepSchedule step = StepSchedule::constant(0.01);
  std::uint64_t seed = 0;
  std::uint64_t trace_every = 64;
  /// 1 runs workers serially on the calling thread.
  std::size_t threads = 1;
  /// Common starting point; zero vector when unset.
  std::optional<ModelVector> initial;
  /// Trace metric; the objective's value when unset.
  std::function<double(const ModelVector&)> monitor;
  /// Record per-worker min/max of the monitor at each tick.
  bool track_workers = true;

  void validate() const;
};

struct TraceRecord {
  std::uint64_t iter = 0;
  double objective = 0.0;
  double worker_min = 0.0;
  double worker_max = 0.0;
  std::uint64_t avg_events = 0;
  double elapsed_ms = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

struct RunTrace {
  std::vector<TraceRecord> records;
  ModelVector final_model;
  std::uint64_t averaging_events = 0;
};

/// Elementwise mean in ascending worker order (incremental mean, so a list
/// of identical models averages to that model exactly).
ModelVector average_models(std::span<const ModelVector> models);

/// (1/M) sum |w_i - mean|^2
double worker_spread(std::span<const ModelVector> models);

/// Runs M synchronous workers through phases. Each worker's samples depend
/// only on (seed, worker, global iteration), so the result does not depend on
/// the schedule's phase boundaries for the draws, nor on the thread count.
/// Trace ticks record the monitor of the mean of the current worker models,
/// whether or not that mean has been broadcast.
RunTrace run_parallel(const Objective& obj, const ParallelRunConfig& cfg);

/// Runs one-shot, mini-batch and every-K averaging on the same sample draws and
/// returns the largest pairwise relative deviation between the final averages.
/// `alpha` defaults to 0.5 / lambda_max(P).
double run_equivalence_harness(const HomogeneousQuadratic& obj, std::size_t workers, std::uint64_t k,
                               std::uint64_t steps, std::uint64_t seed,
                               std::optional<double> alpha = std::nullopt);
/// Same, for a type-erased objective; throws unless it is a HomogeneousQuadratic.
double run_equivalence_harness(const Objective& obj, std::size_t workers, std::uint64_t k,
                               std::uint64_t steps, std::uint64_t seed,
                               std::optional<double> alpha = std::nullopt);

}  // namespace modelavg
