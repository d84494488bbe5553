#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "modelavg/model_vector.hpp"
#include "modelavg/objectives.hpp"
#include "modelavg/random.hpp"

namespace modelavg {

/// Step size as a function of the global iteration index t (t counts from 0
/// and never resets at averaging).
class StepSchedule {
 public:
  enum class Kind { kConstant, kInverseTime };

  static StepSchedule constant(double alpha);
  /// alpha / (t + d)
  static StepSchedule inverse_time(double alpha, double d);

  double operator()(std::uint64_t t) const {
    return kind_ == Kind::kConstant ? alpha_ : alpha_ / (static_cast<double>(t) + d_);
  }

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double offset() const { return d_; }
  std::string describe() const;

 private:
  StepSchedule(Kind kind, double alpha, double d) : kind_(kind), alpha_(alpha), d_(d) {}
  Kind kind_;
  double alpha_;
  double d_;
};

inline double step_size(const StepSchedule& s, std::uint64_t t) { return s(t); }

/// One worker between synchronization points. `iteration` is the global clock.
struct WorkerState {
  std::size_t worker = 0;
  ModelVector model;
  std::uint64_t iteration = 0;
  std::uint64_t seed = 0;
};

/// The generator used for worker `worker` at global iteration `t`.
inline Rng worker_rng(std::uint64_t seed, std::size_t worker, std::uint64_t t) {
  return Rng(seed, static_cast<std::uint64_t>(worker), t);
}

/// w - alpha * grad f_j(w); the input is left untouched.
ModelVector sgd_step(const ModelVector& w, const FiniteSumObjective& obj, std::size_t j, double alpha);

/// Applies `steps` sequential stochastic steps, drawing each sample from the
/// worker's stream at the current global iteration.
void run_worker_phase(WorkerState& state, const Objective& obj, const StepSchedule& sched,
                      std::uint64_t steps);

}  // namespace modelavg
