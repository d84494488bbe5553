#include "modelavg/sgd.hpp"

#include <sstream>
#include <stdexcept>

namespace modelavg {

StepSchedule StepSchedule::constant(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("step size alpha must be positive");
  return {Kind::kConstant, alpha, 0.0};
}

StepSchedule StepSchedule::inverse_time(double alpha, double d) {
  if (!(alpha > 0.0)) throw std::invalid_argument("step size alpha must be positive");
  if (!(d > 0.0)) throw std::invalid_argument("step offset d must be positive");
  return {Kind::kInverseTime, alpha, d};
}

std::string StepSchedule::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::kConstant) {
    os << "constant(" << alpha_ << ")";
  } else {
    os << "inverse_time(" << alpha_ << "," << d_ << ")";
  }
  return os.str();
}

ModelVector sgd_step(const ModelVector& w, const FiniteSumObjective& obj, std::size_t j, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("sgd_step: alpha must be positive");
  ModelVector out = w;
  obj.component_step(j, out, alpha);
  return out;
}

void run_worker_phase(WorkerState& state, const Objective& obj, const StepSchedule& sched,
                      std::uint64_t steps) {
  if (steps == 0) throw std::invalid_argument("run_worker_phase: need at least one step");
  require_dimension(state.model, obj.dimension(), "run_worker_phase");
  for (std::uint64_t k = 0; k < steps; ++k) {
    Rng rng = worker_rng(state.seed, state.worker, state.iteration);
    obj.sample_step(state.model, sched(state.iteration), rng);
    ++state.iteration;
  }
}

}  // namespace modelavg
