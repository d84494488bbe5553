#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "modelavg/objectives.hpp"

namespace modelavg {

class UnstableParameters : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Scalar noisy quadratic run by M workers with constant step alpha and a
/// per-step averaging probability zeta.
struct MomentParams {
  double alpha = 0.1;
  double c = 1.0;
  double beta2 = 0.0;
  double sigma2 = 1.0;
  std::size_t workers = 1;
  double zeta = 0.0;

  /// 1 - (1 - alpha c)^2
  double contraction_rho() const;
  /// Throws unless 0 < alpha c < 2, variances >= 0, M >= 1, zeta in [0, 1].
  void validate() const;
  /// Throws UnstableParameters unless both stability conditions hold:
  /// 2c - alpha c^2 - alpha beta2 (1 + eta/M)/(1 + eta) > 0 and
  /// (1 - alpha c)^2 + alpha^2 beta2 < 1.
  void check_stable() const;
};

/// Q: second moment of the across-worker average. P: per-worker second moment.
struct MomentState {
  double q = 0.0;
  double p = 0.0;
};

/// zeta / ((1 - zeta) alpha (2c - alpha c^2)); nullopt at zeta == 1, where
/// the mini-batch limit applies.
std::optional<double> eta(const MomentParams& p);

/// Closed-form asymptotic variance of the average,
/// (alpha sigma2 / M) (2c - alpha c^2 - alpha beta2 (1 + eta/M)/(1 + eta))^-1,
/// with the factor replaced by its limit 1/M at zeta == 1.
double asymptotic_variance(const MomentParams& p);

/// One step of the second-moment recursion, with or without an averaging event.
MomentState recurrence_step(const MomentState& s, const MomentParams& p, bool averaged);

/// (1 - zeta) * no-average update + zeta * average update.
MomentState expected_recurrence_step(const MomentState& s, const MomentParams& p);

/// SGD step followed by averaging on every step (zeta == 1).
MomentState minibatch_recurrence_step(const MomentState& s, const MomentParams& p);

/// Iterates the expected recurrence (the mini-batch recurrence when zeta == 1).
MomentState iterate_moments(const MomentParams& p, std::uint64_t steps, MomentState start = {});

/// Steady state from the 2x2 linear system
///   [rho M, -a^2 b; -eta rho, rho - a^2 b + eta rho] [Q; P] = [a^2 s; a^2 s].
MomentState fixed_point(const MomentParams& p);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
};

/// Simulates the scalar noisy quadratic with Bernoulli-zeta averaging through
/// run_parallel (w0 = 0) and estimates E[wbar^2] at the horizon across trials.
MonteCarloEstimate monte_carlo_variance(const MomentParams& p, std::uint64_t horizon, std::size_t trials,
                                        std::uint64_t seed,
                                        NoiseDistribution noise = NoiseDistribution::kGaussian,
                                        std::size_t threads = 0);

}  // namespace modelavg
