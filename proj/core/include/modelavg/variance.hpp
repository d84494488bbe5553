#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "modelavg/model_vector.hpp"
#include "modelavg/objectives.hpp"

namespace modelavg {

/// Delta(w) <= beta2 |w - w*|^2 + sigma2, plus the speedup ratio
/// rho = beta2 |w0 - w*|^2 / sigma2 for one starting point.
struct VarianceEnvelope {
  double beta2 = 0.0;
  double sigma2 = 0.0;
  double dist0_sq = 0.0;
  double rho = 0.0;
  bool rho_defined = true;   // false when sigma2 == 0 and the numerator is positive
  bool beta2_clamped = false;  // a fitted curvature came out negative
  std::size_t lines = 0;
  std::size_t points_per_line = 0;
  double radius = 0.0;
};

/// Parameters of the uniform-variance bound.
struct CoarseBoundParams {
  double alpha = 0.0;
  double sigma2 = 0.0;
  double lipschitz = 0.0;    // L
  double convexity = 0.0;    // c
  std::uint64_t steps = 0;   // k

  void validate() const;
};

/// (alpha sigma2 / (2L - alpha c^2)) [1 - (1 - 2 alpha L + alpha^2 c^2)^k]
double coarse_variance_bound(const CoarseBoundParams& p);
/// The k -> infinity limit alpha sigma2 / (2L - alpha c^2).
double coarse_variance_limit(const CoarseBoundParams& p);

/// beta2 |w - w*|^2 + sigma2
double envelope_bound(const VarianceEnvelope& env, const ModelVector& w, const ModelVector& w_star);

/// beta2 |w0 - w*|^2 / sigma2. Returns +inf when sigma2 == 0 and the numerator
/// is positive, and 0 when both vanish.
double compute_rho(const VarianceEnvelope& env, const ModelVector& w0, const ModelVector& w_star);

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double gradient_norm)
      : std::runtime_error(what), gradient_norm_(gradient_norm) {}
  double gradient_norm() const { return gradient_norm_; }

 private:
  double gradient_norm_;
};

/// A point with |grad f| <= tol. Uses the objective's closed-form optimum when
/// it has one, then polishes with backtracking gradient descent if needed.
ModelVector find_optimum(const Objective& obj, double tol, std::size_t max_iterations = 200000);

struct EnvelopeFitOptions {
  std::size_t lines = 20;
  std::size_t points_per_line = 9;
  /// Half-width of each measurement line; |w0 - w*| when <= 0 (1 if that is 0).
  double radius = 0.0;
  std::uint64_t seed = 0;
};

/// sigma2 := Delta(w*). For each random unit direction u, measures
/// Delta(w* + s u) at equispaced s in [-radius, radius] and fits
/// Delta - sigma2 = beta2 s^2 by least squares; beta2 is the mean over lines.
VarianceEnvelope fit_variance_envelope(const Objective& obj, const ModelVector& w_star,
                                       const ModelVector& w0, const EnvelopeFitOptions& opts = {});

struct EnvelopeCheck {
  std::size_t points = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;  // max Delta(w) / bound(w)
};

/// Samples `points` uniform points in the ball of the fitted radius around w*
/// and counts where Delta(w) > (1 + slack) * envelope_bound(w).
EnvelopeCheck check_envelope(const Objective& obj, const VarianceEnvelope& env, const ModelVector& w_star,
                             std::size_t points, double slack, std::uint64_t seed);

}  // namespace modelavg
