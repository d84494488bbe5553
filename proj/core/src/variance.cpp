#include "modelavg/variance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <limits>

namespace modelavg {

namespace {

std::string format_norm(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

}  // namespace

void CoarseBoundParams::validate() const {
  if (!(alpha > 0.0) || !(convexity > 0.0)) {
    throw std::invalid_argument("coarse bound: need alpha > 0 and c > 0");
  }
  if (!(convexity <= lipschitz)) throw std::invalid_argument("coarse bound: need c <= L");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("coarse bound: need sigma2 >= 0");
  if (!(2.0 * lipschitz - alpha * convexity * convexity > 0.0)) {
    throw std::invalid_argument("coarse bound: ill-posed, 2L - alpha c^2 <= 0");
  }
}

double coarse_variance_limit(const CoarseBoundParams& p) {
  p.validate();
  return p.alpha * p.sigma2 / (2.0 * p.lipschitz - p.alpha * p.convexity * p.convexity);
}

double coarse_variance_bound(const CoarseBoundParams& p) {
  const double limit = coarse_variance_limit(p);
  const double base = 1.0 - 2.0 * p.alpha * p.lipschitz + p.alpha * p.alpha * p.convexity * p.convexity;
  return limit * (1.0 - std::pow(base, static_cast<double>(p.steps)));
}

double envelope_bound(const VarianceEnvelope& env, const ModelVector& w, const ModelVector& w_star) {
  return env.beta2 * squared_distance(w, w_star) + env.sigma2;
}

double compute_rho(const VarianceEnvelope& env, const ModelVector& w0, const ModelVector& w_star) {
  const double numerator = env.beta2 * squared_distance(w0, w_star);
  if (numerator == 0.0) return 0.0;
  if (env.sigma2 == 0.0) return std::numeric_limits<double>::infinity();
  return numerator / env.sigma2;
}

ModelVector find_optimum(const Objective& obj, double tol, std::size_t max_iterations) {
  if (!obj.is_convex()) {
    throw std::invalid_argument("find_optimum: objective '" + obj.name() + "' is not convex");
  }
  ModelVector w = obj.known_optimum().value_or(ModelVector(obj.dimension()));
  ModelVector g = obj.full_gradient(w);
  double gnorm = g.norm();
  double f = obj.value(w);
  double t = 1.0;
  for (std::size_t it = 0; it < max_iterations && gnorm > tol; ++it) {
    // Armijo backtracking, then let the trial step grow again. Near the
    // optimum the decrease drops below rounding in f; a step that keeps f
    // level and shrinks the gradient is then accepted instead.
    const double gsq = gnorm * gnorm;
    for (;;) {
      ModelVector trial = w;
      trial.axpy(-t, g);
      const double ft = obj.value(trial);
      if (ft <= f - 0.5 * t * gsq) {
        w = std::move(trial);
        f = ft;
        break;
      }
      if (ft - f <= 8.0 * std::numeric_limits<double>::epsilon() * std::abs(f)) {
        const ModelVector gt = obj.full_gradient(trial);
        if (gt.norm() < gnorm) {
          w = std::move(trial);
          f = ft;
          break;
        }
      }
      t *= 0.5;
      if (t < 1e-300) {
        throw ConvergenceError("find_optimum: line search failed, |grad f| = " + format_norm(gnorm),
                               gnorm);
      }
    }
    t *= 2.0;
    g = obj.full_gradient(w);
    gnorm = g.norm();
  }
  if (gnorm > tol) {
    throw ConvergenceError("find_optimum: no convergence within " + std::to_string(max_iterations) +
                               " iterations, |grad f| = " + format_norm(gnorm),
                           gnorm);
  }
  return w;
}

VarianceEnvelope fit_variance_envelope(const Objective& obj, const ModelVector& w_star,
                                       const ModelVector& w0, const EnvelopeFitOptions& opts) {
  if (opts.lines < 1) throw std::invalid_argument("fit_variance_envelope: need at least one line");
  if (opts.points_per_line < 3) throw std::invalid_argument("fit_variance_envelope: need >= 3 points per line");
  require_dimension(w_star, obj.dimension(), "fit_variance_envelope w*");
  require_dimension(w0, obj.dimension(), "fit_variance_envelope w0");

  VarianceEnvelope env;
  env.lines = opts.lines;
  env.points_per_line = opts.points_per_line;
  env.dist0_sq = squared_distance(w0, w_star);
  env.radius = opts.radius > 0.0 ? opts.radius : std::sqrt(env.dist0_sq);
  if (env.radius == 0.0) env.radius = 1.0;
  env.sigma2 = obj.gradient_variance(w_star).value;

  const std::size_t p = opts.points_per_line;
  double curvature_sum = 0.0;
  for (std::size_t line = 0; line < opts.lines; ++line) {
    Rng rng(opts.seed, kMeasurementStream, line);
    const ModelVector u = random_unit_vector(obj.dimension(), rng);
    // Fixed-intercept least squares in s^2.
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      const double s = env.radius * (-1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(p - 1));
      ModelVector w = w_star;
      w.axpy(s, u);
      const double delta = obj.gradient_variance(w).value;
      num += s * s * (delta - env.sigma2);
      den += s * s * s * s;
    }
    curvature_sum += num / den;
  }
  env.beta2 = curvature_sum / static_cast<double>(opts.lines);
  if (env.beta2 < 0.0) {
    env.beta2 = 0.0;
    env.beta2_clamped = true;
  }
  env.rho = compute_rho(env, w0, w_star);
  env.rho_defined = std::isfinite(env.rho);
  return env;
}

EnvelopeCheck check_envelope(const Objective& obj, const VarianceEnvelope& env, const ModelVector& w_star,
                             std::size_t points, double slack, std::uint64_t seed) {
  EnvelopeCheck out;
  out.points = points;
  const double n = static_cast<double>(obj.dimension());
  for (std::size_t k = 0; k < points; ++k) {
    Rng rng(seed, kMeasurementStream, 1000000 + k);
    const ModelVector u = random_unit_vector(obj.dimension(), rng);
    const double r = env.radius * std::pow(rng.uniform(), 1.0 / n);
    ModelVector w = w_star;
    w.axpy(r, u);
    const double bound = envelope_bound(env, w, w_star);
    const double delta = obj.gradient_variance(w).value;
    const double ratio = bound > 0.0 ? delta / bound : (delta > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    out.worst_ratio = std::max(out.worst_ratio, ratio);
    if (delta > (1.0 + slack) * bound) ++out.violations;
  }
  return out;
}

}  // namespace modelavg
