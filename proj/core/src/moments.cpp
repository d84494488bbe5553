#include "modelavg/moments.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "modelavg/parallel.hpp"

namespace modelavg {

namespace {

double averaging_factor(const MomentParams& p) {
  const auto e = eta(p);
  const double m = static_cast<double>(p.workers);
  if (!e) return 1.0 / m;
  return (1.0 + *e / m) / (1.0 + *e);
}

double stability_denominator(const MomentParams& p) {
  return 2.0 * p.c - p.alpha * p.c * p.c - p.alpha * p.beta2 * averaging_factor(p);
}

}  // namespace

double MomentParams::contraction_rho() const {
  const double r = 1.0 - alpha * c;
  return 1.0 - r * r;
}

void MomentParams::validate() const {
  if (!(alpha * c > 0.0 && alpha * c < 2.0)) {
    throw std::invalid_argument("moment params: need 0 < alpha c < 2");
  }
  if (!(beta2 >= 0.0) || !(sigma2 >= 0.0)) {
    throw std::invalid_argument("moment params: variances must be non-negative");
  }
  if (workers < 1) throw std::invalid_argument("moment params: need M >= 1");
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw std::invalid_argument("moment params: need zeta in [0, 1]");
}

void MomentParams::check_stable() const {
  validate();
  const double d = stability_denominator(*this);
  if (!(d > 0.0)) {
    throw UnstableParameters("asymptotic variance diverges: 2c - alpha c^2 - alpha beta2 (1 + eta/M)/(1 + eta) = " +
                             std::to_string(d));
  }
  const double r = 1.0 - alpha * c;
  const double per_worker = r * r + alpha * alpha * beta2;
  if (!(per_worker < 1.0)) {
    throw UnstableParameters("per-worker second moment diverges: (1 - alpha c)^2 + alpha^2 beta2 = " +
                             std::to_string(per_worker));
  }
}

std::optional<double> eta(const MomentParams& p) {
  p.validate();
  if (p.zeta >= 1.0) return std::nullopt;
  return p.zeta / ((1.0 - p.zeta) * p.alpha * (2.0 * p.c - p.alpha * p.c * p.c));
}

double asymptotic_variance(const MomentParams& p) {
  p.check_stable();
  return p.alpha * p.sigma2 / static_cast<double>(p.workers) / stability_denominator(p);
}

MomentState recurrence_step(const MomentState& s, const MomentParams& p, bool averaged) {
  if (averaged) return {s.q, s.q};
  const double r = 1.0 - p.alpha * p.c;
  const double a = r * r;
  const double b = p.alpha * p.alpha * p.beta2;
  const double n = p.alpha * p.alpha * p.sigma2;
  const double m = static_cast<double>(p.workers);
  return {a * s.q + b * s.p / m + n / m, a * s.p + b * s.p + n};
}

MomentState expected_recurrence_step(const MomentState& s, const MomentParams& p) {
  const MomentState step = recurrence_step(s, p, false);
  const MomentState avg = recurrence_step(s, p, true);
  const double z = p.zeta;
  return {(1.0 - z) * step.q + z * avg.q, (1.0 - z) * step.p + z * avg.p};
}

MomentState minibatch_recurrence_step(const MomentState& s, const MomentParams& p) {
  const double r = 1.0 - p.alpha * p.c;
  const double m = static_cast<double>(p.workers);
  const double q = r * r * s.q + p.alpha * p.alpha * (p.beta2 * s.q + p.sigma2) / m;
  return {q, q};
}

MomentState iterate_moments(const MomentParams& p, std::uint64_t steps, MomentState start) {
  p.validate();
  MomentState s = start;
  if (p.zeta >= 1.0) {
    for (std::uint64_t t = 0; t < steps; ++t) s = minibatch_recurrence_step(s, p);
  } else {
    for (std::uint64_t t = 0; t < steps; ++t) s = expected_recurrence_step(s, p);
  }
  return s;
}

MomentState fixed_point(const MomentParams& p) {
  p.check_stable();
  const double rho = p.contraction_rho();
  const double b = p.alpha * p.alpha * p.beta2;
  const double n = p.alpha * p.alpha * p.sigma2;
  const double m = static_cast<double>(p.workers);
  const auto e = eta(p);
  if (!e) {
    const double q = n / m / (rho - b / m);
    return {q, q};
  }
  const double et = *e;
  const double a11 = rho * m, a12 = -b;
  const double a21 = -et * rho, a22 = rho - b + et * rho;
  const double det = a11 * a22 - a12 * a21;
  const double scale = std::abs(a11 * a22) + std::abs(a12 * a21);
  if (!(std::abs(det) > 1e-14 * scale)) {
    throw UnstableParameters("steady-state system is singular");
  }
  return {(n * a22 - a12 * n) / det, (a11 * n - a21 * n) / det};
}

MonteCarloEstimate monte_carlo_variance(const MomentParams& p, std::uint64_t horizon, std::size_t trials,
                                        std::uint64_t seed, NoiseDistribution noise, std::size_t threads) {
  p.check_stable();
  if (trials < 2) throw std::invalid_argument("monte_carlo_variance: need at least two trials");
  const double r = std::abs(1.0 - p.alpha * p.c);
  if (!(std::pow(r, static_cast<double>(horizon)) < 0.01)) {
    throw std::invalid_argument("monte_carlo_variance: horizon too short for the transient to decay");
  }
  const ScalarNoisyQuadratic obj(p.c, p.beta2, p.sigma2, noise);
  ParallelRunConfig base;
  base.workers = p.workers;
  base.total_steps = horizon;
  base.schedule = AveragingSchedule::bernoulli(p.zeta);
  base.step = StepSchedule::constant(p.alpha);
  base.trace_every = 0;
  base.track_workers = false;

  std::vector<double> squares(trials);
  auto run_range = [&](std::size_t lo, std::size_t hi) {
    ParallelRunConfig cfg = base;
    for (std::size_t t = lo; t < hi; ++t) {
      cfg.seed = derive_seed(seed, t);
      const double w = run_parallel(obj, cfg).final_model[0];
      squares[t] = w * w;
    }
  };
  std::size_t nthreads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  nthreads = std::min(nthreads, trials);
  if (nthreads <= 1) {
    run_range(0, trials);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < nthreads; ++k) {
      pool.emplace_back(run_range, k * trials / nthreads, (k + 1) * trials / nthreads);
    }
    for (auto& th : pool) th.join();
  }

  // E[wbar] = 0 exactly, so the variance is the mean square.
  double sum = 0.0;
  for (double x : squares) sum += x;
  const double n = static_cast<double>(trials);
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : squares) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n), trials};
}

}  // namespace modelavg
