// Acceptance criteria A1-A9. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails or exceeds its time budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "modelavg/data_io.hpp"
#include "modelavg/experiments.hpp"
#include "modelavg/moments.hpp"
#include "modelavg/parallel.hpp"
#include "modelavg/variance.hpp"

using namespace modelavg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// A1 ------------------------------------------------------------------------

Outcome lemma_identity_chain() {
  Rng rng(2024);
  double worst_fp = 0.0, worst_iter = 0.0;
  int points = 0;
  while (points < 200) {
    MomentParams p;
    p.alpha = 0.02 + 0.48 * rng.uniform();
    p.c = 0.3 + 2.7 * rng.uniform();
    p.beta2 = rng.uniform() < 0.15 ? 0.0 : 3.0 * rng.uniform();
    p.sigma2 = 0.1 + 4.9 * rng.uniform();
    p.workers = 1 + rng.index(32);
    const double u = rng.uniform();
    p.zeta = u < 0.1 ? 0.0 : (u < 0.2 ? 1.0 : rng.uniform());
    const double r = 1.0 - p.alpha * p.c;
    if (p.alpha * p.c > 1.9 || r * r + p.alpha * p.alpha * p.beta2 > 0.999) continue;
    try {
      p.check_stable();
    } catch (const UnstableParameters&) {
      continue;
    }
    const double q = asymptotic_variance(p);
    worst_fp = std::max(worst_fp, std::abs(q - fixed_point(p).q) / q);
    worst_iter = std::max(worst_iter, std::abs(q - iterate_moments(p, 100000).q) / q);
    ++points;
  }
  return {worst_fp <= 1e-10 && worst_iter <= 1e-8,
          fmt("200 points, max rel dev fixed point %.2e (<= 1e-10), iterated %.2e (<= 1e-8)", worst_fp,
              worst_iter)};
}

// A2 ------------------------------------------------------------------------

Outcome lemma_vs_simulation() {
  struct Case {
    double beta2, zeta, expected;
  };
  const std::vector<Case> cases{{0.0, 0.0, 0.0131579}, {0.0, 0.1, 0.0131579}, {0.0, 1.0, 0.0131579},
                                {1.0, 0.0, 0.0138889}, {1.0, 0.1, -1.0},      {1.0, 1.0, 0.0133333}};
  bool ok = true;
  std::ostringstream os;
  std::uint64_t seed = 500;
  for (const auto& c : cases) {
    const MomentParams p{0.1, 1.0, c.beta2, 1.0, 4, c.zeta};
    const double q = asymptotic_variance(p);
    const auto mc = monte_carlo_variance(p, 500, 10000, seed++);
    const double z = std::abs(mc.estimate - q) / mc.standard_error;
    const double rel_se = mc.standard_error / q;
    const bool expected_ok = c.expected < 0.0 || std::abs(q - c.expected) <= 5e-7;
    ok = ok && z <= 3.0 && rel_se <= 0.02 && expected_ok;
    os << fmt(" [b2=%g z=%g Q=%.7f MC %.3fSE]", c.beta2, c.zeta, q, z);
  }
  return {ok, "10^4 trials, horizon 500, SE/Q <= 0.02:" + os.str()};
}

// A3 ------------------------------------------------------------------------

Outcome schedule_equivalence() {
  double worst = 0.0;
  int runs = 0;
  for (std::size_t m : {2u, 4u, 24u}) {
    for (std::uint64_t k : {1u, 4u, 16u}) {
      for (std::uint64_t t : {64u, 256u}) {
        const std::uint64_t seed = derive_seed(7, static_cast<std::uint64_t>(runs));
        const auto obj = HomogeneousQuadratic::random(8, 16, 0.5, 1.0, seed);
        worst = std::max(worst, run_equivalence_harness(obj, m, k, t, seed));
        ++runs;
      }
    }
  }
  return {worst <= 1e-9, fmt("%g configurations, max relative deviation %.2e (<= 1e-9)", runs, worst)};
}

// A4 ------------------------------------------------------------------------

Outcome quartic() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::kQuartic;
  cfg.workers = 24;
  cfg.steps = 10000;
  cfg.alpha = 0.025;
  cfg.repeats = 100;
  cfg.schedules = {"oneshot", "bernoulli:0.001", "bernoulli:0.1"};
  const auto rows = run_quartic(cfg);
  const double a = rows[0].mean, b = rows[1].mean, c = rows[2].mean;
  const bool ok = a >= 0.5 && a <= 1.3 && b >= 0.1 && b <= 0.5 && c <= 0.05 && a > b && b > c;
  return {ok, fmt("100 seeds: oneshot %.4f in [0.5,1.3], bernoulli(0.001) %.4f in [0.1,0.5], "
                  "bernoulli(0.1) %.4f <= 0.05, ordered",
                  a, b, c)};
}

// A5 ------------------------------------------------------------------------

struct SpeedupCheck {
  double rho = 0.0;
  std::optional<std::uint64_t> oneshot, every;
};

SpeedupCheck speedup_instance(const std::string& synthetic, std::uint64_t steps) {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::kConvexCompare;
  cfg.synthetic = synthetic;
  cfg.workers = 24;
  cfg.steps = steps;
  cfg.repeats = 3;
  cfg.trace_every = 8;
  cfg.grid_alpha = {0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0};
  cfg.grid_d = {100.0, 1000.0, 10000.0};
  cfg.schedules = {"oneshot", "every:128"};
  SpeedupCheck out;
  ExperimentConfig prof = cfg;
  prof.kind = ExperimentKind::kProfileEnvelope;
  out.rho = run_profile_envelope(prof).envelope.rho;
  const auto res = run_convex_compare(cfg);
  out.oneshot = res.curves[0].iterations_to_threshold;
  out.every = res.curves[1].iterations_to_threshold;
  return out;
}

Outcome convex_speedup() {
  const auto hi = speedup_instance("sparse:4000:2000:3:0.001", 10000);
  const auto lo = speedup_instance("dense:2000:10:1:0.1:100", 5000);
  const auto show = [](const std::optional<std::uint64_t>& x) {
    return x ? static_cast<double>(*x) : -1.0;
  };
  const bool hi_ok = hi.rho >= 1e3 && hi.oneshot && hi.every &&
                     static_cast<double>(*hi.every) <= 0.8 * static_cast<double>(*hi.oneshot);
  bool lo_ok = lo.rho <= 1.0 && lo.oneshot && lo.every;
  if (lo_ok) {
    const double a = static_cast<double>(*lo.oneshot), b = static_cast<double>(*lo.every);
    lo_ok = std::abs(a - b) <= 0.1 * std::max(a, b);
  }
  return {hi_ok && lo_ok,
          fmt("high rho %.3g: every:128 %g vs oneshot %g iterations (<= 0.8x); ", hi.rho, show(hi.every),
              show(hi.oneshot)) +
              fmt("low rho %.3g: every:128 %g vs oneshot %g (within 10%%)", lo.rho, show(lo.every),
                  show(lo.oneshot))};
}

// A6 ------------------------------------------------------------------------

Outcome envelope_recovery() {
  const ScalarNoisyQuadratic snq(1.0, 0.25, 1.0);
  const auto env = fit_variance_envelope(snq, ModelVector{0.0}, ModelVector{2.0});
  const double eb = std::abs(env.beta2 - 0.25) / 0.25;
  const double es = std::abs(env.sigma2 - 1.0);
  const auto hq = HomogeneousQuadratic::random(6, 12, 0.5, 1.0, 3);
  const ModelVector w_star = find_optimum(hq, 1e-12);
  const auto henv = fit_variance_envelope(hq, w_star, ModelVector(6));
  return {eb <= 1e-9 && es <= 1e-9 && std::abs(henv.beta2) <= 1e-9,
          fmt("scalar: beta2 rel err %.1e, sigma2 rel err %.1e; homogeneous quadratic beta2 %.1e", eb, es,
              henv.beta2)};
}

// A7 ------------------------------------------------------------------------

Outcome coarse_bound() {
  CoarseBoundParams p{0.1, 1.0, 1.0, 1.0, 0};
  const double at0 = coarse_variance_bound(p);
  bool monotone = true;
  double prev = at0;
  for (std::uint64_t k = 1; k <= 100000; ++k) {
    p.steps = k;
    const double b = coarse_variance_bound(p);
    monotone = monotone && b >= prev;
    prev = b;
  }
  const double gap = std::abs(prev - 0.1 / 1.9);
  const bool value_ok = std::abs(prev - 0.0526316) <= 5e-8;
  return {at0 == 0.0 && monotone && gap <= 1e-12 && value_ok,
          fmt("bound(0) = %g, non-decreasing, bound(1e5) = %.10f, |gap| %.1e (<= 1e-12)", at0, prev, gap)};
}

// A8 ------------------------------------------------------------------------

Outcome pca() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::kPca;
  cfg.workers = 48;
  cfg.steps = 10000;
  cfg.dim = 20;
  cfg.repeats = 100;
  cfg.schedules = {"oneshot", "every:100"};
  const auto rows = run_pca(cfg);
  int wins = 0;
  for (std::size_t s = 0; s < rows[0].values.size(); ++s) wins += rows[0].values[s] > rows[1].values[s] ? 1 : 0;
  return {wins >= 90, fmt("one-shot error above every:100 in %g/100 seeds (>= 90); mean %.4f vs %.4f", wins,
                          rows[0].mean, rows[1].mean)};
}

// A9 ------------------------------------------------------------------------

Outcome parser_round_trip() {
  Rng rng(9);
  SparseDataset ds;
  ds.n_features = 500;
  for (int i = 0; i < 10000; ++i) {
    SparseRow row;
    row.label = rng.uniform() < 0.5 ? 1.0 : rng.normal();
    std::uint32_t k = 0;
    while (true) {
      k += 1 + static_cast<std::uint32_t>(rng.index(60));
      if (k > 500) break;
      row.features.push_back({k, rng.normal() * std::pow(10.0, static_cast<double>(rng.index(7)) - 3.0)});
    }
    ds.rows.push_back(std::move(row));
  }
  const auto path = std::filesystem::temp_directory_path() / "modelavg_acceptance.svm";
  {
    std::ofstream out(path);
    write_libsvm(out, ds);
  }
  const SparseDataset first = load_libsvm(path);
  std::ostringstream os;
  write_libsvm(os, first);
  const SparseDataset second = parse_libsvm(os.str());
  std::filesystem::remove(path);
  const bool identity = first.rows == ds.rows && second == first;

  struct Bad {
    const char* text;
    std::size_t line;
  };
  const std::vector<Bad> bad{{"1 1:1\n1 3\n", 2},          {"1 1:1\n1 a:2\n", 2},    {"1 1:zz\n", 1},
                             {"1 0:1\n", 1},               {"1 1:1\n1 -1:1\n", 2},   {"x 1:1\n", 1},
                             {"1 1:1\n\n1 4:1 2:1\n", 3},  {"-1 2:0.5 2:0.6\n", 1},  {"1 2:\n", 1},
                             {"1 1:1\r\n1 :2\r\n", 2}};
  std::size_t rejected = 0;
  for (const auto& b : bad) {
    try {
      (void)parse_libsvm(b.text);
    } catch (const ParseError& e) {
      if (e.line() == b.line && std::string(e.what()).find("at line " + std::to_string(b.line)) != std::string::npos) {
        ++rejected;
      }
    }
  }
  return {identity && rejected == bad.size(),
          std::string("10^4 rows round trip ") + (identity ? "identical" : "DIFFERS") +
              fmt("; %g/%g malformed cases rejected with line numbers", static_cast<double>(rejected),
                  static_cast<double>(bad.size()))};
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"A1", 10.0, lemma_identity_chain}, {"A2", 120.0, lemma_vs_simulation}, {"A3", 10.0, schedule_equivalence},
      {"A4", 300.0, quartic},            {"A5", 300.0, convex_speedup},      {"A6", 1.0, envelope_recovery},
      {"A7", 1.0, coarse_bound},         {"A8", 180.0, pca},                 {"A9", 1.0, parser_round_trip},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s %s %s [%.2fs / %.0fs%s]\n", c.id, pass ? "PASS" : "FAIL", o.detail.c_str(), secs, c.budget_s,
                in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
