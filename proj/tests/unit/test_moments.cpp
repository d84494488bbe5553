#include <doctest.h>

#include <cmath>
#include <optional>

#include "modelavg/moments.hpp"

using namespace modelavg;

namespace {

MomentParams params(double beta2, double zeta, std::size_t m = 4, double alpha = 0.1, double c = 1.0,
                    double sigma2 = 1.0) {
  return {alpha, c, beta2, sigma2, m, zeta};
}

/// Independent evaluation of the closed form, written out from the formula.
double closed_form_oracle(const MomentParams& p) {
  const double a = p.alpha, c = p.c, m = static_cast<double>(p.workers);
  double factor = 1.0 / m;
  if (p.zeta < 1.0) {
    const double eta = p.zeta / ((1.0 - p.zeta) * a * (2.0 * c - a * c * c));
    factor = (1.0 + eta / m) / (1.0 + eta);
  }
  return a * p.sigma2 / m / (2.0 * c - a * c * c - a * p.beta2 * factor);
}

}  // namespace

TEST_CASE("eta examples") {
  CHECK(*eta(params(1.0, 0.0)) == 0.0);
  CHECK(*eta(params(1.0, 0.5)) == doctest::Approx(0.5 / (0.5 * 0.1 * 1.9)).epsilon(1e-14));
  CHECK(*eta(params(1.0, 0.5)) == doctest::Approx(5.263158).epsilon(1e-6));
  CHECK(*eta(params(1.0, 0.9999999)) > 1e6);
  CHECK_FALSE(eta(params(1.0, 1.0)).has_value());
}

TEST_CASE("closed form examples") {
  for (double z : {0.0, 0.1, 0.5, 1.0}) {
    CHECK(asymptotic_variance(params(0.0, z)) == doctest::Approx(0.1 / (4 * 1.9)).epsilon(1e-14));
  }
  CHECK(asymptotic_variance(params(0.0, 0.3)) == doctest::Approx(0.0131579).epsilon(1e-5));
  CHECK(asymptotic_variance(params(1.0, 0.0)) == doctest::Approx(0.025 / 1.8).epsilon(1e-14));
  CHECK(asymptotic_variance(params(1.0, 0.0)) == doctest::Approx(0.0138889).epsilon(1e-5));
  CHECK(asymptotic_variance(params(1.0, 1.0)) == doctest::Approx(0.025 / 1.875).epsilon(1e-14));
  CHECK(asymptotic_variance(params(1.0, 1.0)) == doctest::Approx(0.0133333).epsilon(1e-5));
}

TEST_CASE("unstable and invalid parameters are rejected") {
  CHECK_THROWS_AS(asymptotic_variance(params(30.0, 0.0)), UnstableParameters);
  CHECK_THROWS_AS(fixed_point(params(30.0, 0.0)), UnstableParameters);
  CHECK_THROWS_AS(asymptotic_variance(params(0.0, 0.0, 4, 2.5)), std::invalid_argument);
  CHECK_THROWS_AS(asymptotic_variance(params(0.0, 1.5)), std::invalid_argument);
  CHECK_THROWS_AS(asymptotic_variance(params(-1.0, 0.5)), std::invalid_argument);
  CHECK_THROWS_AS(asymptotic_variance(params(0.0, 0.5, 0)), std::invalid_argument);
}

TEST_CASE("recurrence examples") {
  const auto p = params(0.5, 0.2);
  const MomentState avg = recurrence_step({0.3, 0.9}, p, true);
  CHECK(avg.q == 0.3);
  CHECK(avg.p == 0.3);

  const auto single = params(0.7, 0.0, 1);
  MomentState s{0.2, 0.2};
  for (int i = 0; i < 20; ++i) {
    s = recurrence_step(s, single, false);
    CHECK(s.q == doctest::Approx(s.p).epsilon(1e-15));
  }

  const MomentState first = recurrence_step({0.0, 0.0}, params(0.0, 0.0), false);
  CHECK(first.q == doctest::Approx(0.0025).epsilon(1e-14));
  CHECK(first.p == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("expected recurrence mixes the two branches") {
  const MomentState s{0.4, 1.1};
  const auto p0 = params(0.8, 0.0);
  const auto e0 = expected_recurrence_step(s, p0);
  const auto n0 = recurrence_step(s, p0, false);
  CHECK(e0.q == n0.q);
  CHECK(e0.p == n0.p);
  const auto p1 = params(0.8, 1.0);
  const auto e1 = expected_recurrence_step(s, p1);
  CHECK(e1.q == s.q);
  CHECK(e1.p == s.q);
  const auto ph = params(0.8, 0.5);
  const auto eh = expected_recurrence_step(s, ph);
  const auto nh = recurrence_step(s, ph, false);
  CHECK(eh.q == doctest::Approx(0.5 * (nh.q + s.q)));
  CHECK(eh.p == doctest::Approx(0.5 * (nh.p + s.q)));
}

TEST_CASE("identity chain over a parameter grid") {
  int checked = 0;
  for (double alpha : {0.05, 0.2, 0.6}) {
    for (double c : {0.5, 1.0, 2.0}) {
      for (double beta2 : {0.0, 0.5, 2.0}) {
        for (std::size_t m : {1u, 3u, 16u}) {
          for (double zeta : {0.0, 0.05, 0.5, 0.95, 1.0}) {
            const auto p = params(beta2, zeta, m, alpha, c, 1.3);
            try {
              p.check_stable();
            } catch (const UnstableParameters&) {
              continue;
            }
            const double q = asymptotic_variance(p);
            CHECK(q == doctest::Approx(closed_form_oracle(p)).epsilon(1e-13));
            CHECK(std::abs(fixed_point(p).q - q) <= 1e-10 * q);
            ++checked;
          }
        }
      }
    }
  }
  CHECK(checked > 150);
}

TEST_CASE("iterated recurrence converges to the fixed point") {
  for (double zeta : {0.0, 0.3, 1.0}) {
    const auto p = params(1.0, zeta);
    const MomentState s = iterate_moments(p, 100000);
    const double q = asymptotic_variance(p);
    CHECK(std::abs(s.q - q) <= 1e-8 * q);
    CHECK(std::abs(s.p - fixed_point(p).p) <= 1e-8 * fixed_point(p).p);
  }
}

TEST_CASE("beta2 = 0 decouples the recurrences") {
  const auto p = params(0.0, 0.3, 5, 0.2, 1.5, 2.0);
  const double p_inf = p.alpha * p.sigma2 / (2.0 * p.c - p.alpha * p.c * p.c);
  const MomentState fp = fixed_point(p);
  CHECK(fp.q == doctest::Approx(p_inf / 5.0).epsilon(1e-12));
  // Without averaging the per-worker variance is the single-worker noise ball.
  CHECK(fixed_point(params(0.0, 0.0, 5, 0.2, 1.5, 2.0)).p == doctest::Approx(p_inf).epsilon(1e-12));
}

TEST_CASE("more averaging never enlarges the noise ball") {
  for (double beta2 : {0.5, 1.0, 3.0}) {
    double prev = asymptotic_variance(params(beta2, 0.0));
    for (int i = 1; i <= 100; ++i) {
      const double q = asymptotic_variance(params(beta2, i / 100.0));
      CHECK(q <= prev * (1.0 + 1e-14));
      prev = q;
    }
  }
}

TEST_CASE("beta2 = 0 gives exact 1/M scaling and zeta independence") {
  const double q1 = asymptotic_variance(params(0.0, 0.0, 1));
  for (std::size_t m : {2u, 3u, 24u, 100u}) {
    for (double z : {0.0, 0.4, 1.0}) {
      CHECK(asymptotic_variance(params(0.0, z, m)) * static_cast<double>(m) == doctest::Approx(q1).epsilon(1e-14));
    }
  }
}

TEST_CASE("Q stays below P along the iterated recurrence") {
  for (double zeta : {0.0, 0.2, 0.9}) {
    const auto p = params(1.5, zeta, 6);
    MomentState s{0.5, 0.5};
    for (int t = 0; t < 5000; ++t) {
      s = expected_recurrence_step(s, p);
      CHECK(s.q <= s.p * (1.0 + 1e-15));
    }
  }
}

TEST_CASE("monte carlo agrees with the closed form") {
  for (auto noise : {NoiseDistribution::kGaussian, NoiseDistribution::kRademacher}) {
    for (double zeta : {0.0, 1.0}) {
      const auto p = params(1.0, zeta);
      const auto mc = monte_carlo_variance(p, 200, 4000, 17, noise, 1);
      const double q = asymptotic_variance(p);
      INFO("zeta ", zeta, " estimate ", mc.estimate, " se ", mc.standard_error);
      CHECK(mc.trials == 4000);
      CHECK(std::abs(mc.estimate - q) <= 3.0 * mc.standard_error);
    }
  }
}

TEST_CASE("monte carlo is reproducible and thread independent") {
  const auto p = params(1.0, 0.1);
  const auto a = monte_carlo_variance(p, 100, 300, 5, NoiseDistribution::kGaussian, 1);
  const auto b = monte_carlo_variance(p, 100, 300, 5, NoiseDistribution::kGaussian, 3);
  CHECK(a.estimate == b.estimate);
  CHECK(a.standard_error == b.standard_error);
  CHECK_THROWS(monte_carlo_variance(p, 10, 300, 5));
  CHECK_THROWS(monte_carlo_variance(p, 100, 1, 5));
}
