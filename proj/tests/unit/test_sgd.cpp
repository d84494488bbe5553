#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "modelavg/objectives.hpp"
#include "modelavg/sgd.hpp"

using namespace modelavg;

TEST_CASE("step size examples") {
  CHECK(step_size(StepSchedule::inverse_time(1.0, 1.0), 0) == 1.0);
  CHECK(step_size(StepSchedule::inverse_time(2.0, 8.0), 2) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(step_size(StepSchedule::constant(0.025), 9999) == 0.025);
  CHECK_THROWS(StepSchedule::constant(0.0));
  CHECK_THROWS(StepSchedule::inverse_time(1.0, 0.0));
  CHECK_THROWS(StepSchedule::inverse_time(-1.0, 1.0));
}

TEST_CASE("sgd step examples") {
  SUBCASE("zero gradient leaves w unchanged") {
    const HomogeneousQuadratic obj(Eigen::MatrixXd::Identity(2, 2), {Eigen::Vector2d(-1.0, 2.0)});
    const ModelVector w{1.0, -2.0};
    CHECK(sgd_step(w, obj, 0, 0.3) == w);
  }
  SUBCASE("homogeneous quadratic") {
    const HomogeneousQuadratic obj(Eigen::MatrixXd::Identity(2, 2), {Eigen::Vector2d(1.0, 0.0)});
    CHECK(sgd_step(ModelVector{0.0, 0.0}, obj, 0, 0.5) == ModelVector{-0.5, 0.0});
  }
  SUBCASE("invalid step") {
    const HomogeneousQuadratic obj(Eigen::MatrixXd::Identity(1, 1), {Eigen::VectorXd::Zero(1)});
    CHECK_THROWS(sgd_step(ModelVector{0.0}, obj, 0, 0.0));
    CHECK_THROWS_AS(sgd_step(ModelVector{0.0}, obj, 1, 0.1), std::out_of_range);
  }
}

TEST_CASE("worker phase examples") {
  SUBCASE("two noise-free steps contract by (1 - alpha)^2") {
    const ScalarNoisyQuadratic obj(1.0, 0.0, 0.0);
    WorkerState s{0, ModelVector{1.0}, 0, 5};
    run_worker_phase(s, obj, StepSchedule::constant(0.1), 2);
    CHECK(s.model[0] == doctest::Approx(0.81).epsilon(1e-15));
    CHECK(s.iteration == 2);
  }
  SUBCASE("zero gradients keep the model") {
    const HomogeneousQuadratic obj(Eigen::MatrixXd::Identity(2, 2),
                                   {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(0.0, 0.0)});
    WorkerState s{0, ModelVector{0.0, 0.0}, 0, 5};
    run_worker_phase(s, obj, StepSchedule::constant(0.5), 10);
    CHECK(s.model == ModelVector{0.0, 0.0});
  }
  SUBCASE("replay is bit-identical") {
    const QuarticDoubleWell obj;
    WorkerState a{3, ModelVector{0.2}, 100, 42};
    WorkerState b = a;
    run_worker_phase(a, obj, StepSchedule::constant(0.025), 50);
    run_worker_phase(b, obj, StepSchedule::constant(0.025), 50);
    CHECK(a.model == b.model);
    WorkerState c{4, ModelVector{0.2}, 100, 42};
    run_worker_phase(c, obj, StepSchedule::constant(0.025), 50);
    CHECK_FALSE(a.model == c.model);
  }
  SUBCASE("splitting a phase does not change the result") {
    const QuarticDoubleWell obj;
    WorkerState a{1, ModelVector{0.0}, 0, 9};
    WorkerState b = a;
    run_worker_phase(a, obj, StepSchedule::inverse_time(1.0, 10.0), 30);
    run_worker_phase(b, obj, StepSchedule::inverse_time(1.0, 10.0), 12);
    run_worker_phase(b, obj, StepSchedule::inverse_time(1.0, 10.0), 18);
    CHECK(a.model == b.model);
  }
  SUBCASE("zero-length phase is rejected") {
    const QuarticDoubleWell obj;
    WorkerState s{0, ModelVector{0.0}, 0, 1};
    CHECK_THROWS(run_worker_phase(s, obj, StepSchedule::constant(0.1), 0));
  }
}

TEST_CASE("noise-free strongly convex quadratic contracts monotonically") {
  // Components share the linear term, so every sampled gradient is the full one.
  Eigen::MatrixXd p(3, 3);
  p << 2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 0.5;
  const Eigen::Vector3d q(1.0, -2.0, 0.5);
  const HomogeneousQuadratic obj(p, {q, q, q});
  const ModelVector w_star = *obj.known_optimum();
  const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(p).eigenvalues().maxCoeff();
  WorkerState s{0, ModelVector{5.0, -3.0, 4.0}, 0, 3};
  double prev = std::sqrt(squared_distance(s.model, w_star));
  for (int k = 0; k < 200; ++k) {
    run_worker_phase(s, obj, StepSchedule::constant(1.9 / lmax), 1);
    const double d = std::sqrt(squared_distance(s.model, w_star));
    CHECK(d <= prev);
    prev = d;
  }
}

TEST_CASE("uniform component sampling") {
  const std::size_t m = 10;
  const std::size_t n = 1000000;
  std::vector<std::size_t> counts(m, 0);
  for (std::size_t t = 0; t < n; ++t) {
    Rng rng = worker_rng(2024, 3, t);
    ++counts[rng.index(m)];
  }
  const double p = 1.0 / m;
  const double sd = std::sqrt(n * p * (1.0 - p));
  for (auto c : counts) CHECK(std::abs(static_cast<double>(c) - n * p) <= 5.0 * sd);
}

TEST_CASE("counter-based rng streams are reproducible and distinct") {
  Rng a(7, 1, 100), b(7, 1, 100), c(7, 2, 100), d(7, 1, 101);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
  Rng u(3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}
