#include <doctest.h>

#include <cmath>

#include "bregman/errors.hpp"
#include "bregman/estimators.hpp"
#include "bregman/optimize.hpp"

using namespace bregman;

namespace {

Objective quadratic(const Matrix& a, const Vector& b) {
  return {"quadratic", b.size(), [a, b](const Vector& t) {
            return Evaluation{0.5 * t.dot(a * t) - b.dot(t), a * t - b};
          }};
}

Objective rosenbrock() {
  return {"rosenbrock", 2, [](const Vector& t) {
            const double x = t[0], y = t[1];
            Vector g(2);
            g << -2 * (1 - x) - 400 * x * (y - x * x), 200 * (y - x * x);
            return Evaluation{(1 - x) * (1 - x) + 100 * (y - x * x) * (y - x * x), g};
          }};
}

}  // namespace

TEST_CASE("one-dimensional quadratic") {
  const Objective f{"shift", 1, [](const Vector& t) {
                      return Evaluation{(t[0] - 1) * (t[0] - 1), Vector::Constant(1, 2 * (t[0] - 1))};
                    }};
  const auto r = minimize(f, Vector::Zero(1), OptimConfig{});
  CHECK(r.status == OptimStatus::converged);
  CHECK(std::abs(r.theta[0] - 1.0) < 1e-8);
  CHECK(r.grad_norm <= 1e-6);
}

TEST_CASE("rosenbrock") {
  Vector t0(2);
  t0 << -1.2, 1.0;
  OptimConfig config;
  config.gradient_tolerance = 1e-10;
  const auto r = minimize(rosenbrock(), t0, config);
  CHECK(std::abs(r.theta[0] - 1.0) < 1e-5);
  CHECK(std::abs(r.theta[1] - 1.0) < 1e-5);
  for (std::size_t i = 1; i < r.value_history.size(); ++i) {
    CHECK(r.value_history[i] <= r.value_history[i - 1]);
  }
}

TEST_CASE("convex quadratics converge within twice the dimension") {
  RngStream rng(3, 3);
  for (Index dim : {2, 10, 50}) {
    Matrix q(dim, dim);
    for (Index i = 0; i < q.size(); ++i) q(i) = rng.normal();
    const Matrix a = q * q.transpose() / double(dim) + Matrix::Identity(dim, dim);
    const Vector b = random_init(dim, 1.0, rng);
    OptimConfig config;
    config.memory = static_cast<int>(2 * dim);
    const auto r = minimize(quadratic(a, b), Vector::Zero(dim), config);
    CHECK(r.status == OptimStatus::converged);
    CHECK(r.iterations <= 2 * dim);
    CHECK((r.theta - a.ldlt().solve(b)).lpNorm<Eigen::Infinity>() < 1e-5);
  }
}

TEST_CASE("determinism and restarts") {
  Vector t0(2);
  t0 << -1.2, 1.0;
  const auto a = minimize(rosenbrock(), t0, OptimConfig{});
  const auto b = minimize(rosenbrock(), t0, OptimConfig{});
  CHECK(a.theta == b.theta);
  CHECK(a.value == b.value);
  CHECK(a.iterations == b.iterations);

  OptimConfig config;
  config.restarts = 3;
  RngStream r1(1, 1), r2(1, 1);
  const auto c = minimize(rosenbrock(), t0, config, &r1);
  const auto d = minimize(rosenbrock(), t0, config, &r2);
  CHECK(c.theta == d.theta);
  CHECK(c.value <= a.value + 1e-12);
  CHECK_THROWS_AS(minimize(rosenbrock(), t0, config, nullptr), InvalidArgument);
}

TEST_CASE("non-finite objective values end in a line-search failure") {
  const Objective f{"cliff", 1, [](const Vector& t) {
                      if (t[0] > 0.5) return Evaluation{std::nan(""), Vector::Constant(1, std::nan(""))};
                      return Evaluation{-t[0], Vector::Constant(1, -1.0)};
                    }};
  const auto r = minimize(f, Vector::Zero(1), OptimConfig{});
  CHECK(r.status == OptimStatus::line_search_failure);
  CHECK(std::isfinite(r.value));
  CHECK(r.theta[0] <= 0.5);
}

TEST_CASE("finite differences") {
  Vector a(3);
  a << 1.5, -2.0, 0.25;
  const Objective linear{"linear", 3, [a](const Vector& t) { return Evaluation{a.dot(t), a}; }};
  CHECK((finite_diff_grad(linear, Vector::Ones(3), 1e-3) - a).lpNorm<Eigen::Infinity>() < 1e-10);
  const Objective half{"half", 2, [](const Vector& t) { return Evaluation{0.5 * t.squaredNorm(), t}; }};
  Vector t(2);
  t << 1, 2;
  CHECK((finite_diff_grad(half, t, 1e-4) - t).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK_THROWS_AS(finite_diff_grad(half, t, 0.0), InvalidArgument);
}

TEST_CASE("config validation") {
  OptimConfig config;
  config.line_search.sufficient_decrease = 0.6;
  CHECK_THROWS_AS(config.validate(), InvalidArgument);
  config = OptimConfig{};
  config.memory = 0;
  CHECK_THROWS_AS(config.validate(), InvalidArgument);
}
