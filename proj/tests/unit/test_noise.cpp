#include <doctest.h>

#include <cmath>

#include "bregman/errors.hpp"
#include "bregman/noise.hpp"

using namespace bregman;

TEST_CASE("bernoulli noise normalizes and samples the declared marginals") {
  Vector p(5);
  p << 0.1, 0.3, 0.5, 0.7, 0.95;
  const BernoulliNoise noise(p);
  const Matrix states = enumerate_states(5);
  CHECK(noise.log_density_batch(states).array().exp().sum() == doctest::Approx(1.0).epsilon(1e-12));
  RngStream rng(1, 1);
  const Index count = 100000;
  const Matrix x = noise.sample(rng, count);
  for (Index i = 0; i < 5; ++i) {
    const double freq = (x.row(i).array() > 0).cast<double>().mean();
    CHECK(std::abs(freq - p[i]) < 5 * std::sqrt(p[i] * (1 - p[i]) / count));
  }
  CHECK(BernoulliNoise::uniform(3).log_density(Vector::Ones(3)) == doctest::Approx(-3 * std::log(2.0)));
}

TEST_CASE("one-component mixture is the empirical product of marginals") {
  RngStream rng(2, 2);
  Vector p(4);
  p << 0.2, 0.4, 0.6, 0.8;
  const Matrix x = BernoulliNoise(p).sample(rng, 2000);
  const auto fit = fit_bernoulli_mixture(x, 1, rng);
  for (Index i = 0; i < 4; ++i) {
    const double freq = (x.row(i).array() > 0).cast<double>().mean();
    CHECK(fit.prob_plus()(i, 0) == doctest::Approx(freq).epsilon(1e-9));
  }
  CHECK(fit.weights()[0] == doctest::Approx(1.0));
}

TEST_CASE("mixture fit on a two-component sample") {
  RngStream rng(3, 3);
  Matrix probs(5, 2);
  probs.col(0) << 0.9, 0.9, 0.1, 0.1, 0.8;
  probs.col(1) << 0.1, 0.2, 0.9, 0.8, 0.3;
  Vector w(2);
  w << 0.4, 0.6;
  const BernoulliMixtureNoise truth(w, probs);
  const Matrix x = truth.sample(rng, 10000);
  const auto two = fit_bernoulli_mixture(x, 2, rng);
  const auto one = fit_bernoulli_mixture(x, 1, rng);
  CHECK(two.log_density_batch(x).mean() >= one.log_density_batch(x).mean());
  CHECK(two.log_density_batch(enumerate_states(5)).array().exp().sum() ==
        doctest::Approx(1.0).epsilon(1e-10));
  const auto& trace = two.log_likelihood_trace();
  REQUIRE(trace.size() >= 2);
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-10);
}

TEST_CASE("weighted mixture fit equals the fit on expanded duplicates") {
  Matrix points(2, 3);
  points << 1, -1, 1, 1, 1, -1;
  Vector counts(3);
  counts << 3, 1, 2;
  Matrix expanded(2, 6);
  expanded << 1, 1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1;
  RngStream r1(4, 4), r2(4, 4);
  const auto a = fit_bernoulli_mixture(points, counts, 1, r1);
  const auto b = fit_bernoulli_mixture(expanded, 1, r2);
  CHECK(a.prob_plus().isApprox(b.prob_plus(), 1e-12));
}

TEST_CASE("gaussian noise from a sample") {
  Matrix x(2, 4);
  x << 1, -1, 0, 0, 0, 0, 1, -1;
  const auto noise = gaussian_noise_from_sample(x);
  CHECK(noise.covariance().isApprox(0.5 * Matrix::Identity(2, 2)));
  CHECK(noise.log_density(Vector::Zero(2)) == doctest::Approx(-std::log(M_PI)));
  CHECK_THROWS_AS(gaussian_noise_from_sample(Matrix::Ones(2, 2)), InvalidArgument);
  Matrix degenerate(2, 5);
  degenerate << 1, 2, 3, 4, 5, 1, 2, 3, 4, 5;
  CHECK_THROWS_AS(gaussian_noise_from_sample(degenerate), InvalidArgument);
}

TEST_CASE("gaussian sampler moments") {
  Matrix cov(2, 2);
  cov << 2.0, 0.6, 0.6, 1.0;
  const GaussianNoise noise(Vector::Zero(2), cov);
  RngStream rng(6, 6);
  const Index count = 100000;
  const Matrix x = noise.sample(rng, count);
  const Matrix emp = x * x.transpose() / double(count);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) {
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / count);
      CHECK(std::abs(emp(i, j) - cov(i, j)) < 5 * se);
    }
  }
  // Whitened data has identity sample covariance.
  const Eigen::LLT<Matrix> llt(emp);
  const Matrix white = llt.matrixL().solve(x);
  CHECK(gaussian_noise_from_sample(white).covariance().isApprox(Matrix::Identity(2, 2), 1e-10));
}
