#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include <Eigen/Cholesky>

#include "bregman/errors.hpp"
#include "bregman/models.hpp"
#include "bregman/sampling.hpp"

using namespace bregman;

TEST_CASE("streams are reproducible and independent") {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs = differs || x != c.next_u64();
  }
  CHECK(differs);
  RngStream d1 = RngStream(1, 1).derive(5), d2 = RngStream(1, 1).derive(5);
  CHECK(d1.normal() == d2.normal());
}

TEST_CASE("uniform and normal moments") {
  RngStream rng(7, 0);
  const int count = 100000;
  double sum = 0.0, sum2 = 0.0, usum = 0.0;
  for (int i = 0; i < count; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    usum += u;
  }
  CHECK(std::abs(sum / count) < 5.0 / std::sqrt(count));
  CHECK(std::abs(sum2 / count - 1.0) < 5.0 * std::sqrt(2.0 / count));
  CHECK(std::abs(usum / count - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / count));
}

TEST_CASE("laplace quantile inverts the cdf") {
  for (double u : {1e-6, 0.1, 0.5, 0.73, 0.999}) {
    CHECK(laplace_cdf(laplace_quantile(u)) == doctest::Approx(u).epsilon(1e-12));
  }
  // Unit variance: density exp(-sqrt2 |s|) / sqrt2.
  CHECK(laplace_cdf(0.0) == doctest::Approx(0.5));
  CHECK(laplace_cdf(1.0) == doctest::Approx(1.0 - 0.5 * std::exp(-std::sqrt(2.0))));
}

TEST_CASE("state enumeration order") {
  const Matrix one = enumerate_states(1);
  CHECK(one(0, 0) == -1.0);
  CHECK(one(0, 1) == 1.0);
  const Matrix three = enumerate_states(3);
  CHECK(three(0, 5) == 1.0);
  CHECK(three(1, 5) == -1.0);
  CHECK(three(2, 5) == 1.0);
  const Matrix five = enumerate_states(5);
  CHECK(five.cols() == 32);
  std::set<Index> seen;
  for (Index t = 0; t < 32; ++t) seen.insert(state_index(five.col(t)));
  CHECK(seen.size() == 32);
  CHECK(state_index(five.col(19)) == 19);
  CHECK_THROWS_AS(enumerate_states(21), EnumerationLimit);
}

TEST_CASE("exact discrete sampling") {
  RngStream rng(3, 1);
  Vector degenerate(2);
  degenerate << 0.0, -std::numeric_limits<double>::infinity();
  for (Index i : sample_discrete_exact(degenerate, rng, 1000)) CHECK(i == 0);

  const int count = 100000;
  const auto draws = sample_discrete_exact(Vector::Zero(32), rng, count);
  std::vector<int> hits(32, 0);
  for (Index i : draws) ++hits[static_cast<std::size_t>(i)];
  for (int h : hits) CHECK(std::abs(h / double(count) - 0.03125) < 0.003);

  Vector all_neg = Vector::Constant(3, -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(sample_discrete_exact(all_neg, rng, 1), InvalidArgument);
  Vector with_nan = Vector::Zero(3);
  with_nan[1] = std::nan("");
  CHECK_THROWS_AS(sample_discrete_exact(with_nan, rng, 1), InvalidArgument);
}

TEST_CASE("boltzmann samples follow the enumerated pmf") {
  RngStream rng(11, 2);
  BoltzmannParams p;
  p.upper_tri = Vector(3);
  p.upper_tri << 0.4, -0.6, 0.3;
  p.b = Vector(3);
  p.b << 0.2, -0.1, 0.5;
  const Vector log_pmf = boltzmann_log_pmf(p);
  const int count = 100000;
  std::vector<double> freq(8, 0.0);
  for (Index i : sample_discrete_exact(log_pmf, rng, count)) freq[static_cast<std::size_t>(i)] += 1.0 / count;
  double tv = 0.0;
  for (int s = 0; s < 8; ++s) tv += 0.5 * std::abs(freq[s] - std::exp(log_pmf[s]));
  CHECK(tv < 0.01);
}

TEST_CASE("ica sampling") {
  RngStream rng(5, 0);
  const Index count = 10000;
  const Matrix x = sample_ica(Matrix::Identity(3, 3), rng, count);
  for (Index i = 0; i < 3; ++i) {
    const double mean = x.row(i).mean();
    const double var = x.row(i).squaredNorm() / count;
    CHECK(std::abs(mean) < 5.0 / std::sqrt(double(count)));
    CHECK(std::abs(var - 1.0) < 0.05);
  }
  CHECK_THROWS_AS(sample_ica(Matrix::Zero(2, 2), rng, 5), InvalidArgument);

  // B^T x = s recovers Laplace sources.
  Matrix mixing(2, 2);
  mixing << 2.0, 0.5, -1.0, 1.0;
  RngStream r1(9, 9), r2(9, 9);
  const Matrix y = sample_ica(mixing, r1, 4);
  for (Index t = 0; t < 4; ++t) {
    const Vector s = mixing.transpose() * y.col(t);
    CHECK(s[0] == doctest::Approx(r2.laplace()).epsilon(1e-12));
    CHECK(s[1] == doctest::Approx(r2.laplace()).epsilon(1e-12));
  }
}

TEST_CASE("one-dimensional ica samples pass a Kolmogorov-Smirnov check") {
  RngStream rng(21, 0);
  const Index count = 100000;
  Matrix x = sample_ica(Matrix::Identity(1, 1), rng, count);
  std::vector<double> v(x.data(), x.data() + count);
  std::sort(v.begin(), v.end());
  double ks = 0.0;
  for (Index i = 0; i < count; ++i) {
    const double f = laplace_cdf(v[static_cast<std::size_t>(i)]);
    ks = std::max({ks, std::abs(f - double(i) / count), std::abs(f - double(i + 1) / count)});
  }
  CHECK(ks < 0.01);
}

TEST_CASE("ica log pdf agrees with an importance-sampling estimate") {
  // E_p[ln p] by direct averaging versus mean_q[w ln p] with weights p/q.
  Matrix mixing(2, 2);
  mixing << 1.0, 0.3, -0.4, 1.2;
  RngStream rng(4, 4);
  const Index count = 100000;
  const Matrix x = sample_ica(mixing, rng, count);
  double direct = 0.0, direct2 = 0.0;
  for (Index t = 0; t < count; ++t) {
    const double l = ica_true_log_pdf(x.col(t), mixing);
    direct += l;
    direct2 += l * l;
  }
  direct /= count;
  const double se = std::sqrt((direct2 / count - direct * direct) / count);

  const Matrix cov = x * x.transpose() / double(count);
  const Eigen::LLT<Matrix> llt(cov);
  const Matrix chol = llt.matrixL();
  const double log_norm = -std::log(2.0 * M_PI) - std::log(chol.diagonal().prod());
  double weighted = 0.0, weight_sum = 0.0;
  for (Index t = 0; t < count; ++t) {
    Vector z(2);
    z << rng.normal(), rng.normal();
    const Vector u = chol * z;
    const double lq = log_norm - 0.5 * z.squaredNorm();
    const double lp = ica_true_log_pdf(u, mixing);
    const double w = std::exp(lp - lq);
    weighted += w * lp;
    weight_sum += w;
  }
  CHECK(weight_sum / count == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(weighted / weight_sum - direct) < 3.0 * se + 0.01);
}
