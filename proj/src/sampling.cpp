#include "bregman/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "bregman/errors.hpp"
#include "bregman/numeric.hpp"

namespace bregman {

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(mix64(seed ^ mix64(stream_id))) {}

RngStream RngStream::derive(std::uint64_t tag) const {
  return RngStream(seed_, mix64(stream_id_ ^ mix64(tag + 0x632be59bd9b4e019ULL)));
}

double RngStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RngStream::uniform_open() {
  return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform_open()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double RngStream::laplace() { return laplace_quantile(uniform_open()); }

double laplace_quantile(double u) {
  require(u > 0.0 && u < 1.0, "laplace_quantile: u must lie in (0, 1)");
  // scale b = 1/sqrt(2): F^-1(u) = -b sgn(u - 1/2) ln(1 - 2|u - 1/2|)
  const double centered = u - 0.5;
  const double magnitude = -std::log1p(-2.0 * std::abs(centered)) / std::numbers::sqrt2;
  return centered < 0.0 ? -magnitude : magnitude;
}

double laplace_cdf(double s) {
  const double tail = 0.5 * std::exp(-std::numbers::sqrt2 * std::abs(s));
  return s < 0.0 ? tail : 1.0 - tail;
}

Matrix enumerate_states(Index n) {
  if (n > kMaxEnumerationDim) {
    throw EnumerationLimit("enumerate_states: n = " + std::to_string(n) + " exceeds the limit of " +
                           std::to_string(kMaxEnumerationDim));
  }
  require(n >= 1, "enumerate_states: n must be positive");
  const Index count = Index{1} << n;
  Matrix states(n, count);
  for (Index s = 0; s < count; ++s) {
    for (Index i = 0; i < n; ++i) states(i, s) = ((s >> i) & 1) ? 1.0 : -1.0;
  }
  return states;
}

Index state_index(const PointRef& x) {
  if (x.size() > kMaxEnumerationDim) throw EnumerationLimit("state_index: dimension too large");
  Index index = 0;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] == 1.0) {
      index |= Index{1} << i;
    } else if (x[i] != -1.0) {
      throw InvalidArgument("state_index: coordinates must be -1 or +1");
    }
  }
  return index;
}

std::vector<Index> sample_discrete_exact(const Vector& log_weights, RngStream& rng, Index count) {
  require(log_weights.size() > 0, "sample_discrete_exact: no states");
  require(count >= 0, "sample_discrete_exact: negative sample size");
  for (Index k = 0; k < log_weights.size(); ++k) {
    const double w = log_weights[k];
    require(!std::isnan(w) && w != std::numeric_limits<double>::infinity(),
            "sample_discrete_exact: log weights must be finite or -inf");
  }
  const double log_total = log_sum_exp(log_weights);
  require(std::isfinite(log_total), "sample_discrete_exact: all weights are zero");

  std::vector<double> cumulative(static_cast<std::size_t>(log_weights.size()));
  double running = 0.0;
  for (Index k = 0; k < log_weights.size(); ++k) {
    running += std::exp(log_weights[k] - log_total);
    cumulative[static_cast<std::size_t>(k)] = running;
  }
  // Zero-weight trailing states must never be selected through rounding.
  Index last_positive = log_weights.size() - 1;
  while (log_weights[last_positive] == -std::numeric_limits<double>::infinity()) --last_positive;

  std::vector<Index> draws(static_cast<std::size_t>(count));
  for (auto& draw : draws) {
    const double u = rng.uniform() * running;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    draw = std::min<Index>(it - cumulative.begin(), last_positive);
  }
  return draws;
}

Matrix sample_ica(const Matrix& mixing, RngStream& rng, Index count) {
  require(mixing.rows() == mixing.cols(), "sample_ica: mixing matrix must be square");
  Eigen::FullPivLU<Matrix> lu(mixing.transpose());
  require(lu.isInvertible(), "sample_ica: mixing matrix is singular");
  Matrix sources(mixing.rows(), count);
  for (Index t = 0; t < count; ++t) {
    for (Index i = 0; i < mixing.rows(); ++i) sources(i, t) = rng.laplace();
  }
  return lu.solve(sources);
}

}  // namespace bregman
