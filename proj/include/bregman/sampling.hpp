#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "bregman/types.hpp"

namespace bregman {

inline constexpr Index kMaxEnumerationDim = 20;

/// Reproducible random stream identified by (seed, stream_id). Streams for
/// separate trials or purposes are derived with derive(), so every draw is a
/// pure function of the master seed and the derivation path.
///
/// Only the engine (std::mt19937_64, fully specified by the standard) and
/// hand-written transforms are used; std:: distributions are avoided because
/// their output is implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Independent child stream.
  RngStream derive(std::uint64_t tag) const;

  std::uint64_t next_u64() { return engine_(); }
  double uniform();       // [0, 1), 53 random bits
  double uniform_open();  // (0, 1)
  double normal();        // standard normal, Box-Muller
  double laplace();       // zero mean, unit variance

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);

/// Quantile of the unit-variance Laplace distribution (scale 1/sqrt 2).
double laplace_quantile(double u);
double laplace_cdf(double s);

/// All 2^n points of {-1,+1}^n as columns; bit i of the column index maps to
/// coordinate i (0 -> -1, 1 -> +1).
Matrix enumerate_states(Index n);

/// Column index of a +-1 state under the enumerate_states order.
Index state_index(const PointRef& x);

/// T i.i.d. indices drawn from the normalized exp(log_weights).
std::vector<Index> sample_discrete_exact(const Vector& log_weights, RngStream& rng, Index count);

/// T draws of x with B^T x = s, s having i.i.d. unit-variance Laplace
/// coordinates; columns of the result are the points.
Matrix sample_ica(const Matrix& mixing, RngStream& rng, Index count);

}  // namespace bregman
