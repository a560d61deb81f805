#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace bregman {

/// ln(1 + e^x) without overflow.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// ln(e^a + e^b); either argument may be -inf.
inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& values) {
  const double hi = values.maxCoeff();
  if (!std::isfinite(hi)) return hi;
  return hi + std::log((values.derived().array() - hi).exp().sum());
}

}  // namespace bregman
