#pragma once

// Convex generators, the Bregman divergence and the (S0, S1) loss pairs
// that every estimator in this library is built from.

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bregman/types.hpp"

namespace bregman {

using ScalarFn = std::function<double(double)>;

/// Open interval (lower, upper); bounds may be infinite.
struct Interval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double u) const { return u > lower && u < upper; }
  bool nonempty() const { return lower < upper; }
};

inline constexpr double kRelTol = 1e-9;
inline constexpr double kAbsTol = 1e-12;

/// Strictly convex scalar Psi with its derivative. Higher derivatives are
/// optional; score-function estimators and s_pair_from_generator use them
/// when present.
struct ConvexGenerator {
  std::string name;
  ScalarFn value;
  ScalarFn derivative;
  ScalarFn second_derivative;  // may be empty
  ScalarFn third_derivative;   // may be empty
  Interval domain;

  bool has_second_derivative() const { return static_cast<bool>(second_derivative); }
  bool has_third_derivative() const { return static_cast<bool>(third_derivative); }
};

ConvexGenerator square_generator();       // u^2
ConvexGenerator half_square_generator();  // u^2 / 2
ConvexGenerator nce_generator();          // u ln u - (1+u) ln(1+u), u > 0
ConvexGenerator entropy_generator();      // u ln u - u, u > 0
ConvexGenerator log_cosh_generator();     // ln cosh u
std::vector<ConvexGenerator> builtin_generators();

/// Throws InvalidArgument unless the domain is a nonempty open interval and
/// the derivative is strictly increasing over the grid points inside it.
void check_generator(const ConvexGenerator& psi, std::span<const double> grid);

double bregman_divergence(const ConvexGenerator& psi, double a, double b);

/// Separable vector form: sum of coordinatewise scalar divergences.
double bregman_divergence(const ConvexGenerator& psi, const Vector& a, const Vector& b);

/// Log-domain forms of a pair, evaluated at G = ln g. Closed forms let the
/// estimators work with extreme log-ratios without overflow.
struct LogSPair {
  std::string name;
  ScalarFn ls0;        // S0(exp G)
  ScalarFn ls1;        // -S1(exp(-G))
  ScalarFn ls0_deriv;
  ScalarFn ls1_deriv;
};

struct SPair {
  std::string name;
  ScalarFn s0;
  ScalarFn s1;
  ScalarFn s0_deriv;
  ScalarFn s1_deriv;
  Interval domain{0.0, std::numeric_limits<double>::infinity()};
  std::optional<LogSPair> log_forms;  // overflow-safe versions, if known
};

SPair nce_pair();        // S0 = ln(1+u), S1 = ln u - ln(1+u)
SPair quadratic_pair();  // S0 = u^2/2,   S1 = u
SPair log_pair();        // S0 = u,       S1 = ln u
std::vector<SPair> builtin_pairs();
SPair pair_by_name(const std::string& name);

/// S0(g) = -Psi(g) + Psi'(g) g, S1(g) = Psi'(g). Uses Psi'' when the
/// generator has it, central differences of Psi' otherwise.
SPair s_pair_from_generator(const ConvexGenerator& psi);

struct SPairReport {
  double max_violation = 0.0;     // largest |S0' - g S1'| / (|S0'| + |g S1'|)
  bool s1_deriv_positive = true;

  bool valid(double tolerance = 1e-10) const {
    return s1_deriv_positive && max_violation < tolerance;
  }
};

SPairReport validate_s_pair(const SPair& pair, std::span<const double> grid);

/// count points spaced logarithmically over [lo, hi].
std::vector<double> log_grid(double lo = 1e-3, double hi = 1e3, int count = 61);

/// G -> (S0(e^G), -S1(e^-G)). Returns the pair's closed log forms when
/// available, otherwise composes through exp.
LogSPair logit_boost_transform(const SPair& pair);

}  // namespace bregman
