#include "bregman/core.hpp"

#include <algorithm>
#include <cmath>

#include "bregman/errors.hpp"
#include "bregman/numeric.hpp"

namespace bregman {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const Interval kPositive{0.0, kInf};
const Interval kRealLine{-kInf, kInf};

void require_in(const Interval& domain, double u, const char* what) {
  if (!domain.contains(u)) {
    throw InvalidArgument(std::string(what) + " = " + std::to_string(u) +
                          " lies outside the generator domain");
  }
}

}  // namespace

ConvexGenerator square_generator() {
  return {"square",
          [](double u) { return u * u; },
          [](double u) { return 2.0 * u; },
          [](double) { return 2.0; },
          [](double) { return 0.0; },
          kRealLine};
}

ConvexGenerator half_square_generator() {
  return {"half_square",
          [](double u) { return 0.5 * u * u; },
          [](double u) { return u; },
          [](double) { return 1.0; },
          [](double) { return 0.0; },
          kRealLine};
}

ConvexGenerator nce_generator() {
  return {"nce",
          [](double u) { return u * std::log(u) - (1.0 + u) * std::log1p(u); },
          [](double u) { return std::log(u) - std::log1p(u); },
          [](double u) { return 1.0 / (u * (1.0 + u)); },
          [](double u) { return -1.0 / (u * u) + 1.0 / ((1.0 + u) * (1.0 + u)); },
          kPositive};
}

ConvexGenerator entropy_generator() {
  return {"entropy",
          [](double u) { return u * std::log(u) - u; },
          [](double u) { return std::log(u); },
          [](double u) { return 1.0 / u; },
          [](double u) { return -1.0 / (u * u); },
          kPositive};
}

ConvexGenerator log_cosh_generator() {
  return {"log_cosh",
          [](double u) {
            const double a = std::abs(u);
            return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
          },
          [](double u) { return std::tanh(u); },
          [](double u) {
            const double t = std::tanh(u);
            return 1.0 - t * t;
          },
          [](double u) {
            const double t = std::tanh(u);
            return -2.0 * t * (1.0 - t * t);
          },
          kRealLine};
}

std::vector<ConvexGenerator> builtin_generators() {
  return {square_generator(), half_square_generator(), nce_generator(), entropy_generator(),
          log_cosh_generator()};
}

void check_generator(const ConvexGenerator& psi, std::span<const double> grid) {
  require(psi.domain.nonempty(), "generator '" + psi.name + "' has an empty domain");
  require(static_cast<bool>(psi.value) && static_cast<bool>(psi.derivative),
          "generator '" + psi.name + "' lacks value or derivative");
  std::vector<double> points;
  for (double u : grid) {
    if (psi.domain.contains(u)) points.push_back(u);
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(psi.derivative(points[i - 1]) < psi.derivative(points[i]))) {
      throw InvalidArgument("generator '" + psi.name + "' derivative is not increasing at " +
                            std::to_string(points[i]));
    }
  }
}

double bregman_divergence(const ConvexGenerator& psi, double a, double b) {
  require_in(psi.domain, a, "a");
  require_in(psi.domain, b, "b");
  return psi.value(a) - psi.value(b) - psi.derivative(b) * (a - b);
}

double bregman_divergence(const ConvexGenerator& psi, const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "bregman_divergence: dimension mismatch");
  double total = 0.0;
  for (Index i = 0; i < a.size(); ++i) total += bregman_divergence(psi, a[i], b[i]);
  return total;
}

SPair nce_pair() {
  SPair pair;
  pair.name = "nce";
  pair.s0 = [](double u) { return std::log1p(u); };
  pair.s1 = [](double u) { return -std::log1p(1.0 / u); };
  pair.s0_deriv = [](double u) { return 1.0 / (1.0 + u); };
  pair.s1_deriv = [](double u) { return 1.0 / (u * (1.0 + u)); };
  pair.log_forms = LogSPair{"nce",
                            [](double g) { return softplus(g); },
                            [](double g) { return softplus(g); },
                            [](double g) { return sigmoid(g); },
                            [](double g) { return sigmoid(g); }};
  return pair;
}

SPair quadratic_pair() {
  SPair pair;
  pair.name = "quadratic";
  pair.s0 = [](double u) { return 0.5 * u * u; };
  pair.s1 = [](double u) { return u; };
  pair.s0_deriv = [](double u) { return u; };
  pair.s1_deriv = [](double) { return 1.0; };
  pair.log_forms = LogSPair{"quadratic",
                            [](double g) { return 0.5 * std::exp(2.0 * g); },
                            [](double g) { return -std::exp(-g); },
                            [](double g) { return std::exp(2.0 * g); },
                            [](double g) { return std::exp(-g); }};
  return pair;
}

SPair log_pair() {
  SPair pair;
  pair.name = "log";
  pair.s0 = [](double u) { return u; };
  pair.s1 = [](double u) { return std::log(u); };
  pair.s0_deriv = [](double) { return 1.0; };
  pair.s1_deriv = [](double u) { return 1.0 / u; };
  pair.log_forms = LogSPair{"log",
                            [](double g) { return std::exp(g); },
                            [](double g) { return g; },
                            [](double g) { return std::exp(g); },
                            [](double) { return 1.0; }};
  return pair;
}

std::vector<SPair> builtin_pairs() { return {nce_pair(), quadratic_pair(), log_pair()}; }

SPair pair_by_name(const std::string& name) {
  for (auto& pair : builtin_pairs()) {
    if (pair.name == name) return pair;
  }
  throw InvalidArgument("unknown S-pair '" + name + "' (expected nce, quadratic or log)");
}

SPair s_pair_from_generator(const ConvexGenerator& psi) {
  Interval domain{std::max(psi.domain.lower, 0.0), psi.domain.upper};
  require(domain.nonempty(), "generator '" + psi.name + "' has no positive domain");

  for (double u : log_grid()) {
    if (!domain.contains(u)) continue;
    if (!std::isfinite(psi.value(u)) || !std::isfinite(psi.derivative(u))) {
      throw InvalidArgument("generator '" + psi.name + "' is not finite at " + std::to_string(u));
    }
  }

  ScalarFn curvature = psi.second_derivative;
  if (!curvature) {
    curvature = [deriv = psi.derivative, domain](double u) {
      double h = 1e-5 * std::max(1.0, std::abs(u));
      h = std::min({h, 0.5 * (u - domain.lower), 0.5 * (domain.upper - u)});
      return (deriv(u + h) - deriv(u - h)) / (2.0 * h);
    };
  }

  SPair pair;
  pair.name = psi.name;
  pair.domain = domain;
  pair.s0 = [value = psi.value, deriv = psi.derivative](double u) {
    return -value(u) + deriv(u) * u;
  };
  pair.s1 = psi.derivative;
  pair.s0_deriv = [curvature](double u) { return curvature(u) * u; };
  pair.s1_deriv = curvature;
  return pair;
}

SPairReport validate_s_pair(const SPair& pair, std::span<const double> grid) {
  require(!grid.empty(), "validate_s_pair: empty grid");
  SPairReport report;
  for (double g : grid) {
    require(pair.domain.contains(g), "validate_s_pair: grid point " + std::to_string(g) +
                                         " outside the pair domain");
    const double d0 = pair.s0_deriv(g);
    const double d1 = pair.s1_deriv(g);
    if (!(d1 > 0.0)) report.s1_deriv_positive = false;
    const double scale = std::abs(d0) + std::abs(g * d1);
    const double gap = std::abs(d0 - g * d1);
    const double violation = scale > 0.0 ? gap / scale : gap;
    if (!(violation <= report.max_violation)) report.max_violation = violation;
  }
  return report;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  require(lo > 0.0 && hi > lo && count >= 2, "log_grid: need 0 < lo < hi and count >= 2");
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double step = std::log(hi / lo) / (count - 1);
  for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
  grid.back() = hi;
  return grid;
}

LogSPair logit_boost_transform(const SPair& pair) {
  if (pair.log_forms) return *pair.log_forms;
  return LogSPair{
      pair.name,
      [s0 = pair.s0](double g) { return s0(std::exp(g)); },
      [s1 = pair.s1](double g) { return -s1(std::exp(-g)); },
      [d0 = pair.s0_deriv](double g) {
        const double u = std::exp(g);
        return d0(u) * u;
      },
      [d1 = pair.s1_deriv](double g) {
        const double u = std::exp(-g);
        return d1(u) * u;
      }};
}

}  // namespace bregman
