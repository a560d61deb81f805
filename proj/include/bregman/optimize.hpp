#pragma once

#include <string>
#include <vector>

#include "bregman/estimators.hpp"
#include "bregman/sampling.hpp"
#include "bregman/types.hpp"

namespace bregman {

struct LineSearchConfig {
  double sufficient_decrease = 1e-4;
  double shrink = 0.5;
  int max_steps = 50;
};

struct OptimConfig {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // infinity norm
  int memory = 10;
  LineSearchConfig line_search;
  int restarts = 1;
  double init_scale = 0.1;

  void validate() const;
};

enum class OptimStatus { converged, max_iters, line_search_failure };

const char* to_string(OptimStatus status);

struct OptimResult {
  Vector theta;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  OptimStatus status = OptimStatus::max_iters;
  std::vector<double> value_history;  // accepted iterates, starting with theta0
};

/// Limited-memory BFGS with backtracking. Accepted values never increase.
/// With config.restarts > 1 the extra runs start from theta0 plus
/// N(0, init_scale^2) perturbations drawn from rng, and the lowest value wins.
OptimResult minimize(const Objective& objective, const Vector& theta0, const OptimConfig& config,
                     RngStream* rng = nullptr);

/// Central differences (f(theta + h e_i) - f(theta - h e_i)) / 2h.
Vector finite_diff_grad(const Objective& objective, const Vector& theta, double h);

/// |a - b|_inf / max(|a|_inf, |b|_inf), the relative error of a gradient.
double gradient_mismatch(const Vector& analytic, const Vector& numeric);

/// Gaussian initial point with standard deviation init_scale.
Vector random_init(Index dim, double init_scale, RngStream& rng);

}  // namespace bregman
