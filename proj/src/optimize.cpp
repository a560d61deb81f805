#include "bregman/optimize.hpp"

#include <cmath>
#include <deque>

#include "bregman/errors.hpp"

namespace bregman {
namespace {

struct Correction {
  Vector s;
  Vector y;
  double rho;
};

bool finite(const Evaluation& e) { return std::isfinite(e.value) && e.gradient.allFinite(); }

Evaluation checked_evaluate(const Objective& objective, const Vector& theta) {
  Evaluation e = objective.evaluate(theta);
  if (e.gradient.size() != objective.param_dim) {
    throw InvalidArgument("objective '" + objective.descriptor + "' returned a gradient of length " +
                          std::to_string(e.gradient.size()));
  }
  return e;
}

// Two-loop recursion: returns -H g.
Vector lbfgs_direction(const std::deque<Correction>& memory, const Vector& gradient) {
  Vector q = gradient;
  std::vector<double> alphas(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    alphas[k] = memory[k].rho * memory[k].s.dot(q);
    q -= alphas[k] * memory[k].y;
  }
  const auto& last = memory.back();
  q *= last.s.dot(last.y) / last.y.squaredNorm();
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * memory[k].y.dot(q);
    q += (alphas[k] - beta) * memory[k].s;
  }
  return -q;
}

OptimResult run_lbfgs(const Objective& objective, const Vector& theta0, const OptimConfig& config) {
  OptimResult result;
  result.theta = theta0;
  Evaluation current = checked_evaluate(objective, theta0);
  result.value = current.value;
  result.grad_norm = current.gradient.size() ? current.gradient.lpNorm<Eigen::Infinity>() : 0.0;
  if (!finite(current)) {
    result.status = OptimStatus::line_search_failure;
    return result;
  }
  result.value_history.push_back(current.value);

  std::deque<Correction> memory;
  const auto& ls = config.line_search;
  result.status = OptimStatus::max_iters;

  while (true) {
    if (result.grad_norm <= config.gradient_tolerance) {
      result.status = OptimStatus::converged;
      break;
    }
    if (result.iterations >= config.max_iterations) break;

    bool accepted = false;
    Vector next_theta;
    Evaluation next;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Vector direction;
      double step = 1.0;
      if (memory.empty()) {
        direction = -current.gradient;
        step = std::min(1.0, 1.0 / current.gradient.norm());
      } else {
        direction = lbfgs_direction(memory, current.gradient);
      }
      double slope = current.gradient.dot(direction);
      if (!(slope < 0.0)) {
        memory.clear();
        direction = -current.gradient;
        step = std::min(1.0, 1.0 / current.gradient.norm());
        slope = current.gradient.dot(direction);
      }
      const double grad_norm = result.grad_norm;
      for (int k = 0; k < ls.max_steps; ++k, step *= ls.shrink) {
        next_theta = result.theta + step * direction;
        next = checked_evaluate(objective, next_theta);
        if (!finite(next)) continue;
        const bool armijo = next.value <= current.value + ls.sufficient_decrease * step * slope;
        // Near the precision floor the Armijo test is decided by rounding;
        // a non-increasing value with a smaller gradient still counts as progress.
        const bool floor_progress = next.value <= current.value &&
                                    next.gradient.lpNorm<Eigen::Infinity>() < grad_norm;
        if (armijo || floor_progress) {
          accepted = true;
          break;
        }
      }
      if (!accepted && memory.empty()) break;
      if (!accepted) memory.clear();
    }
    if (!accepted) {
      result.status = OptimStatus::line_search_failure;
      break;
    }

    Vector s = next_theta - result.theta;
    Vector y = next.gradient - current.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      memory.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(memory.size()) > config.memory) memory.pop_front();
    }
    result.theta = std::move(next_theta);
    current = std::move(next);
    result.value = current.value;
    result.grad_norm = current.gradient.lpNorm<Eigen::Infinity>();
    ++result.iterations;
    result.value_history.push_back(current.value);
  }
  return result;
}

}  // namespace

void OptimConfig::validate() const {
  require(max_iterations > 0, "OptimConfig: max_iterations must be positive");
  require(gradient_tolerance > 0.0, "OptimConfig: gradient_tolerance must be positive");
  require(memory > 0, "OptimConfig: memory must be positive");
  require(line_search.sufficient_decrease > 0.0 && line_search.sufficient_decrease < 0.5,
          "OptimConfig: sufficient decrease must lie in (0, 1/2)");
  require(line_search.shrink > 0.0 && line_search.shrink < 1.0,
          "OptimConfig: shrink factor must lie in (0, 1)");
  require(line_search.max_steps > 0, "OptimConfig: line search needs at least one step");
  require(restarts > 0, "OptimConfig: restarts must be positive");
  require(init_scale > 0.0, "OptimConfig: init_scale must be positive");
}

const char* to_string(OptimStatus status) {
  switch (status) {
    case OptimStatus::converged:
      return "converged";
    case OptimStatus::max_iters:
      return "max_iters";
    case OptimStatus::line_search_failure:
      return "line_search_failure";
  }
  return "unknown";
}

OptimResult minimize(const Objective& objective, const Vector& theta0, const OptimConfig& config,
                     RngStream* rng) {
  config.validate();
  require(theta0.size() == objective.param_dim, "minimize: theta0 has length " +
                                                    std::to_string(theta0.size()) + ", expected " +
                                                    std::to_string(objective.param_dim));
  require(config.restarts == 1 || rng != nullptr, "minimize: restarts > 1 need an RngStream");

  OptimResult best = run_lbfgs(objective, theta0, config);
  for (int r = 1; r < config.restarts; ++r) {
    Vector start = theta0 + random_init(theta0.size(), config.init_scale, *rng);
    OptimResult candidate = run_lbfgs(objective, start, config);
    const bool better = std::isfinite(candidate.value) &&
                        (!std::isfinite(best.value) || candidate.value < best.value);
    if (better) best = std::move(candidate);
  }
  return best;
}

Vector finite_diff_grad(const Objective& objective, const Vector& theta, double h) {
  require(h > 0.0, "finite_diff_grad: h must be positive");
  Vector grad(theta.size());
  Vector probe = theta;
  for (Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double up = objective.value(probe);
    probe[i] = theta[i] - h;
    const double down = objective.value(probe);
    probe[i] = theta[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double gradient_mismatch(const Vector& analytic, const Vector& numeric) {
  require(analytic.size() == numeric.size(), "gradient_mismatch: length mismatch");
  if (analytic.size() == 0) return 0.0;
  const double scale = std::max({analytic.lpNorm<Eigen::Infinity>(),
                                 numeric.lpNorm<Eigen::Infinity>(), 1e-12});
  return (analytic - numeric).lpNorm<Eigen::Infinity>() / scale;
}

Vector random_init(Index dim, double init_scale, RngStream& rng) {
  Vector theta(dim);
  for (Index i = 0; i < dim; ++i) theta[i] = init_scale * rng.normal();
  return theta;
}

}  // namespace bregman
