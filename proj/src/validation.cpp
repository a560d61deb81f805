#include "bregman/validation.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

#include "bregman/core.hpp"
#include "bregman/errors.hpp"
#include "bregman/estimators.hpp"
#include "bregman/experiments.hpp"
#include "bregman/models.hpp"
#include "bregman/noise.hpp"
#include "bregman/numeric.hpp"
#include "bregman/optimize.hpp"
#include "bregman/sampling.hpp"

namespace bregman {
namespace {

std::string sci(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.3e", value);
  return buffer;
}

CheckResult bounded(std::string name, double measured, double limit) {
  return {std::move(name), std::isfinite(measured) && measured < limit,
          sci(measured) + " < " + sci(limit)};
}

BoltzmannParams random_boltzmann(Index n, RngStream& rng) {
  BoltzmannParams p;
  p.upper_tri = random_init(n * (n - 1) / 2, 0.5, rng);
  p.b = random_init(n, 0.5, rng);
  p.c = -boltzmann_exact_log_partition(p.coupling_matrix(), p.b);
  return p;
}

double relative(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

CheckResult check_pair_grid() {
  double worst = 0.0;
  bool positive = true;
  for (const auto& pair : builtin_pairs()) {
    const auto report = validate_s_pair(pair, log_grid());
    worst = std::max(worst, report.max_violation);
    positive = positive && report.s1_deriv_positive;
  }
  auto result = bounded("s_pair_grid", worst, 1e-10);
  result.passed = result.passed && positive;
  return result;
}

CheckResult check_generator_pairs() {
  double worst = 0.0;
  for (const auto& psi : builtin_generators()) {
    if (psi.domain.lower > 0.0 || psi.domain.upper < 1e3) continue;
    const auto pair = s_pair_from_generator(psi);
    worst = std::max(worst, validate_s_pair(pair, log_grid(1e-2, 1e2, 41)).max_violation);
  }
  return bounded("s_pair_from_generator", worst, 1e-6);
}

CheckResult check_divergence(RngStream& rng) {
  double most_negative = 0.0;
  double self = 0.0;
  for (const auto& psi : builtin_generators()) {
    for (int k = 0; k < 200; ++k) {
      const double a = 0.01 + 5.0 * rng.uniform();
      const double b = 0.01 + 5.0 * rng.uniform();
      most_negative = std::min(most_negative, bregman_divergence(psi, a, b));
      self = std::max(self, std::abs(bregman_divergence(psi, a, a)));
    }
  }
  return bounded("bregman_nonnegative", std::max(-most_negative, self) + 0.0, 1e-12);
}

CheckResult check_logit_boost() {
  double worst = 0.0;
  for (const auto& pair : builtin_pairs()) {
    const auto lp = logit_boost_transform(pair);
    for (double g = -5.0; g <= 5.0; g += 0.25) {
      worst = std::max(worst, relative(lp.ls0(g), pair.s0(std::exp(g))));
      worst = std::max(worst, relative(lp.ls1(g), -pair.s1(std::exp(-g))));
    }
  }
  return bounded("logit_boost_identity", worst, 1e-12);
}

CheckResult check_nce_logistic(RngStream& rng) {
  const Index n = 3;
  const double nu = 2.0;
  const auto truth = random_boltzmann(n, rng);
  const auto states = enumerate_states(n);
  const auto idx = sample_discrete_exact(boltzmann_log_pmf(truth), rng, 200);
  Matrix x(n, 200);
  for (Index t = 0; t < 200; ++t) x.col(t) = states.col(idx[static_cast<std::size_t>(t)]);
  const auto noise = BernoulliNoise::uniform(n);
  const Matrix y = noise.sample(rng, 400);
  const auto model = std::make_shared<BoltzmannModel>(n);
  const Vector theta = random_init(model->param_dim(), 0.3, rng);
  const auto objective = nce_family_objective(model, noise, WeightedSample::uniform(x),
                                              WeightedSample::uniform(y), nce_pair(), nu);

  // Logistic regression of class labels on G = ln p_m - ln p_n - ln nu.
  double loss = 0.0;
  auto g = [&](const auto& u) {
    return model->log_unnorm(u, theta) - noise.log_density(u) - std::log(nu);
  };
  for (Index t = 0; t < x.cols(); ++t) loss += softplus(-g(x.col(t)));
  for (Index t = 0; t < y.cols(); ++t) loss += softplus(g(y.col(t)));
  loss /= static_cast<double>(x.cols() + y.cols());
  return bounded("nce_logistic_equivalence", relative(objective.value(theta), (1.0 + nu) * loss),
                 1e-10);
}

CheckResult check_ratio_identity(RngStream& rng) {
  const Index n = 3;
  const auto truth = random_boltzmann(n, rng);
  const auto data = WeightedSample::population(n, boltzmann_log_pmf(truth));
  const auto model = std::make_shared<BoltzmannModel>(n);
  const Vector theta = random_init(model->param_dim(), 0.5, rng);
  double worst = 0.0;
  for (Index bit = 0; bit < n; ++bit) {
    const auto objective =
        data_dependent_noise_objective(model, data, PerturbationSpec::bit_flip(n, bit), quadratic_pair());
    double mean_r2 = 0.0;
    for (Index t = 0; t < data.size(); ++t) {
      Vector flipped = data.points.col(t);
      flipped[bit] = -flipped[bit];
      const double r = sigmoid(model->log_unnorm(flipped, theta) -
                               model->log_unnorm(data.points.col(t), theta));
      mean_r2 += data.weights[t] * r * r;
    }
    worst = std::max(worst, std::abs(objective.value(theta) - (2.0 * mean_r2 - 1.0)));
  }
  return bounded("ratio_matching_identity", worst, 1e-12);
}

CheckResult check_score_forms(RngStream& rng) {
  const Index n = 2;
  const auto model = std::make_shared<IcaPoeModel>(n, 3, 1e-3);
  const auto data = WeightedSample::uniform(sample_ica(Matrix::Identity(n, n), rng, 100));
  const Vector theta = random_init(model->param_dim(), 0.7, rng);
  const double a = score_matching_objective(model, data).value(theta);
  const double b = general_score_function_objective(model, data, half_square_generator()).value(theta);
  return bounded("score_matching_general_form", std::abs(a - b), 1e-12);
}

CheckResult check_gradients(RngStream& rng) {
  std::vector<std::pair<std::string, Objective>> objectives;
  const Index n = 3;
  const auto truth = random_boltzmann(n, rng);
  const auto binary_data = WeightedSample::population(n, boltzmann_log_pmf(truth));
  const auto boltzmann = std::make_shared<BoltzmannModel>(n);
  const auto bernoulli = BernoulliNoise::uniform(n);
  const auto binary_noise = WeightedSample::compressed_binary(bernoulli.sample(rng, 50));
  for (const auto& pair : builtin_pairs()) {
    objectives.emplace_back("nce_family/" + pair.name,
                            nce_family_objective(boltzmann, bernoulli, binary_data, binary_noise, pair, 2.0));
    objectives.emplace_back("direct/" + pair.name,
                            direct_matching_objective(boltzmann, bernoulli, binary_data, binary_noise, pair));
    objectives.emplace_back("data_dependent/" + pair.name,
                            data_dependent_noise_objective(boltzmann, binary_data,
                                                           PerturbationSpec::bit_flip(n, 1, 0.3, 0.7), pair));
  }
  objectives.emplace_back("ratio_matching", ratio_matching_objective(boltzmann, binary_data));
  objectives.emplace_back("pseudolikelihood", pseudolikelihood(n, binary_data));

  const auto ica = std::make_shared<IcaPoeModel>(2, 2, 1e-2);
  const auto real_data = WeightedSample::uniform(sample_ica(Matrix::Identity(2, 2), rng, 60));
  objectives.emplace_back("score_matching", score_matching_objective(ica, real_data));
  objectives.emplace_back("general_score/log_cosh",
                          general_score_function_objective(ica, real_data, log_cosh_generator()));

  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, objective] : objectives) {
    const Vector theta = random_init(objective.param_dim, 0.4, rng);
    const double mismatch =
        gradient_mismatch(objective.evaluate(theta).gradient, finite_diff_grad(objective, theta, 1e-5));
    if (!(mismatch <= worst)) {
      worst = mismatch;
      worst_name = name;
    }
  }
  auto result = bounded("analytic_gradients", worst, 1e-5);
  result.detail += " (worst: " + worst_name + ")";
  return result;
}

CheckResult check_population_nce(RngStream& rng) {
  const Index n = 3;
  const auto truth = random_boltzmann(n, rng);
  const auto data = WeightedSample::population(n, boltzmann_log_pmf(truth));
  const auto noise = BernoulliNoise::uniform(n);
  const auto noise_sample =
      WeightedSample::population(n, noise.log_density_batch(enumerate_states(n)));
  const auto model = std::make_shared<BoltzmannModel>(n);
  const auto objective = nce_family_objective(model, noise, data, noise_sample, nce_pair(), 1.0);
  OptimConfig config;
  config.gradient_tolerance = 1e-10;
  config.max_iterations = 2000;
  const auto result = minimize(objective, Vector::Zero(model->param_dim()), config);
  return bounded("population_consistency",
                 (result.theta - truth.pack()).lpNorm<Eigen::Infinity>(), 1e-4);
}

CheckResult check_noise_normalization(RngStream& rng) {
  const Index n = 4;
  const Matrix states = enumerate_states(n);
  Vector p(n);
  for (Index i = 0; i < n; ++i) p[i] = 0.1 + 0.8 * rng.uniform();
  const BernoulliNoise product(p);
  const Matrix points = product.sample(rng, 300);
  const auto mixture = fit_bernoulli_mixture(points, 3, rng);
  double worst = 0.0;
  for (const NoiseModel* noise : {static_cast<const NoiseModel*>(&product),
                                  static_cast<const NoiseModel*>(&mixture)}) {
    worst = std::max(worst, std::abs(noise->log_density_batch(states).array().exp().sum() - 1.0));
  }
  return bounded("noise_normalization", worst, 1e-12);
}

CheckResult check_score_closed_form(RngStream& rng) {
  Matrix x(1, 5000);
  for (Index t = 0; t < x.cols(); ++t) x(0, t) = rng.normal();
  const auto model = std::make_shared<GaussianToyModel>(1);
  const auto objective = score_matching_objective(model, WeightedSample::uniform(x));
  OptimConfig config;
  config.gradient_tolerance = 1e-12;
  Vector theta0(2);
  theta0 << 1.0, 0.0;
  const auto result = minimize(objective, theta0, config);
  const double target = x.squaredNorm() / static_cast<double>(x.cols());
  return bounded("score_matching_closed_form", relative(result.theta[0], target), 1e-8);
}

CheckResult check_small_noise(RngStream& rng) {
  Matrix x(1, 64);
  for (Index t = 0; t < x.cols(); ++t) x(0, t) = rng.normal();
  const auto data = WeightedSample::uniform(x);
  const auto model = std::make_shared<GaussianToyModel>(1);
  Vector theta(2);
  theta << 1.5, -0.3;
  std::vector<double> residuals;
  for (double sigma : {0.1, 0.05, 0.025}) {
    RngStream v_rng = rng.derive(7);
    const auto check = small_noise_expansion_check(model, theta, data, nce_pair(), 0.5, sigma, 20000, v_rng);
    residuals.push_back(std::abs(check.lhs - check.rhs) / (sigma * sigma));
  }
  const bool decreasing = residuals[1] < residuals[0] && residuals[2] < residuals[1];
  return {"small_noise_expansion", decreasing,
          sci(residuals[0]) + " > " + sci(residuals[1]) + " > " + sci(residuals[2])};
}

CheckResult check_determinism(std::uint64_t seed) {
  Fig1Config config;
  config.trials = 1;
  config.sample_sizes = {300};
  config.methods = {Fig1Method::nce_bernoulli, Fig1Method::pseudolikelihood};
  config.master_seed = seed;
  auto render = [&] {
    std::ostringstream out;
    write_fig1_csv(out, run_fig1(config));
    return out.str();
  };
  const std::string first = render();
  const bool same = first == render();
  return {"csv_determinism", same, same ? "identical bytes" : "outputs differ"};
}

}  // namespace

std::vector<CheckResult> run_validation_suite(std::uint64_t seed) {
  const RngStream root(seed, 9);
  std::vector<std::function<CheckResult(RngStream&)>> checks{
      [](RngStream&) { return check_pair_grid(); },
      [](RngStream&) { return check_generator_pairs(); },
      check_divergence,
      [](RngStream&) { return check_logit_boost(); },
      check_nce_logistic,
      check_ratio_identity,
      check_score_forms,
      check_gradients,
      check_population_nce,
      check_noise_normalization,
      check_score_closed_form,
      check_small_noise,
      [seed](RngStream&) { return check_determinism(seed); },
  };
  std::vector<CheckResult> results;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    RngStream rng = root.derive(i);
    try {
      results.push_back(checks[i](rng));
    } catch (const std::exception& e) {
      results.push_back({"check_" + std::to_string(i), false, std::string("threw: ") + e.what()});
    }
  }
  return results;
}

bool print_check_table(std::ostream& out, const std::vector<CheckResult>& results) {
  bool all = true;
  for (const auto& r : results) {
    char line[256];
    std::snprintf(line, sizeof line, "%s  %-30s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                  r.detail.c_str());
    out << line;
    all = all && r.passed;
  }
  return all;
}

}  // namespace bregman
