#pragma once

#include <functional>
#include <string>

#include "bregman/core.hpp"
#include "bregman/models.hpp"
#include "bregman/noise.hpp"
#include "bregman/sampling.hpp"
#include "bregman/types.hpp"

namespace bregman {

/// Points with weights summing to one. Sample means are weighted sums, so
/// the same objective code runs on raw samples, on samples with duplicate
/// states merged, and on exact enumerated expectations ("population mode").
struct WeightedSample {
  Matrix points;   // n x m, one point per column
  Vector weights;  // m
  Index draws = 0; // size of the underlying i.i.d. sample; 0 for exact expectations

  Index dim() const { return points.rows(); }
  Index size() const { return points.cols(); }

  static WeightedSample uniform(Matrix points);
  /// Merges repeated +-1 columns; weights become empirical frequencies.
  static WeightedSample compressed_binary(const Matrix& points);
  /// All 2^n states weighted by exp(log_pmf), which must be normalized.
  static WeightedSample population(Index n, const Vector& log_pmf);
};

struct Evaluation {
  double value = 0.0;
  Vector gradient;
};

/// Differentiable scalar function of the parameter vector.
struct Objective {
  std::string descriptor;
  Index param_dim = 0;
  std::function<Evaluation(const Vector&)> evaluate;

  double value(const Vector& theta) const { return evaluate(theta).value; }
};

/// Noise mixture alpha p(Bu + v) + beta p(u) used for data-dependent noise.
struct PerturbationSpec {
  Matrix rotation;  // B, orthonormal
  Vector shift;     // v
  double alpha = 0.5;
  double beta = 0.5;

  void validate(Index n) const;
  /// B_i: identity with entry (i, i) set to -1.
  static PerturbationSpec bit_flip(Index n, Index bit, double alpha = 0.5, double beta = 0.5);
};

/// mean_Y S0(g(y)) / p_n(y) - mean_X S1(g(x)) with g = p_m.
Objective direct_matching_objective(ModelPtr model, const NoiseModel& noise,
                                    const WeightedSample& data, const WeightedSample& noise_sample,
                                    const SPair& pair);

/// nu mean_Y S0(g(y)) - mean_X S1(g(x)) with g = p_m / (nu p_n), evaluated
/// through G = ln g with the log-domain pair.
Objective nce_family_objective(ModelPtr model, const NoiseModel& noise, const WeightedSample& data,
                               const WeightedSample& noise_sample, const SPair& pair, double nu);

/// Same objective with the noise log densities given per point. Subtracting
/// a fixed log factor of p_m from these turns the objective into one stage
/// of boosting.
Objective nce_family_objective(ModelPtr model, const WeightedSample& data,
                               const Vector& data_log_noise, const WeightedSample& noise_sample,
                               const Vector& noise_log_noise, const SPair& pair, double nu);

/// mean_X [alpha S0(g(B^T x - B^T v)) + beta S0(g(x)) - S1(g(x))] with
/// g(u) = p_m(u) / (alpha p_m(Bu + v) + beta p_m(u)).
Objective data_dependent_noise_objective(ModelPtr model, const WeightedSample& data,
                                         const PerturbationSpec& spec, const SPair& pair);

/// mean_X sum_i (p_m(x_-i) / (p_m(x) + p_m(x_-i)))^2; binary models only.
Objective ratio_matching_objective(ModelPtr model, const WeightedSample& data);

/// mean_X [1/2 |grad_x ln p_m|^2 + laplacian_x ln p_m].
Objective score_matching_objective(ModelPtr model, const WeightedSample& data);

/// mean_X sum_i [-Psi(g_i) + Psi'(g_i) g_i + Psi''(g_i) dg_i/dx_i] with
/// g = grad_x ln p_m and a separable Psi; needs Psi'' and Psi'''.
Objective general_score_function_objective(ModelPtr model, const WeightedSample& data,
                                           const ConvexGenerator& psi);

/// Negative mean log pseudolikelihood as an Objective over BoltzmannParams.
Objective pseudolikelihood(Index n, const WeightedSample& data);

struct ExpansionCheck {
  double lhs = 0.0;  // Monte Carlo E_v of the data-dependent noise objective
  double rhs = 0.0;  // S0(1) - S1(1) + sigma^2 alpha^2 S1'(1) * score matching value
};

/// Small-noise comparison for B = I and v ~ N(0, sigma^2 I). The v draws
/// come in antithetic pairs rescaled to unit second moment; with equal rng
/// streams the draws are common across sigma values.
ExpansionCheck small_noise_expansion_check(ModelPtr model, const Vector& theta,
                                           const WeightedSample& data, const SPair& pair,
                                           double alpha, double sigma, Index v_draws,
                                           RngStream& rng);

}  // namespace bregman
