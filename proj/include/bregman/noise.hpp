#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "bregman/sampling.hpp"
#include "bregman/types.hpp"

namespace bregman {

/// Auxiliary distribution with a normalized log density and an exact sampler.
class NoiseModel {
 public:
  virtual ~NoiseModel() = default;

  virtual std::string name() const = 0;
  virtual Index dim() const = 0;
  virtual DomainKind domain_kind() const = 0;
  virtual double log_density(const PointRef& u) const = 0;
  virtual Vector log_density_batch(const Matrix& points) const;
  /// count draws, one per column.
  virtual Matrix sample(RngStream& rng, Index count) const = 0;
};

using NoisePtr = std::shared_ptr<const NoiseModel>;

/// Independent coordinates on {-1,+1}^n with P(x_i = +1) = prob_plus[i].
class BernoulliNoise final : public NoiseModel {
 public:
  explicit BernoulliNoise(Vector prob_plus);
  static BernoulliNoise uniform(Index n) { return BernoulliNoise(Vector::Constant(n, 0.5)); }

  std::string name() const override { return "bernoulli"; }
  Index dim() const override { return prob_plus_.size(); }
  DomainKind domain_kind() const override { return DomainKind::binary; }
  double log_density(const PointRef& u) const override;
  Matrix sample(RngStream& rng, Index count) const override;

  const Vector& prob_plus() const { return prob_plus_; }

 private:
  Vector prob_plus_;
};

struct EmConfig {
  int max_iterations = 200;
  double relative_tolerance = 1e-8;
  double clamp = 1e-6;
};

/// Mixture of product-Bernoulli components on {-1,+1}^n.
class BernoulliMixtureNoise final : public NoiseModel {
 public:
  /// weights: K mixing proportions; prob_plus: n x K, column k is component k.
  BernoulliMixtureNoise(Vector weights, Matrix prob_plus);

  std::string name() const override { return "bernoulli_mixture"; }
  Index dim() const override { return prob_plus_.rows(); }
  Index components() const { return prob_plus_.cols(); }
  DomainKind domain_kind() const override { return DomainKind::binary; }
  double log_density(const PointRef& u) const override;
  Vector log_density_batch(const Matrix& points) const override;
  Matrix sample(RngStream& rng, Index count) const override;

  const Vector& weights() const { return weights_; }
  const Matrix& prob_plus() const { return prob_plus_; }
  /// Mean log-likelihood after each EM iteration (empty unless fitted).
  const std::vector<double>& log_likelihood_trace() const { return trace_; }

 private:
  friend BernoulliMixtureNoise fit_bernoulli_mixture(const Matrix&, const Vector&, Index,
                                                     RngStream&, const EmConfig&);
  Matrix component_log_densities(const Matrix& points) const;  // K x T

  Vector weights_;
  Matrix prob_plus_;
  std::vector<double> trace_;
};

/// EM fit to a weighted sample of +-1 points (weights need not be normalized).
BernoulliMixtureNoise fit_bernoulli_mixture(const Matrix& points, const Vector& weights,
                                            Index components, RngStream& rng,
                                            const EmConfig& config = {});
BernoulliMixtureNoise fit_bernoulli_mixture(const Matrix& points, Index components,
                                            RngStream& rng, const EmConfig& config = {});

class GaussianNoise final : public NoiseModel {
 public:
  GaussianNoise(Vector mean, Matrix covariance);

  std::string name() const override { return "gaussian"; }
  Index dim() const override { return mean_.size(); }
  DomainKind domain_kind() const override { return DomainKind::real; }
  double log_density(const PointRef& u) const override;
  Vector log_density_batch(const Matrix& points) const override;
  Matrix sample(RngStream& rng, Index count) const override;

  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }

 private:
  Vector mean_;
  Matrix covariance_;
  Eigen::LLT<Matrix> cholesky_;
  double log_normalizer_ = 0.0;
};

/// Zero-mean Gaussian with covariance X X^T / T of the columns of X.
GaussianNoise gaussian_noise_from_sample(const Matrix& points);

}  // namespace bregman
