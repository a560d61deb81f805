#include "bregman/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "bregman/errors.hpp"
#include "bregman/numeric.hpp"

namespace bregman {
namespace {

void require_binary_points(const Matrix& points) {
  const auto a = points.array();
  require(((a == 1.0) || (a == -1.0)).all(), "binary noise: coordinates must be -1 or +1");
}

Index draw_index(const Vector& probabilities, RngStream& rng) {
  const double u = rng.uniform();
  double running = 0.0;
  for (Index k = 0; k < probabilities.size(); ++k) {
    running += probabilities[k];
    if (u < running) return k;
  }
  Index last = probabilities.size() - 1;
  while (last > 0 && probabilities[last] == 0.0) --last;
  return last;
}

}  // namespace

Vector NoiseModel::log_density_batch(const Matrix& points) const {
  Vector out(points.cols());
  for (Index t = 0; t < points.cols(); ++t) out[t] = log_density(points.col(t));
  return out;
}

// ---------------------------------------------------------------------------

BernoulliNoise::BernoulliNoise(Vector prob_plus) : prob_plus_(std::move(prob_plus)) {
  require(prob_plus_.size() >= 1, "BernoulliNoise: dimension must be positive");
  require((prob_plus_.array() > 0.0).all() && (prob_plus_.array() < 1.0).all(),
          "BernoulliNoise: probabilities must lie in (0, 1)");
}

double BernoulliNoise::log_density(const PointRef& u) const {
  require(u.size() == dim(), "BernoulliNoise: dimension mismatch");
  double value = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    if (u[i] == 1.0) {
      value += std::log(prob_plus_[i]);
    } else if (u[i] == -1.0) {
      value += std::log1p(-prob_plus_[i]);
    } else {
      return -std::numeric_limits<double>::infinity();
    }
  }
  return value;
}

Matrix BernoulliNoise::sample(RngStream& rng, Index count) const {
  Matrix out(dim(), count);
  for (Index t = 0; t < count; ++t) {
    for (Index i = 0; i < dim(); ++i) out(i, t) = rng.uniform() < prob_plus_[i] ? 1.0 : -1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

BernoulliMixtureNoise::BernoulliMixtureNoise(Vector weights, Matrix prob_plus)
    : weights_(std::move(weights)), prob_plus_(std::move(prob_plus)) {
  require(weights_.size() >= 1 && weights_.size() == prob_plus_.cols(),
          "BernoulliMixtureNoise: need one weight per component");
  require((weights_.array() >= 0.0).all() && std::abs(weights_.sum() - 1.0) < 1e-9,
          "BernoulliMixtureNoise: weights must be a probability vector");
  require((prob_plus_.array() > 0.0).all() && (prob_plus_.array() < 1.0).all(),
          "BernoulliMixtureNoise: probabilities must lie in (0, 1)");
}

Matrix BernoulliMixtureNoise::component_log_densities(const Matrix& points) const {
  require(points.rows() == dim(), "BernoulliMixtureNoise: dimension mismatch");
  const Matrix plus = (points.array() + 1.0) * 0.5;  // indicator of +1
  const Matrix minus = 1.0 - plus.array();
  const Matrix log_p = prob_plus_.array().log();
  const Matrix log_q = (-prob_plus_.array()).log1p();
  return log_p.transpose() * plus + log_q.transpose() * minus;
}

double BernoulliMixtureNoise::log_density(const PointRef& u) const {
  return log_density_batch(Matrix(u))[0];
}

Vector BernoulliMixtureNoise::log_density_batch(const Matrix& points) const {
  const auto a = points.array();
  const auto binary = ((a == 1.0) || (a == -1.0)).colwise().all();
  Matrix joint = component_log_densities(points);
  joint.colwise() += weights_.array().log().matrix();
  Vector out(points.cols());
  for (Index t = 0; t < points.cols(); ++t) {
    out[t] = binary[t] ? log_sum_exp(joint.col(t)) : -std::numeric_limits<double>::infinity();
  }
  return out;
}

Matrix BernoulliMixtureNoise::sample(RngStream& rng, Index count) const {
  Matrix out(dim(), count);
  for (Index t = 0; t < count; ++t) {
    const Index k = draw_index(weights_, rng);
    for (Index i = 0; i < dim(); ++i) out(i, t) = rng.uniform() < prob_plus_(i, k) ? 1.0 : -1.0;
  }
  return out;
}

BernoulliMixtureNoise fit_bernoulli_mixture(const Matrix& points, const Vector& weights,
                                            Index components, RngStream& rng,
                                            const EmConfig& config) {
  require(components >= 1, "fit_bernoulli_mixture: components must be >= 1");
  require(points.cols() >= 1 && points.cols() == weights.size(),
          "fit_bernoulli_mixture: need a nonempty sample with one weight per point");
  require((weights.array() >= 0.0).all() && weights.sum() > 0.0,
          "fit_bernoulli_mixture: weights must be nonnegative and not all zero");
  require_binary_points(points);

  const Index n = points.rows();
  const Vector w = weights / weights.sum();
  const Matrix plus = (points.array() + 1.0) * 0.5;
  const double lo = config.clamp;
  const double hi = 1.0 - config.clamp;

  Matrix prob(n, components);
  for (Index k = 0; k < components; ++k) {
    for (Index i = 0; i < n; ++i) prob(i, k) = 0.25 + 0.5 * rng.uniform();
  }
  BernoulliMixtureNoise model(Vector::Constant(components, 1.0 / components), prob);

  double previous = -std::numeric_limits<double>::infinity();
  for (int iteration = 0; iteration < config.max_iterations; ++iteration) {
    // E step in the log domain.
    Matrix joint = model.component_log_densities(points);
    joint.colwise() += model.weights_.array().log().matrix();
    Matrix resp(components, points.cols());
    for (Index t = 0; t < points.cols(); ++t) {
      const double total = log_sum_exp(joint.col(t));
      resp.col(t) = (joint.col(t).array() - total).exp();
    }

    // M step; clamping solves the box-constrained maximization per coordinate.
    const Vector mass = resp * w;  // K
    for (Index k = 0; k < components; ++k) {
      if (mass[k] <= 0.0) continue;
      const Vector freq = plus * (resp.row(k).transpose().cwiseProduct(w)) / mass[k];
      model.prob_plus_.col(k) = freq.cwiseMax(lo).cwiseMin(hi);
    }
    model.weights_ = mass.cwiseMax(lo);
    model.weights_ /= model.weights_.sum();

    const double ll = w.dot(model.log_density_batch(points));
    model.trace_.push_back(ll);
    if (std::abs(ll - previous) <= config.relative_tolerance * std::abs(ll)) break;
    previous = ll;
  }
  return model;
}

BernoulliMixtureNoise fit_bernoulli_mixture(const Matrix& points, Index components,
                                            RngStream& rng, const EmConfig& config) {
  return fit_bernoulli_mixture(points, Vector::Ones(points.cols()), components, rng, config);
}

// ---------------------------------------------------------------------------

GaussianNoise::GaussianNoise(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const Index n = mean_.size();
  require(n >= 1 && covariance_.rows() == n && covariance_.cols() == n,
          "GaussianNoise: covariance must be n x n");
  cholesky_.compute(covariance_);
  require(cholesky_.info() == Eigen::Success, "GaussianNoise: covariance is not positive definite");
  const Matrix l = cholesky_.matrixL();
  log_normalizer_ = -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) -
                    l.diagonal().array().log().sum();
}

double GaussianNoise::log_density(const PointRef& u) const {
  require(u.size() == dim(), "GaussianNoise: dimension mismatch");
  const Vector z = cholesky_.matrixL().solve(u - mean_);
  return log_normalizer_ - 0.5 * z.squaredNorm();
}

Vector GaussianNoise::log_density_batch(const Matrix& points) const {
  require(points.rows() == dim(), "GaussianNoise: dimension mismatch");
  const Matrix z = cholesky_.matrixL().solve(points.colwise() - mean_);
  return (log_normalizer_ - 0.5 * z.colwise().squaredNorm().array()).matrix().transpose();
}

Matrix GaussianNoise::sample(RngStream& rng, Index count) const {
  Matrix z(dim(), count);
  for (Index t = 0; t < count; ++t) {
    for (Index i = 0; i < dim(); ++i) z(i, t) = rng.normal();
  }
  Matrix out = cholesky_.matrixL() * z;
  out.colwise() += mean_;
  return out;
}

GaussianNoise gaussian_noise_from_sample(const Matrix& points) {
  const Index n = points.rows();
  const Index count = points.cols();
  require(n >= 1 && count > n, "gaussian_noise_from_sample: need more points than dimensions");
  const Matrix covariance = points * points.transpose() / static_cast<double>(count);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance, Eigen::EigenvaluesOnly);
  const double smallest = eig.eigenvalues().minCoeff();
  const double largest = eig.eigenvalues().maxCoeff();
  const double condition = smallest > 0.0 ? largest / smallest
                                          : std::numeric_limits<double>::infinity();
  if (!(condition < 1e12)) {
    std::ostringstream message;
    message << "gaussian_noise_from_sample: sample covariance is singular (condition number "
            << condition << ")";
    throw InvalidArgument(message.str());
  }
  return GaussianNoise(Vector::Zero(n), covariance);
}

}  // namespace bregman
