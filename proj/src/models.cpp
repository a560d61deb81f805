#include "bregman/models.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "bregman/errors.hpp"
#include "bregman/numeric.hpp"
#include "bregman/sampling.hpp"

namespace bregman {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

void require_binary(const Matrix& points) {
  const auto a = points.array();
  require(((a == 1.0) || (a == -1.0)).all(), "binary model: coordinates must be -1 or +1");
}

void require_binary(const PointRef& x) {
  const auto a = x.array();
  require(((a == 1.0) || (a == -1.0)).all(), "binary model: coordinates must be -1 or +1");
}

// phi(u) = sqrt(u^2 + eps) and its first three derivatives.
struct Smoothed {
  double phi, d1, d2, d3;
};

Smoothed smoothed_abs(double u, double eps) {
  const double phi = std::sqrt(u * u + eps);
  if (phi == 0.0) return {0.0, 0.0, 0.0, 0.0};
  const double phi3 = phi * phi * phi;
  return {phi, u / phi, eps / phi3, -3.0 * eps * u / (phi3 * phi * phi)};
}

}  // namespace

// ---------------------------------------------------------------------------

Vector UnnormalizedModel::log_unnorm_batch(const Matrix& points, const Vector& theta) const {
  Vector out(points.cols());
  for (Index t = 0; t < points.cols(); ++t) out[t] = log_unnorm(points.col(t), theta);
  return out;
}

Vector UnnormalizedModel::weighted_grad_theta(const Matrix& points, const Vector& theta,
                                              const Vector& weights) const {
  require(weights.size() == points.cols(), "weighted_grad_theta: weight count mismatch");
  Vector out = Vector::Zero(param_dim());
  for (Index t = 0; t < points.cols(); ++t) {
    if (weights[t] != 0.0) out += weights[t] * grad_theta_log(points.col(t), theta);
  }
  return out;
}

Vector UnnormalizedModel::grad_x_log(const PointRef&, const Vector&) const {
  throw CapabilityError("model '" + name() + "' has no input derivatives");
}

Vector UnnormalizedModel::hessian_diag_x_log(const PointRef&, const Vector&) const {
  throw CapabilityError("model '" + name() + "' has no input derivatives");
}

double UnnormalizedModel::laplacian_x_log(const PointRef& x, const Vector& theta) const {
  return hessian_diag_x_log(x, theta).sum();
}

Matrix UnnormalizedModel::grad_x_log_jacobian(const PointRef&, const Vector&) const {
  throw CapabilityError("model '" + name() + "' has no input derivatives");
}

Matrix UnnormalizedModel::hessian_diag_x_log_jacobian(const PointRef&, const Vector&) const {
  throw CapabilityError("model '" + name() + "' has no input derivatives");
}

void UnnormalizedModel::check_shapes(const PointRef& x, const Vector& theta) const {
  require(x.size() == dim(), name() + ": point has dimension " + std::to_string(x.size()) +
                                 ", expected " + std::to_string(dim()));
  require(theta.size() == param_dim(), name() + ": parameter vector has length " +
                                           std::to_string(theta.size()) + ", expected " +
                                           std::to_string(param_dim()));
}

// ---------------------------------------------------------------------------
// Boltzmann machine

Matrix BoltzmannParams::coupling_matrix() const {
  const Index n = dim();
  require(upper_tri.size() == n * (n - 1) / 2, "BoltzmannParams: coupling count mismatch");
  Matrix m = Matrix::Zero(n, n);
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j, ++k) {
      m(i, j) = upper_tri[k];
      m(j, i) = upper_tri[k];
    }
  }
  return m;
}

Vector BoltzmannParams::pack() const {
  Vector theta(upper_tri.size() + b.size() + 1);
  theta << upper_tri, b, c;
  return theta;
}

BoltzmannParams BoltzmannParams::unpack(Index n, const Vector& theta) {
  require(theta.size() == boltzmann_param_dim(n), "BoltzmannParams::unpack: length mismatch");
  const Index pairs = n * (n - 1) / 2;
  return {theta.head(pairs), theta.segment(pairs, n), theta[pairs + n]};
}

BoltzmannParams BoltzmannParams::from_matrix(const Matrix& coupling, const Vector& b, double c) {
  const Index n = b.size();
  require(coupling.rows() == n && coupling.cols() == n, "from_matrix: shape mismatch");
  Vector upper(n * (n - 1) / 2);
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) upper[k++] = coupling(i, j);
  }
  return {upper, b, c};
}

BoltzmannModel::BoltzmannModel(Index n) : n_(n) { require(n >= 1, "BoltzmannModel: n >= 1"); }

double boltzmann_log_unnorm(const PointRef& x, const BoltzmannParams& params) {
  const Index n = params.dim();
  require(x.size() == n, "boltzmann_log_unnorm: dimension mismatch");
  require_binary(x);
  double value = params.b.dot(x) + params.c;
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) value += params.upper_tri[k++] * x[i] * x[j];
  }
  return value;
}

double BoltzmannModel::log_unnorm(const PointRef& x, const Vector& theta) const {
  check_shapes(x, theta);
  return boltzmann_log_unnorm(x, BoltzmannParams::unpack(n_, theta));
}

Vector BoltzmannModel::grad_theta_log(const PointRef& x, const Vector& theta) const {
  check_shapes(x, theta);
  require_binary(x);
  Vector g(param_dim());
  Index k = 0;
  for (Index i = 0; i < n_; ++i) {
    for (Index j = i + 1; j < n_; ++j) g[k++] = x[i] * x[j];
  }
  g.segment(k, n_) = x;
  g[k + n_] = 1.0;
  return g;
}

Vector BoltzmannModel::log_unnorm_batch(const Matrix& points, const Vector& theta) const {
  require(points.rows() == n_ && theta.size() == param_dim(), "boltzmann: shape mismatch");
  require_binary(points);
  const auto params = BoltzmannParams::unpack(n_, theta);
  const Matrix coupled = params.coupling_matrix() * points;
  Vector out = 0.5 * (points.array() * coupled.array()).colwise().sum().transpose();
  out += points.transpose() * params.b;
  out.array() += params.c;
  return out;
}

Vector BoltzmannModel::weighted_grad_theta(const Matrix& points, const Vector& theta,
                                           const Vector& weights) const {
  require(points.rows() == n_ && theta.size() == param_dim(), "boltzmann: shape mismatch");
  require(weights.size() == points.cols(), "weighted_grad_theta: weight count mismatch");
  require_binary(points);
  const Matrix second = points * weights.asDiagonal() * points.transpose();
  Vector g(param_dim());
  Index k = 0;
  for (Index i = 0; i < n_; ++i) {
    for (Index j = i + 1; j < n_; ++j) g[k++] = second(i, j);
  }
  g.segment(k, n_) = points * weights;
  g[k + n_] = weights.sum();
  return g;
}

Vector boltzmann_log_pmf(const BoltzmannParams& params) {
  const Matrix states = enumerate_states(params.dim());
  BoltzmannModel model(params.dim());
  BoltzmannParams unit = params;
  unit.c = 0.0;
  Vector log_weights = model.log_unnorm_batch(states, unit.pack());
  log_weights.array() -= log_sum_exp(log_weights);
  return log_weights;
}

double boltzmann_exact_log_partition(const Matrix& coupling, const Vector& b) {
  const Index n = b.size();
  if (n > kMaxEnumerationDim) {
    throw EnumerationLimit("boltzmann_exact_log_partition: n = " + std::to_string(n) +
                           " exceeds the enumeration limit of " +
                           std::to_string(kMaxEnumerationDim));
  }
  const auto params = BoltzmannParams::from_matrix(coupling, b, 0.0);
  BoltzmannModel model(n);
  return log_sum_exp(model.log_unnorm_batch(enumerate_states(n), params.pack()));
}

ValueGrad pseudolikelihood_objective(const Matrix& points, const Vector& weights,
                                     const BoltzmannParams& params) {
  const Index n = params.dim();
  require(points.rows() == n, "pseudolikelihood: dimension mismatch");
  require(weights.size() == points.cols(), "pseudolikelihood: weight count mismatch");
  require_binary(points);
  const Matrix coupling = params.coupling_matrix();

  // z_it = 2 x_i (sum_{j != i} M_ij x_j + b_i); -ln sigmoid(z) = softplus(-z)
  Matrix field = coupling * points;
  field.colwise() += params.b;
  const Matrix z = 2.0 * points.cwiseProduct(field);

  ValueGrad out;
  out.gradient = Vector::Zero(boltzmann_param_dim(n));
  Matrix dz = Matrix::Zero(n, points.cols());  // d value / d z, weighted
  for (Index t = 0; t < points.cols(); ++t) {
    for (Index i = 0; i < n; ++i) {
      out.value += weights[t] * softplus(-z(i, t));
      dz(i, t) = -weights[t] * sigmoid(-z(i, t));
    }
  }
  // dz_i/db_i = 2 x_i; dz_i/dM_ij = dz_j/dM_ij = 2 x_i x_j
  const Matrix scaled = 2.0 * dz.cwiseProduct(points);  // n x T
  const Matrix cross = scaled * points.transpose();      // (i, j): sum_t 2 dz_i x_i x_j
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) out.gradient[k++] = cross(i, j) + cross(j, i);
  }
  out.gradient.segment(k, n) = scaled.rowwise().sum();
  return out;
}

// ---------------------------------------------------------------------------
// Product of experts

Vector IcaPoeParams::pack() const {
  Vector theta(experts.size() + 1);
  theta.head(experts.size()) = Eigen::Map<const Vector>(experts.data(), experts.size());
  theta[experts.size()] = c;
  return theta;
}

IcaPoeParams IcaPoeParams::unpack(Index n, Index num_experts, const Vector& theta,
                                  double smoothing_eps) {
  require(theta.size() == n * num_experts + 1, "IcaPoeParams::unpack: length mismatch");
  IcaPoeParams params;
  params.experts = Eigen::Map<const Matrix>(theta.data(), n, num_experts);
  params.c = theta[n * num_experts];
  params.smoothing_eps = smoothing_eps;
  return params;
}

IcaPoeModel::IcaPoeModel(Index n, Index num_experts, double smoothing_eps)
    : n_(n), num_experts_(num_experts), eps_(smoothing_eps) {
  require(n >= 1 && num_experts >= 1, "IcaPoeModel: need n >= 1 and K >= 1");
  require(smoothing_eps >= 0.0, "IcaPoeModel: smoothing_eps must be nonnegative");
}

double ica_poe_log_unnorm(const PointRef& x, const IcaPoeParams& params) {
  require(x.size() == params.dim(), "ica_poe_log_unnorm: dimension mismatch");
  require(params.num_experts() >= 1, "ica_poe_log_unnorm: K >= 1");
  require(params.experts.allFinite(), "ica_poe_log_unnorm: experts must be finite");
  const Vector u = params.experts.transpose() * x;
  double value = params.c;
  for (Index k = 0; k < u.size(); ++k) {
    value -= kSqrt2 * smoothed_abs(u[k], params.smoothing_eps).phi;
  }
  return value;
}

double IcaPoeModel::log_unnorm(const PointRef& x, const Vector& theta) const {
  check_shapes(x, theta);
  return ica_poe_log_unnorm(x, IcaPoeParams::unpack(n_, num_experts_, theta, eps_));
}

Vector IcaPoeModel::grad_theta_log(const PointRef& x, const Vector& theta) const {
  check_shapes(x, theta);
  const Eigen::Map<const Matrix> experts(theta.data(), n_, num_experts_);
  Vector g(param_dim());
  for (Index k = 0; k < num_experts_; ++k) {
    const double u = experts.col(k).dot(x);
    g.segment(k * n_, n_) = -kSqrt2 * smoothed_abs(u, eps_).d1 * x;
  }
  g[n_ * num_experts_] = 1.0;
  return g;
}

Vector IcaPoeModel::log_unnorm_batch(const Matrix& points, const Vector& theta) const {
  require(points.rows() == n_ && theta.size() == param_dim(), "ica_poe: shape mismatch");
  const Eigen::Map<const Matrix> experts(theta.data(), n_, num_experts_);
  const Matrix u = experts.transpose() * points;
  Vector out = -kSqrt2 * (u.array().square() + eps_).sqrt().colwise().sum().transpose();
  out.array() += theta[n_ * num_experts_];
  return out;
}

Vector IcaPoeModel::weighted_grad_theta(const Matrix& points, const Vector& theta,
                                        const Vector& weights) const {
  require(points.rows() == n_ && theta.size() == param_dim(), "ica_poe: shape mismatch");
  require(weights.size() == points.cols(), "weighted_grad_theta: weight count mismatch");
  const Eigen::Map<const Matrix> experts(theta.data(), n_, num_experts_);
  const Matrix u = experts.transpose() * points;  // K x T
  Matrix slope(num_experts_, points.cols());
  for (Index t = 0; t < points.cols(); ++t) {
    for (Index k = 0; k < num_experts_; ++k) {
      slope(k, t) = weights[t] * smoothed_abs(u(k, t), eps_).d1;
    }
  }
  const Matrix grad_experts = -kSqrt2 * points * slope.transpose();  // n x K
  Vector g(param_dim());
  g.head(n_ * num_experts_) = Eigen::Map<const Vector>(grad_experts.data(), n_ * num_experts_);
  g[n_ * num_experts_] = weights.sum();
  return g;
}

Vector IcaPoeModel::grad_x_log(const PointRef& x, const Vector& theta) const {
  check_shapes(x, theta);
  const Eigen::Map<const Matrix> experts(theta.data(), n_, num_experts_);
  Vector g = Vector::Zero(n_);
  for (Index k = 0; k < num_experts_; ++k) {
    g -= kSqrt2 * smoothed_abs(experts.col(k).dot(x), eps_).d1 * experts.col(k);
  }
  return g;
}

Vector IcaPoeModel::hessian_diag_x_log(const PointRef& x, const Vector& theta) const {
  check_shapes(x, theta);
  const Eigen::Map<const Matrix> experts(theta.data(), n_, num_experts_);
  Vector h = Vector::Zero(n_);
  for (Index k = 0; k < num_experts_; ++k) {
    const double d2 = smoothed_abs(experts.col(k).dot(x), eps_).d2;
    h -= kSqrt2 * d2 * experts.col(k).cwiseAbs2();
  }
  return h;
}

Matrix IcaPoeModel::grad_x_log_jacobian(const PointRef& x, const Vector& theta) const {
  check_shapes(x, theta);
  const Eigen::Map<const Matrix> experts(theta.data(), n_, num_experts_);
  Matrix jac = Matrix::Zero(n_, param_dim());
  for (Index k = 0; k < num_experts_; ++k) {
    const auto s = smoothed_abs(experts.col(k).dot(x), eps_);
    // d(grad_x_i)/d b_kj = -sqrt2 (phi'' x_j b_ki + phi' delta_ij)
    auto block = jac.middleCols(k * n_, n_);
    block = -kSqrt2 * s.d2 * experts.col(k) * x.transpose();
    block.diagonal().array() -= kSqrt2 * s.d1;
  }
  return jac;
}

Matrix IcaPoeModel::hessian_diag_x_log_jacobian(const PointRef& x, const Vector& theta) const {
  check_shapes(x, theta);
  const Eigen::Map<const Matrix> experts(theta.data(), n_, num_experts_);
  Matrix jac = Matrix::Zero(n_, param_dim());
  for (Index k = 0; k < num_experts_; ++k) {
    const auto s = smoothed_abs(experts.col(k).dot(x), eps_);
    // d(H_ii)/d b_kj = -sqrt2 (phi''' x_j b_ki^2 + 2 phi'' b_ki delta_ij)
    auto block = jac.middleCols(k * n_, n_);
    block = -kSqrt2 * s.d3 * experts.col(k).cwiseAbs2() * x.transpose();
    block.diagonal() -= 2.0 * kSqrt2 * s.d2 * experts.col(k);
  }
  return jac;
}

double ica_true_log_pdf(const PointRef& x, const Matrix& mixing) {
  const Index n = mixing.rows();
  require(mixing.cols() == n && x.size() == n, "ica_true_log_pdf: shape mismatch");
  Eigen::FullPivLU<Matrix> lu(mixing);
  require(lu.isInvertible(), "ica_true_log_pdf: mixing matrix is singular");
  const Vector s = mixing.transpose() * x;
  return -kSqrt2 * s.cwiseAbs().sum() + std::log(std::abs(lu.determinant())) -
         0.5 * static_cast<double>(n) * std::log(2.0);
}

// ---------------------------------------------------------------------------
// Gaussian toy model

GaussianToyModel::GaussianToyModel(Index n) : n_(n) {
  require(n >= 1, "GaussianToyModel: n >= 1");
}

double GaussianToyModel::log_unnorm(const PointRef& x, const Vector& theta) const {
  check_shapes(x, theta);
  return -0.5 * (x.array().square() / theta.head(n_).array()).sum() + theta[n_];
}

Vector GaussianToyModel::grad_theta_log(const PointRef& x, const Vector& theta) const {
  check_shapes(x, theta);
  Vector g(param_dim());
  g.head(n_) = 0.5 * x.array().square() / theta.head(n_).array().square();
  g[n_] = 1.0;
  return g;
}

Vector GaussianToyModel::grad_x_log(const PointRef& x, const Vector& theta) const {
  check_shapes(x, theta);
  return -(x.array() / theta.head(n_).array()).matrix();
}

Vector GaussianToyModel::hessian_diag_x_log(const PointRef& x, const Vector& theta) const {
  check_shapes(x, theta);
  return -theta.head(n_).array().inverse().matrix();
}

Matrix GaussianToyModel::grad_x_log_jacobian(const PointRef& x, const Vector& theta) const {
  check_shapes(x, theta);
  Matrix jac = Matrix::Zero(n_, param_dim());
  jac.leftCols(n_).diagonal() = (x.array() / theta.head(n_).array().square()).matrix();
  return jac;
}

Matrix GaussianToyModel::hessian_diag_x_log_jacobian(const PointRef& x,
                                                     const Vector& theta) const {
  check_shapes(x, theta);
  Matrix jac = Matrix::Zero(n_, param_dim());
  jac.leftCols(n_).diagonal() = theta.head(n_).array().square().inverse().matrix();
  return jac;
}

}  // namespace bregman
