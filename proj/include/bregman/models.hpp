#pragma once

#include <memory>
#include <string>

#include "bregman/types.hpp"

namespace bregman {

/// Parametric log unnormalized density or mass ln p_m(x; theta).
///
/// The batch methods take points column-wise and are what the estimators
/// call; the defaults loop over the per-point methods. Input derivatives are
/// optional and only needed by the score-function estimators.
class UnnormalizedModel {
 public:
  virtual ~UnnormalizedModel() = default;

  virtual std::string name() const = 0;
  virtual Index dim() const = 0;
  virtual Index param_dim() const = 0;
  virtual DomainKind domain_kind() const = 0;

  virtual double log_unnorm(const PointRef& x, const Vector& theta) const = 0;
  virtual Vector grad_theta_log(const PointRef& x, const Vector& theta) const = 0;

  virtual Vector log_unnorm_batch(const Matrix& points, const Vector& theta) const;
  /// sum_t weights[t] * grad_theta ln p_m(points.col(t)).
  virtual Vector weighted_grad_theta(const Matrix& points, const Vector& theta,
                                     const Vector& weights) const;

  virtual bool has_input_derivatives() const { return false; }
  /// grad_x ln p_m
  virtual Vector grad_x_log(const PointRef& x, const Vector& theta) const;
  /// diagonal of the input Hessian of ln p_m
  virtual Vector hessian_diag_x_log(const PointRef& x, const Vector& theta) const;
  double laplacian_x_log(const PointRef& x, const Vector& theta) const;
  /// n x param_dim Jacobians of grad_x_log and hessian_diag_x_log in theta.
  virtual Matrix grad_x_log_jacobian(const PointRef& x, const Vector& theta) const;
  virtual Matrix hessian_diag_x_log_jacobian(const PointRef& x, const Vector& theta) const;

 protected:
  void check_shapes(const PointRef& x, const Vector& theta) const;
};

using ModelPtr = std::shared_ptr<const UnnormalizedModel>;

// ---------------------------------------------------------------------------
// Fully visible Boltzmann machine: ln p = 1/2 x^T M x + b^T x + c on {-1,+1}^n.
// theta layout: [M_01, M_02, ..., M_{n-2,n-1} (upper triangle, row-major), b, c]

struct BoltzmannParams {
  Vector upper_tri;  // n(n-1)/2 couplings
  Vector b;
  double c = 0.0;

  Index dim() const { return b.size(); }
  Matrix coupling_matrix() const;  // symmetric, zero diagonal
  Vector pack() const;
  static BoltzmannParams unpack(Index n, const Vector& theta);
  static BoltzmannParams from_matrix(const Matrix& coupling, const Vector& b, double c);
};

inline Index boltzmann_param_dim(Index n) { return n * (n - 1) / 2 + n + 1; }

class BoltzmannModel final : public UnnormalizedModel {
 public:
  explicit BoltzmannModel(Index n);

  std::string name() const override { return "boltzmann"; }
  Index dim() const override { return n_; }
  Index param_dim() const override { return boltzmann_param_dim(n_); }
  DomainKind domain_kind() const override { return DomainKind::binary; }

  double log_unnorm(const PointRef& x, const Vector& theta) const override;
  Vector grad_theta_log(const PointRef& x, const Vector& theta) const override;
  Vector log_unnorm_batch(const Matrix& points, const Vector& theta) const override;
  Vector weighted_grad_theta(const Matrix& points, const Vector& theta,
                             const Vector& weights) const override;

 private:
  Index n_;
};

double boltzmann_log_unnorm(const PointRef& x, const BoltzmannParams& params);

/// ln sum_x exp(1/2 x^T M x + b^T x) by enumeration; n <= 20.
double boltzmann_exact_log_partition(const Matrix& coupling, const Vector& b);

/// Per-state log probabilities of a Boltzmann machine in enumerate_states order.
Vector boltzmann_log_pmf(const BoltzmannParams& params);

/// Negative mean log pseudolikelihood and its gradient over (M, b). The c
/// slot of the gradient is always zero.
struct ValueGrad {
  double value = 0.0;
  Vector gradient;
};
ValueGrad pseudolikelihood_objective(const Matrix& points, const Vector& weights,
                                     const BoltzmannParams& params);

// ---------------------------------------------------------------------------
// Product of experts ln p = sum_k -sqrt2 phi(b_k^T x) + c with the smoothed
// absolute value phi(u) = sqrt(u^2 + eps).
// theta layout: [b_1, ..., b_K, c]

struct IcaPoeParams {
  Matrix experts;  // n x K, column k is b_k
  double c = 0.0;
  double smoothing_eps = 1e-8;

  Index dim() const { return experts.rows(); }
  Index num_experts() const { return experts.cols(); }
  Vector pack() const;
  static IcaPoeParams unpack(Index n, Index num_experts, const Vector& theta,
                             double smoothing_eps = 1e-8);
};

class IcaPoeModel final : public UnnormalizedModel {
 public:
  IcaPoeModel(Index n, Index num_experts, double smoothing_eps = 1e-8);

  std::string name() const override { return "ica_poe"; }
  Index dim() const override { return n_; }
  Index param_dim() const override { return n_ * num_experts_ + 1; }
  DomainKind domain_kind() const override { return DomainKind::real; }
  Index num_experts() const { return num_experts_; }
  double smoothing_eps() const { return eps_; }

  double log_unnorm(const PointRef& x, const Vector& theta) const override;
  Vector grad_theta_log(const PointRef& x, const Vector& theta) const override;
  Vector log_unnorm_batch(const Matrix& points, const Vector& theta) const override;
  Vector weighted_grad_theta(const Matrix& points, const Vector& theta,
                             const Vector& weights) const override;

  bool has_input_derivatives() const override { return true; }
  Vector grad_x_log(const PointRef& x, const Vector& theta) const override;
  Vector hessian_diag_x_log(const PointRef& x, const Vector& theta) const override;
  Matrix grad_x_log_jacobian(const PointRef& x, const Vector& theta) const override;
  Matrix hessian_diag_x_log_jacobian(const PointRef& x, const Vector& theta) const override;

 private:
  Index n_;
  Index num_experts_;
  double eps_;
};

double ica_poe_log_unnorm(const PointRef& x, const IcaPoeParams& params);

/// Exact log pdf of x with B^T x having i.i.d. unit-variance Laplace
/// coordinates: sum_k -sqrt2 |b_k^T x| + ln|det B| - (n/2) ln 2.
double ica_true_log_pdf(const PointRef& x, const Matrix& mixing);

// ---------------------------------------------------------------------------
// Axis-aligned Gaussian toy model ln p = -sum_i x_i^2 / (2 lambda_i) + c.
// theta layout: [lambda_1, ..., lambda_n, c]

class GaussianToyModel final : public UnnormalizedModel {
 public:
  explicit GaussianToyModel(Index n);

  std::string name() const override { return "gaussian"; }
  Index dim() const override { return n_; }
  Index param_dim() const override { return n_ + 1; }
  DomainKind domain_kind() const override { return DomainKind::real; }

  double log_unnorm(const PointRef& x, const Vector& theta) const override;
  Vector grad_theta_log(const PointRef& x, const Vector& theta) const override;

  bool has_input_derivatives() const override { return true; }
  Vector grad_x_log(const PointRef& x, const Vector& theta) const override;
  Vector hessian_diag_x_log(const PointRef& x, const Vector& theta) const override;
  Matrix grad_x_log_jacobian(const PointRef& x, const Vector& theta) const override;
  Matrix hessian_diag_x_log_jacobian(const PointRef& x, const Vector& theta) const override;

 private:
  Index n_;
};

}  // namespace bregman
