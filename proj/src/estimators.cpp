#include "bregman/estimators.hpp"

#include <cmath>
#include <map>

#include "bregman/errors.hpp"
#include "bregman/numeric.hpp"

namespace bregman {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_sample(const WeightedSample& sample, Index n, const char* what) {
  require(sample.size() >= 1, std::string(what) + ": sample is empty");
  require(sample.dim() == n, std::string(what) + ": sample dimension does not match the model");
  require(sample.weights.size() == sample.size(), std::string(what) + ": weight count mismatch");
}

Vector finite_log_noise(const NoiseModel& noise, const WeightedSample& sample, const char* what) {
  require(noise.dim() == sample.dim(), std::string(what) + ": noise dimension mismatch");
  Vector log_density = noise.log_density_batch(sample.points);
  for (Index t = 0; t < log_density.size(); ++t) {
    if (!std::isfinite(log_density[t])) {
      throw InvalidArgument(std::string(what) +
                            ": noise density is zero at a sample point (support violation)");
    }
  }
  return log_density;
}

// ln g(u) = -ln(alpha e^D + beta), D = ln p_m(perturbed) - ln p_m(u), and the
// share s = alpha e^D / (alpha e^D + beta) so that d ln g = -s dD.
struct LogRatio {
  double log_g;
  double share;
};

LogRatio perturbed_log_ratio(double diff, double log_alpha, double log_beta) {
  const double a = log_alpha + diff;
  const double denom = log_add_exp(a, log_beta);
  return {-denom, std::exp(a - denom)};
}

Evaluation evaluate_data_dependent(const UnnormalizedModel& model, const WeightedSample& data,
                                   const Matrix& shifted, const Matrix& pulled_back,
                                   const PerturbationSpec& spec, const LogSPair& lp,
                                   const Vector& theta, bool with_gradient) {
  const Vector lx = model.log_unnorm_batch(data.points, theta);
  const Vector lxp = model.log_unnorm_batch(shifted, theta);      // ln p_m(Bx + v)
  const Vector lz = model.log_unnorm_batch(pulled_back, theta);   // ln p_m(B^T(x - v))
  const double log_alpha = std::log(spec.alpha);
  const double log_beta = spec.beta > 0.0 ? std::log(spec.beta) : kNegInf;

  const Index m = data.size();
  Evaluation out;
  Vector coef_x(m), coef_xp(m), coef_z(m);
  for (Index t = 0; t < m; ++t) {
    const double w = data.weights[t];
    const auto gx = perturbed_log_ratio(lxp[t] - lx[t], log_alpha, log_beta);
    // B z + v = x, so the perturbed partner of z is the data point itself.
    const auto gz = perturbed_log_ratio(lx[t] - lz[t], log_alpha, log_beta);
    out.value += w * (spec.alpha * lp.ls0(gz.log_g) + spec.beta * lp.ls0(gx.log_g) +
                      lp.ls1(-gx.log_g));
    if (!with_gradient) continue;
    const double a_z = -spec.alpha * lp.ls0_deriv(gz.log_g) * gz.share;
    const double a_x = gx.share * (lp.ls1_deriv(-gx.log_g) - spec.beta * lp.ls0_deriv(gx.log_g));
    coef_x[t] = w * (a_z - a_x);
    coef_z[t] = -w * a_z;
    coef_xp[t] = w * a_x;
  }
  if (with_gradient) {
    out.gradient = model.weighted_grad_theta(data.points, theta, coef_x) +
                   model.weighted_grad_theta(shifted, theta, coef_xp) +
                   model.weighted_grad_theta(pulled_back, theta, coef_z);
  }
  return out;
}

void check_theta(const UnnormalizedModel& model, const Vector& theta) {
  require(theta.size() == model.param_dim(), model.name() + ": parameter vector has length " +
                                                  std::to_string(theta.size()) + ", expected " +
                                                  std::to_string(model.param_dim()));
}

}  // namespace

// ---------------------------------------------------------------------------

WeightedSample WeightedSample::uniform(Matrix points) {
  const Index count = points.cols();
  require(count >= 1, "WeightedSample::uniform: empty sample");
  return {std::move(points), Vector::Constant(count, 1.0 / static_cast<double>(count)), count};
}

WeightedSample WeightedSample::compressed_binary(const Matrix& points) {
  require(points.cols() >= 1, "WeightedSample::compressed_binary: empty sample");
  std::map<Index, Index> counts;
  for (Index t = 0; t < points.cols(); ++t) ++counts[state_index(points.col(t))];
  WeightedSample out;
  out.points.resize(points.rows(), static_cast<Index>(counts.size()));
  out.weights.resize(static_cast<Index>(counts.size()));
  out.draws = points.cols();
  Index column = 0;
  for (const auto& [state, count] : counts) {
    for (Index i = 0; i < points.rows(); ++i) {
      out.points(i, column) = ((state >> i) & 1) ? 1.0 : -1.0;
    }
    out.weights[column] = static_cast<double>(count) / static_cast<double>(points.cols());
    ++column;
  }
  return out;
}

WeightedSample WeightedSample::population(Index n, const Vector& log_pmf) {
  Matrix states = enumerate_states(n);
  require(log_pmf.size() == states.cols(), "WeightedSample::population: need 2^n log masses");
  Vector weights = log_pmf.array().exp();
  require(std::abs(weights.sum() - 1.0) < 1e-9, "WeightedSample::population: pmf not normalized");
  return {std::move(states), std::move(weights), 0};
}

void PerturbationSpec::validate(Index n) const {
  require(alpha >= 0.0 && alpha <= 1.0 && beta >= 0.0 && beta <= 1.0,
          "PerturbationSpec: alpha and beta must lie in [0, 1]");
  require(std::abs(alpha + beta - 1.0) <= 1e-12, "PerturbationSpec: alpha + beta must equal 1");
  require(beta != 1.0, "PerturbationSpec: beta = 1 makes the noise equal to the data");
  require(rotation.rows() == n && rotation.cols() == n, "PerturbationSpec: B must be n x n");
  require(shift.size() == n, "PerturbationSpec: v must have length n");
  const double off = (rotation.transpose() * rotation - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  require(off <= 1e-10, "PerturbationSpec: B is not orthonormal");
}

PerturbationSpec PerturbationSpec::bit_flip(Index n, Index bit, double alpha, double beta) {
  require(bit >= 0 && bit < n, "PerturbationSpec::bit_flip: bit out of range");
  Matrix rotation = Matrix::Identity(n, n);
  rotation(bit, bit) = -1.0;
  return {rotation, Vector::Zero(n), alpha, beta};
}

// ---------------------------------------------------------------------------

Objective direct_matching_objective(ModelPtr model, const NoiseModel& noise,
                                    const WeightedSample& data, const WeightedSample& noise_sample,
                                    const SPair& pair) {
  require(model != nullptr, "direct_matching_objective: null model");
  check_sample(data, model->dim(), "direct_matching_objective");
  check_sample(noise_sample, model->dim(), "direct_matching_objective");
  const Vector log_noise = finite_log_noise(noise, noise_sample, "direct_matching_objective");
  // S0(g(y)) / p_n(y) enters with weight w_y / p_n(y).
  const Vector noise_scale =
      noise_sample.weights.cwiseProduct((-log_noise).array().exp().matrix());
  const LogSPair lp = logit_boost_transform(pair);

  Objective objective;
  objective.descriptor = "direct_matching(model=" + model->name() + ", noise=" + noise.name() +
                         ", pair=" + pair.name + ")";
  objective.param_dim = model->param_dim();
  objective.evaluate = [model, data, noise_sample, noise_scale, lp](const Vector& theta) {
    check_theta(*model, theta);
    const Vector ly = model->log_unnorm_batch(noise_sample.points, theta);
    const Vector lx = model->log_unnorm_batch(data.points, theta);
    Evaluation out;
    Vector coef_y(ly.size()), coef_x(lx.size());
    for (Index t = 0; t < ly.size(); ++t) {
      out.value += noise_scale[t] * lp.ls0(ly[t]);
      coef_y[t] = noise_scale[t] * lp.ls0_deriv(ly[t]);
    }
    for (Index t = 0; t < lx.size(); ++t) {
      out.value += data.weights[t] * lp.ls1(-lx[t]);
      coef_x[t] = -data.weights[t] * lp.ls1_deriv(-lx[t]);
    }
    out.gradient = model->weighted_grad_theta(noise_sample.points, theta, coef_y) +
                   model->weighted_grad_theta(data.points, theta, coef_x);
    return out;
  };
  return objective;
}

Objective nce_family_objective(ModelPtr model, const WeightedSample& data,
                               const Vector& data_log_noise, const WeightedSample& noise_sample,
                               const Vector& noise_log_noise, const SPair& pair, double nu) {
  require(model != nullptr, "nce_family_objective: null model");
  require(nu > 0.0 && std::isfinite(nu), "nce_family_objective: nu must be positive");
  check_sample(data, model->dim(), "nce_family_objective");
  check_sample(noise_sample, model->dim(), "nce_family_objective");
  require(data_log_noise.size() == data.size() && noise_log_noise.size() == noise_sample.size(),
          "nce_family_objective: one noise log density per point is required");
  require(data_log_noise.allFinite() && noise_log_noise.allFinite(),
          "nce_family_objective: noise density is zero at a sample point (support violation)");
  if (data.draws > 0 && noise_sample.draws > 0) {
    const auto expected = std::llround(nu * static_cast<double>(data.draws));
    require(noise_sample.draws == expected,
            "nce_family_objective: noise sample size must equal round(nu * T_d) = " +
                std::to_string(expected));
  }
  const LogSPair lp = logit_boost_transform(pair);
  const double log_nu = std::log(nu);
  // G = ln p_m - ln(nu p_n)
  const Vector data_offset = (data_log_noise.array() + log_nu).matrix();
  const Vector noise_offset = (noise_log_noise.array() + log_nu).matrix();

  Objective objective;
  objective.descriptor = "nce_family(model=" + model->name() + ", pair=" + pair.name +
                         ", nu=" + std::to_string(nu) + ")";
  objective.param_dim = model->param_dim();
  objective.evaluate = [model, data, noise_sample, data_offset, noise_offset, lp,
                        nu](const Vector& theta) {
    check_theta(*model, theta);
    const Vector gy = model->log_unnorm_batch(noise_sample.points, theta) - noise_offset;
    const Vector gx = model->log_unnorm_batch(data.points, theta) - data_offset;
    Evaluation out;
    Vector coef_y(gy.size()), coef_x(gx.size());
    double noise_term = 0.0;
    for (Index t = 0; t < gy.size(); ++t) {
      noise_term += noise_sample.weights[t] * lp.ls0(gy[t]);
      coef_y[t] = nu * noise_sample.weights[t] * lp.ls0_deriv(gy[t]);
    }
    out.value = nu * noise_term;
    for (Index t = 0; t < gx.size(); ++t) {
      out.value += data.weights[t] * lp.ls1(-gx[t]);
      coef_x[t] = -data.weights[t] * lp.ls1_deriv(-gx[t]);
    }
    out.gradient = model->weighted_grad_theta(noise_sample.points, theta, coef_y) +
                   model->weighted_grad_theta(data.points, theta, coef_x);
    return out;
  };
  return objective;
}

Objective nce_family_objective(ModelPtr model, const NoiseModel& noise, const WeightedSample& data,
                               const WeightedSample& noise_sample, const SPair& pair, double nu) {
  require(model != nullptr, "nce_family_objective: null model");
  require(noise.dim() == model->dim(), "nce_family_objective: noise dimension mismatch");
  auto objective = nce_family_objective(model, data,
                                        finite_log_noise(noise, data, "nce_family_objective"),
                                        noise_sample,
                                        finite_log_noise(noise, noise_sample, "nce_family_objective"),
                                        pair, nu);
  objective.descriptor.insert(objective.descriptor.size() - 1, ", noise=" + noise.name());
  return objective;
}

Objective data_dependent_noise_objective(ModelPtr model, const WeightedSample& data,
                                         const PerturbationSpec& spec, const SPair& pair) {
  require(model != nullptr, "data_dependent_noise_objective: null model");
  check_sample(data, model->dim(), "data_dependent_noise_objective");
  spec.validate(model->dim());
  const Matrix shifted = (spec.rotation * data.points).colwise() + spec.shift;
  const Matrix pulled_back = spec.rotation.transpose() * (data.points.colwise() - spec.shift);
  const LogSPair lp = logit_boost_transform(pair);

  Objective objective;
  objective.descriptor = "data_dependent_noise(model=" + model->name() + ", pair=" + pair.name +
                         ", alpha=" + std::to_string(spec.alpha) + ")";
  objective.param_dim = model->param_dim();
  objective.evaluate = [model, data, shifted, pulled_back, spec, lp](const Vector& theta) {
    check_theta(*model, theta);
    return evaluate_data_dependent(*model, data, shifted, pulled_back, spec, lp, theta, true);
  };
  return objective;
}

Objective ratio_matching_objective(ModelPtr model, const WeightedSample& data) {
  require(model != nullptr, "ratio_matching_objective: null model");
  require(model->domain_kind() == DomainKind::binary,
          "ratio_matching_objective: the model must live on {-1,+1}^n");
  check_sample(data, model->dim(), "ratio_matching_objective");
  const auto a = data.points.array();
  require(((a == 1.0) || (a == -1.0)).all(), "ratio_matching_objective: non-binary data");

  const Index n = model->dim();
  std::vector<Matrix> flipped(static_cast<std::size_t>(n), data.points);
  for (Index i = 0; i < n; ++i) flipped[static_cast<std::size_t>(i)].row(i) *= -1.0;

  Objective objective;
  objective.descriptor = "ratio_matching(model=" + model->name() + ")";
  objective.param_dim = model->param_dim();
  objective.evaluate = [model, data, flipped](const Vector& theta) {
    check_theta(*model, theta);
    const Vector lx = model->log_unnorm_batch(data.points, theta);
    Evaluation out;
    out.gradient = Vector::Zero(model->param_dim());
    Vector coef_total = Vector::Zero(data.size());
    for (const Matrix& other : flipped) {
      const Vector diff = model->log_unnorm_batch(other, theta) - lx;
      Vector coef(data.size());
      for (Index t = 0; t < data.size(); ++t) {
        const double r = sigmoid(diff[t]);  // p(x_-i) / (p(x) + p(x_-i))
        out.value += data.weights[t] * r * r;
        coef[t] = 2.0 * data.weights[t] * r * r * (1.0 - r);
      }
      out.gradient += model->weighted_grad_theta(other, theta, coef);
      coef_total += coef;
    }
    out.gradient -= model->weighted_grad_theta(data.points, theta, coef_total);
    return out;
  };
  return objective;
}

Objective score_matching_objective(ModelPtr model, const WeightedSample& data) {
  require(model != nullptr, "score_matching_objective: null model");
  if (!model->has_input_derivatives()) {
    throw CapabilityError("score_matching_objective: model '" + model->name() +
                          "' has no input derivatives");
  }
  check_sample(data, model->dim(), "score_matching_objective");

  Objective objective;
  objective.descriptor = "score_matching(model=" + model->name() + ")";
  objective.param_dim = model->param_dim();
  objective.evaluate = [model, data](const Vector& theta) {
    check_theta(*model, theta);
    Evaluation out;
    out.gradient = Vector::Zero(model->param_dim());
    for (Index t = 0; t < data.size(); ++t) {
      const auto x = data.points.col(t);
      const double w = data.weights[t];
      const Vector score = model->grad_x_log(x, theta);
      const Vector curvature = model->hessian_diag_x_log(x, theta);
      out.value += w * (0.5 * score.squaredNorm() + curvature.sum());
      out.gradient += w * (model->grad_x_log_jacobian(x, theta).transpose() * score +
                           model->hessian_diag_x_log_jacobian(x, theta).colwise().sum().transpose());
    }
    return out;
  };
  return objective;
}

Objective general_score_function_objective(ModelPtr model, const WeightedSample& data,
                                           const ConvexGenerator& psi) {
  require(model != nullptr, "general_score_function_objective: null model");
  if (!model->has_input_derivatives()) {
    throw CapabilityError("general_score_function_objective: model '" + model->name() +
                          "' has no input derivatives");
  }
  if (!psi.has_second_derivative() || !psi.has_third_derivative()) {
    throw CapabilityError("general_score_function_objective: generator '" + psi.name +
                          "' lacks second or third derivative");
  }
  check_sample(data, model->dim(), "general_score_function_objective");

  Objective objective;
  objective.descriptor = "score_function(model=" + model->name() + ", psi=" + psi.name + ")";
  objective.param_dim = model->param_dim();
  objective.evaluate = [model, data, psi](const Vector& theta) {
    check_theta(*model, theta);
    Evaluation out;
    out.gradient = Vector::Zero(model->param_dim());
    for (Index t = 0; t < data.size(); ++t) {
      const auto x = data.points.col(t);
      const double w = data.weights[t];
      const Vector score = model->grad_x_log(x, theta);
      const Vector curvature = model->hessian_diag_x_log(x, theta);
      const Matrix score_jac = model->grad_x_log_jacobian(x, theta);
      const Matrix curvature_jac = model->hessian_diag_x_log_jacobian(x, theta);
      for (Index i = 0; i < score.size(); ++i) {
        const double g = score[i];
        if (!psi.domain.contains(g)) {
          throw InvalidArgument("general_score_function_objective: score outside the domain of " +
                                psi.name);
        }
        const double d2 = psi.second_derivative(g);
        out.value += w * (-psi.value(g) + psi.derivative(g) * g + d2 * curvature[i]);
        // d/dtheta: Psi'' g dg + Psi''' H_ii dg + Psi'' dH_ii
        out.gradient += w * ((d2 * g + psi.third_derivative(g) * curvature[i]) *
                                 score_jac.row(i).transpose() +
                             d2 * curvature_jac.row(i).transpose());
      }
    }
    return out;
  };
  return objective;
}

Objective pseudolikelihood(Index n, const WeightedSample& data) {
  check_sample(data, n, "pseudolikelihood");
  Objective objective;
  objective.descriptor = "pseudolikelihood(n=" + std::to_string(n) + ")";
  objective.param_dim = boltzmann_param_dim(n);
  objective.evaluate = [n, data](const Vector& theta) {
    const auto result = pseudolikelihood_objective(data.points, data.weights,
                                                   BoltzmannParams::unpack(n, theta));
    return Evaluation{result.value, result.gradient};
  };
  return objective;
}

ExpansionCheck small_noise_expansion_check(ModelPtr model, const Vector& theta,
                                           const WeightedSample& data, const SPair& pair,
                                           double alpha, double sigma, Index v_draws,
                                           RngStream& rng) {
  require(model != nullptr, "small_noise_expansion_check: null model");
  require(sigma > 0.0, "small_noise_expansion_check: sigma must be positive");
  require(alpha > 0.0 && alpha <= 1.0, "small_noise_expansion_check: alpha must lie in (0, 1]");
  require(v_draws >= 2 && v_draws % 2 == 0,
          "small_noise_expansion_check: v_draws must be a positive even count");
  check_sample(data, model->dim(), "small_noise_expansion_check");
  check_theta(*model, theta);
  const Index n = model->dim();

  Matrix eps(n, v_draws);
  for (Index j = 0; j < v_draws / 2; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double z = rng.normal();
      eps(i, 2 * j) = z;
      eps(i, 2 * j + 1) = -z;
    }
  }
  const Vector second_moment = eps.rowwise().squaredNorm() / static_cast<double>(v_draws);
  eps = second_moment.cwiseSqrt().cwiseInverse().asDiagonal() * eps;

  const LogSPair lp = logit_boost_transform(pair);
  PerturbationSpec spec{Matrix::Identity(n, n), Vector::Zero(n), alpha, 1.0 - alpha};
  double total = 0.0;
  for (Index j = 0; j < v_draws; ++j) {
    spec.shift = sigma * eps.col(j);
    const Matrix shifted = data.points.colwise() + spec.shift;
    const Matrix pulled_back = data.points.colwise() - spec.shift;
    total += evaluate_data_dependent(*model, data, shifted, pulled_back, spec, lp, theta, false).value;
  }

  ExpansionCheck check;
  check.lhs = total / static_cast<double>(v_draws);
  const double score_value = score_matching_objective(model, data).value(theta);
  check.rhs = pair.s0(1.0) - pair.s1(1.0) +
              sigma * sigma * alpha * alpha * pair.s1_deriv(1.0) * score_value;
  return check;
}

}  // namespace bregman
