#include "bregman/boosting.hpp"

#include <cmath>
#include <memory>

#include "bregman/errors.hpp"
#include "bregman/estimators.hpp"

namespace bregman {

BoostingResult boosting_fit(const Matrix& data, const NoiseModel& noise, const SPair& pair,
                            const BoostingConfig& config, RngStream& rng) {
  const Index n = data.rows();
  const Index total = config.total_experts;
  const Index group = config.group_size;
  require(n >= 1 && data.cols() >= 1, "boosting_fit: empty data");
  require(noise.dim() == n, "boosting_fit: noise dimension mismatch");
  require(total >= 1 && group >= 1 && total % group == 0,
          "boosting_fit: group size must divide the number of experts");
  require(config.nu > 0.0, "boosting_fit: nu must be positive");
  config.optim.validate();

  const auto data_sample = WeightedSample::uniform(data);
  const Index noise_count = std::llround(config.nu * static_cast<double>(data.cols()));
  const auto noise_sample = WeightedSample::uniform(noise.sample(rng, noise_count));
  const Vector data_log_noise = noise.log_density_batch(data_sample.points);
  const Vector noise_log_noise = noise.log_density_batch(noise_sample.points);

  // ln of the frozen product of experts at every point (c excluded).
  Vector data_frozen = Vector::Zero(data_sample.size());
  Vector noise_frozen = Vector::Zero(noise_sample.size());

  BoostingResult result;
  result.params.experts = Matrix::Zero(n, 0);
  result.params.smoothing_eps = config.smoothing_eps;
  auto model = std::make_shared<IcaPoeModel>(n, group, config.smoothing_eps);

  for (Index first = 0; first < total; first += group) {
    const Objective objective =
        nce_family_objective(model, data_sample, data_log_noise - data_frozen, noise_sample,
                             noise_log_noise - noise_frozen, pair, config.nu);
    Vector theta0(model->param_dim());
    theta0.head(n * group) = random_init(n * group, config.optim.init_scale, rng);
    theta0[n * group] = result.params.c;

    OptimResult optim = minimize(objective, theta0, config.optim, &rng);
    if (!std::isfinite(optim.value) || !optim.theta.allFinite()) {
      throw StageFailure("boosting_fit: stage starting at expert " + std::to_string(first) +
                             " produced no finite iterate",
                         result);
    }

    const auto fitted = IcaPoeParams::unpack(n, group, optim.theta, config.smoothing_eps);
    result.params.experts.conservativeResize(n, first + group);
    result.params.experts.rightCols(group) = fitted.experts;
    result.params.c = fitted.c;

    Vector without_c = optim.theta;
    without_c[n * group] = 0.0;
    data_frozen += model->log_unnorm_batch(data_sample.points, without_c);
    noise_frozen += model->log_unnorm_batch(noise_sample.points, without_c);

    result.stages.push_back({first, std::move(optim), result.params});
  }
  return result;
}

}  // namespace bregman
