#pragma once

#include <stdexcept>
#include <vector>

#include "bregman/core.hpp"
#include "bregman/models.hpp"
#include "bregman/noise.hpp"
#include "bregman/optimize.hpp"

namespace bregman {

struct BoostingStage {
  Index first_expert = 0;  // experts [first_expert, first_expert + group_size) were free
  OptimResult optim;
  IcaPoeParams snapshot;   // all experts fitted so far, at the end of the stage
};

struct BoostingResult {
  IcaPoeParams params;
  std::vector<BoostingStage> stages;
};

/// Stage whose optimizer produced no finite iterate; carries the stages
/// completed before it.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(const std::string& message, BoostingResult partial)
      : std::runtime_error(message), partial_(std::move(partial)) {}
  const BoostingResult& partial() const { return partial_; }

 private:
  BoostingResult partial_;
};

struct BoostingConfig {
  Index total_experts = 8;  // K
  Index group_size = 1;     // m, must divide K
  double nu = 2.0;
  double smoothing_eps = 1e-8;
  OptimConfig optim;
};

/// Stagewise product-of-experts fit. The noise sample (round(nu T_d) draws)
/// is drawn once from rng, then each of the K/m stages adds m experts
/// initialized from rng and minimizes the S-pair objective over the new
/// experts and c, with all earlier experts frozen. The frozen experts enter
/// as a fixed offset in the log-ratio G, which is what makes each stage a
/// boosting step.
BoostingResult boosting_fit(const Matrix& data, const NoiseModel& noise, const SPair& pair,
                            const BoostingConfig& config, RngStream& rng);

}  // namespace bregman
