#pragma once

#include <Eigen/Core>

namespace bregman {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Points are stored column-wise: an n x T matrix holds T points of dimension n.
using PointRef = Eigen::Ref<const Vector>;

enum class DomainKind { binary, real };

inline const char* to_string(DomainKind kind) {
  return kind == DomainKind::binary ? "binary" : "real";
}

}  // namespace bregman
