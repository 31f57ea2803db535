#pragma once

#include <span>
#include <vector>

#include "zsd/matrix.hpp"

namespace zsd {

struct SgdConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
};

/// SGD with classical (heavy-ball) momentum:
///   v <- mu * v - eta * g;  p <- p + v
/// Velocity buffers are created on first use and keyed by position, so the
/// parameter list must be passed in a stable order across calls.
class SgdState {
 public:
  explicit SgdState(SgdConfig config = {}) : config_(config) {}

  void step(std::span<Matrix* const> params, std::span<const Matrix* const> grads);

  const SgdConfig& config() const { return config_; }

 private:
  SgdConfig config_;
  std::vector<Matrix> velocity_;
};

}  // namespace zsd
