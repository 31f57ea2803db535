#include "zsd/sgd.hpp"

#include "zsd/error.hpp"

namespace zsd {

void SgdState::step(std::span<Matrix* const> params,
                    std::span<const Matrix* const> grads) {
  require(params.size() == grads.size(), ErrorCode::shape_mismatch,
          "sgd step: parameter/gradient count mismatch");
  if (velocity_.empty()) {
    velocity_.reserve(params.size());
    for (const Matrix* p : params) velocity_.emplace_back(p->rows(), p->cols());
  }
  require(velocity_.size() == params.size(), ErrorCode::shape_mismatch,
          "sgd step: parameter count changed between steps");

  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = *grads[i];
    Matrix& v = velocity_[i];
    require(p.same_shape(g) && p.same_shape(v), ErrorCode::shape_mismatch,
            "sgd step: shape mismatch");
    require(g.all_finite(), ErrorCode::non_finite_gradient,
            "sgd step: non-finite gradient");
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = config_.momentum * v[j] - config_.learning_rate * g[j];
      p[j] += v[j];
    }
  }
}

}  // namespace zsd
