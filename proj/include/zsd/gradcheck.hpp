#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>

#include "zsd/matrix.hpp"

namespace zsd {

struct NamedParam {
  std::string name;
  Matrix* value = nullptr;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// 0 checks every coordinate; otherwise at most this many per parameter,
  /// sampled with `seed`.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t coords_skipped = 0;
  std::string worst_param;
  std::size_t worst_coord = 0;
};

/// Loss evaluated at the current parameter values. The second member is a
/// hash of the ReLU activation signs seen during the evaluation; coordinates
/// whose +eps and -eps evaluations disagree straddle a kink and are skipped.
using CheckedLoss = std::function<std::pair<double, std::uint64_t>()>;

/// Central finite differences against analytic gradients, per coordinate.
/// `analytic` must align with `params`. Relative error uses
/// |fd - analytic| / max(|fd|, |analytic|, 1e-6).
GradCheckReport finite_diff_check(std::span<const NamedParam> params,
                                  std::span<const Matrix* const> analytic,
                                  const CheckedLoss& loss,
                                  const GradCheckOptions& options = {});

}  // namespace zsd
