#include "zsd/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zsd/error.hpp"
#include "zsd/rng.hpp"

namespace zsd {

GradCheckReport finite_diff_check(std::span<const NamedParam> params,
                                  std::span<const Matrix* const> analytic,
                                  const CheckedLoss& loss,
                                  const GradCheckOptions& options) {
  require(params.size() == analytic.size(), ErrorCode::shape_mismatch,
          "finite_diff_check: parameter/gradient count mismatch");
  require(options.epsilon > 0.0, ErrorCode::invalid_argument,
          "finite_diff_check: epsilon must be positive");

  GradCheckReport report;
  Rng rng(mix_seed(options.seed, 0xfd));

  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& value = *params[p].value;
    const Matrix& grad = *analytic[p];
    require(value.same_shape(grad), ErrorCode::shape_mismatch,
            "finite_diff_check: gradient shape mismatch for " + params[p].name);

    std::vector<std::size_t> coords(value.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_param > 0 && coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
    }

    for (std::size_t c : coords) {
      const double saved = value[c];
      value[c] = saved + options.epsilon;
      const auto [plus, sig_plus] = loss();
      value[c] = saved - options.epsilon;
      const auto [minus, sig_minus] = loss();
      value[c] = saved;

      if (sig_plus != sig_minus) {
        ++report.coords_skipped;
        continue;
      }
      const double fd = (plus - minus) / (2.0 * options.epsilon);
      const double a = grad[c];
      const double rel =
          std::abs(fd - a) / std::max({std::abs(fd), std::abs(a), 1e-6});
      ++report.coords_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = params[p].name;
        report.worst_coord = c;
      }
    }
  }
  return report;
}

}  // namespace zsd
