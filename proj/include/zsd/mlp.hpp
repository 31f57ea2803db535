#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "zsd/matrix.hpp"
#include "zsd/rng.hpp"

namespace zsd {

enum class Activation { identity, relu, sigmoid };

double apply_activation(Activation act, double x);

/// Fully connected layer: y = act(x * W^T + b).
struct AffineLayer {
  Matrix weights;  // out x in
  Matrix bias;     // 1 x out
  Activation activation = Activation::identity;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }
};

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
AffineLayer make_affine_layer(std::size_t in, std::size_t out, Activation act, Rng& rng);

struct Mlp {
  std::vector<AffineLayer> layers;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }
};

Mlp make_mlp(std::size_t in, std::span<const std::size_t> widths,
             std::span<const Activation> activations, Rng& rng);

struct LayerCache {
  Matrix input;           // batch x in
  Matrix pre_activation;  // batch x out
};

struct MlpCache {
  std::vector<LayerCache> layers;
};

Matrix affine_forward(const AffineLayer& layer, const Matrix& x, LayerCache* cache);
Matrix mlp_forward(const Mlp& net, const Matrix& x, MlpCache* cache = nullptr);

struct AffineGrads {
  Matrix weights;
  Matrix bias;
};

struct MlpGrads {
  std::vector<AffineGrads> layers;
};

AffineGrads zero_grads(const AffineLayer& layer);
MlpGrads zero_grads(const Mlp& net);

/// Returns dL/dx and accumulates parameter gradients into `grads`.
Matrix affine_backward(const AffineLayer& layer, const LayerCache& cache,
                       const Matrix& d_output, AffineGrads& grads);
Matrix mlp_backward(const Mlp& net, const MlpCache& cache, const Matrix& d_output,
                    MlpGrads& grads);

/// Product-rule gradients for out = a (.) b: returns (d_out (.) b, d_out (.) a).
std::pair<Matrix, Matrix> elementwise_product_backward(const Matrix& a, const Matrix& b,
                                                       const Matrix& d_out);

/// Folds the sign pattern of every ReLU pre-activation into a hash. Two
/// evaluations with different hashes straddle an activation kink, which makes
/// central finite differences unreliable at that coordinate.
std::uint64_t relu_sign_hash(const Mlp& net, const MlpCache& cache,
                             std::uint64_t h = 1469598103934665603ULL);

}  // namespace zsd
