#include "zsd/mlp.hpp"

#include <cmath>

#include "zsd/error.hpp"

namespace zsd {

double apply_activation(Activation act, double x) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

// Derivative with respect to the pre-activation. ReLU subgradient at 0 is 0.
static double activation_derivative(Activation act, double pre) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-pre));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

AffineLayer make_affine_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  require(in > 0 && out > 0, ErrorCode::invalid_argument, "layer dims must be positive");
  AffineLayer layer;
  layer.weights = Matrix(out, in);
  layer.bias = Matrix(1, out);
  layer.activation = act;
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights[i] = dist(rng);
  return layer;
}

Mlp make_mlp(std::size_t in, std::span<const std::size_t> widths,
             std::span<const Activation> activations, Rng& rng) {
  require(!widths.empty() && widths.size() == activations.size(),
          ErrorCode::invalid_argument, "make_mlp needs one activation per layer");
  Mlp net;
  std::size_t prev = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    net.layers.push_back(make_affine_layer(prev, widths[i], activations[i], rng));
    prev = widths[i];
  }
  return net;
}

Matrix affine_forward(const AffineLayer& layer, const Matrix& x, LayerCache* cache) {
  require(x.cols() == layer.in_dim(), ErrorCode::shape_mismatch,
          "affine_forward input width mismatch");
  Matrix pre = matmul_bt(x, layer.weights);
  for (std::size_t i = 0; i < pre.rows(); ++i)
    for (std::size_t j = 0; j < pre.cols(); ++j) pre(i, j) += layer.bias(0, j);
  if (cache) {
    cache->input = x;
    cache->pre_activation = pre;
  }
  Matrix out = pre;
  if (layer.activation != Activation::identity)
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = apply_activation(layer.activation, out[i]);
  return out;
}

Matrix mlp_forward(const Mlp& net, const Matrix& x, MlpCache* cache) {
  if (cache) {
    cache->layers.clear();
    cache->layers.resize(net.layers.size());
  }
  Matrix current = x;
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    current = affine_forward(net.layers[i], current,
                             cache ? &cache->layers[i] : nullptr);
  return current;
}

AffineGrads zero_grads(const AffineLayer& layer) {
  return {Matrix(layer.weights.rows(), layer.weights.cols()), Matrix(1, layer.bias.cols())};
}

MlpGrads zero_grads(const Mlp& net) {
  MlpGrads grads;
  grads.layers.reserve(net.layers.size());
  for (const auto& layer : net.layers) grads.layers.push_back(zero_grads(layer));
  return grads;
}

Matrix affine_backward(const AffineLayer& layer, const LayerCache& cache,
                       const Matrix& d_output, AffineGrads& grads) {
  require(d_output.same_shape(cache.pre_activation), ErrorCode::shape_mismatch,
          "affine_backward output gradient shape mismatch");
  Matrix d_pre = d_output;
  if (layer.activation != Activation::identity)
    for (std::size_t i = 0; i < d_pre.size(); ++i)
      d_pre[i] *= activation_derivative(layer.activation, cache.pre_activation[i]);

  add_in_place(grads.weights, matmul_at(d_pre, cache.input));
  for (std::size_t i = 0; i < d_pre.rows(); ++i)
    for (std::size_t j = 0; j < d_pre.cols(); ++j) grads.bias(0, j) += d_pre(i, j);
  return matmul(d_pre, layer.weights);
}

Matrix mlp_backward(const Mlp& net, const MlpCache& cache, const Matrix& d_output,
                    MlpGrads& grads) {
  require(cache.layers.size() == net.layers.size(), ErrorCode::shape_mismatch,
          "mlp_backward cache does not match network");
  Matrix current = d_output;
  for (std::size_t i = net.layers.size(); i-- > 0;)
    current = affine_backward(net.layers[i], cache.layers[i], current, grads.layers[i]);
  return current;
}

std::pair<Matrix, Matrix> elementwise_product_backward(const Matrix& a, const Matrix& b,
                                                       const Matrix& d_out) {
  require(a.same_shape(b) && a.same_shape(d_out), ErrorCode::shape_mismatch,
          "elementwise_product_backward shape mismatch");
  return {hadamard(d_out, b), hadamard(d_out, a)};
}

std::uint64_t relu_sign_hash(const Mlp& net, const MlpCache& cache, std::uint64_t h) {
  constexpr std::uint64_t kPrime = 1099511628211ULL;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (net.layers[i].activation != Activation::relu) continue;
    const Matrix& pre = cache.layers[i].pre_activation;
    for (std::size_t j = 0; j < pre.size(); ++j) {
      h ^= pre[j] > 0.0 ? 0x9eULL : 0x31ULL;
      h *= kPrime;
    }
  }
  return h;
}

}  // namespace zsd
