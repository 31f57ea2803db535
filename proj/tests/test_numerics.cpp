#include <doctest.h>

#include <array>
#include <cmath>

#include "zsd/error.hpp"
#include "zsd/gradcheck.hpp"
#include "zsd/matrix.hpp"
#include "zsd/mlp.hpp"
#include "zsd/sgd.hpp"

using namespace zsd;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = dist(rng);
  return m;
}

Mlp identity_single_layer(std::size_t dim) {
  Mlp net;
  AffineLayer layer;
  layer.weights = Matrix(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) layer.weights(i, i) = 1.0;
  layer.bias = Matrix(1, dim);
  layer.activation = Activation::identity;
  net.layers.push_back(layer);
  return net;
}

}  // namespace

TEST_CASE("matrix products agree with transpose forms") {
  Rng rng(3);
  const Matrix a = random_matrix(4, 5, rng);
  const Matrix b = random_matrix(5, 3, rng);
  const Matrix ab = matmul(a, b);
  CHECK(ab == matmul_bt(a, transpose(b)));
  CHECK(ab == matmul_at(transpose(a), b));
}

TEST_CASE("identity layer forwards its input") {
  const Mlp net = identity_single_layer(3);
  const Matrix x = Matrix::from_rows({{1.0, -2.0, 0.5}, {4.0, 0.0, -1.0}});
  CHECK(mlp_forward(net, x) == x);
}

TEST_CASE("relu layer clamps negatives") {
  Mlp net = identity_single_layer(2);
  net.layers[0].activation = Activation::relu;
  const Matrix y = mlp_forward(net, Matrix::from_rows({{-1.0, 2.0}}));
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == 2.0);
}

TEST_CASE("sigmoid layer maps zero pre-activation to one half") {
  Mlp net = identity_single_layer(2);
  net.layers[0].activation = Activation::sigmoid;
  const Matrix y = mlp_forward(net, Matrix(1, 2));
  CHECK(y(0, 0) == doctest::Approx(0.5));
  CHECK(y(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("single identity layer backward matches the affine derivative") {
  const Mlp net = identity_single_layer(3);
  Rng rng(11);
  const Matrix x = random_matrix(2, 3, rng);
  const Matrix g = random_matrix(2, 3, rng);

  MlpCache cache;
  mlp_forward(net, x, &cache);
  MlpGrads grads = zero_grads(net);
  const Matrix dx = mlp_backward(net, cache, g, grads);

  CHECK(grads.layers[0].weights == matmul_at(g, x));  // dW = g^T x
  CHECK(dx == matmul(g, net.layers[0].weights));      // dx = g W
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(grads.layers[0].bias(0, j) == doctest::Approx(g(0, j) + g(1, j)));
}

TEST_CASE("relu blocks gradient through negative pre-activations") {
  Mlp net = identity_single_layer(2);
  net.layers[0].activation = Activation::relu;
  MlpCache cache;
  mlp_forward(net, Matrix::from_rows({{-1.0, 2.0}}), &cache);
  MlpGrads grads = zero_grads(net);
  const Matrix dx = mlp_backward(net, cache, Matrix::from_rows({{1.0, 1.0}}), grads);
  CHECK(dx(0, 0) == 0.0);
  CHECK(dx(0, 1) == 1.0);
}

TEST_CASE("two-layer net gradients match central finite differences") {
  Rng rng(7);
  const std::array<std::size_t, 2> widths{5, 2};
  const std::array<Activation, 2> acts{Activation::relu, Activation::sigmoid};
  Mlp net = make_mlp(4, widths, acts, rng);
  const Matrix x = random_matrix(3, 4, rng);

  // scalar loss: sum of squares of the outputs
  MlpCache cache;
  Matrix y = mlp_forward(net, x, &cache);
  MlpGrads grads = zero_grads(net);
  Matrix dy = y;
  scale_in_place(dy, 2.0);
  mlp_backward(net, cache, dy, grads);

  std::vector<NamedParam> params;
  std::vector<const Matrix*> analytic;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    params.push_back({"w" + std::to_string(i), &net.layers[i].weights});
    params.push_back({"b" + std::to_string(i), &net.layers[i].bias});
    analytic.push_back(&grads.layers[i].weights);
    analytic.push_back(&grads.layers[i].bias);
  }

  const auto loss = [&]() -> std::pair<double, std::uint64_t> {
    MlpCache c;
    const Matrix out = mlp_forward(net, x, &c);
    double value = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) value += out[i] * out[i];
    return {value, relu_sign_hash(net, c)};
  };

  const GradCheckReport report = finite_diff_check(params, analytic, loss);
  CHECK(report.coords_checked > 0);
  CHECK(report.max_rel_error < 1e-5);
}

TEST_CASE("elementwise product backward follows the product rule") {
  Rng rng(5);
  const Matrix ones(2, 3, 1.0);
  const Matrix d_out = random_matrix(2, 3, rng);

  SUBCASE("both inputs all ones") {
    const auto [da, db] = elementwise_product_backward(ones, ones, d_out);
    CHECK(da == d_out);
    CHECK(db == d_out);
  }
  SUBCASE("zero first factor kills the second gradient") {
    const Matrix zeros(2, 3, 0.0);
    const auto [da, db] = elementwise_product_backward(zeros, ones, d_out);
    CHECK(da == d_out);
    CHECK(db == zeros);
  }
  SUBCASE("random factors match finite differences") {
    Matrix a = random_matrix(2, 3, rng);
    Matrix b = random_matrix(2, 3, rng);
    const auto [da, db] = elementwise_product_backward(a, b, d_out);
    const auto loss = [&]() {
      double v = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) v += a[i] * b[i] * d_out[i];
      return v;
    };
    const double eps = 1e-6;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double saved = a[i];
      a[i] = saved + eps;
      const double plus = loss();
      a[i] = saved - eps;
      const double minus = loss();
      a[i] = saved;
      CHECK(da[i] == doctest::Approx((plus - minus) / (2 * eps)).epsilon(1e-6));
    }
  }
}

TEST_CASE("sgd with zero momentum is vanilla gradient descent") {
  Matrix p(1, 2);
  p(0, 0) = 1.0;
  p(0, 1) = -2.0;
  Matrix g(1, 2);
  g(0, 0) = 0.5;
  g(0, 1) = -1.0;

  SgdState sgd({0.1, 0.0});
  Matrix* params[] = {&p};
  const Matrix* grads[] = {&g};
  sgd.step(params, grads);
  CHECK(p(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5));
  CHECK(p(0, 1) == doctest::Approx(-2.0 + 0.1 * 1.0));
}

TEST_CASE("sgd leaves parameters alone when gradient and velocity are zero") {
  Matrix p(1, 3, 2.5);
  Matrix g(1, 3, 0.0);
  SgdState sgd({0.01, 0.9});
  Matrix* params[] = {&p};
  const Matrix* grads[] = {&g};
  sgd.step(params, grads);
  CHECK(p == Matrix(1, 3, 2.5));
}

TEST_CASE("two momentum steps with constant gradient unroll as expected") {
  // v1 = -eta g, v2 = mu v1 - eta g => total change -eta g (2 + mu)
  Matrix p(1, 1, 0.0);
  Matrix g(1, 1, 1.0);
  SgdState sgd({0.01, 0.9});
  Matrix* params[] = {&p};
  const Matrix* grads[] = {&g};
  sgd.step(params, grads);
  sgd.step(params, grads);
  CHECK(p(0, 0) == doctest::Approx(-0.01 - 0.019).epsilon(1e-12));
}

TEST_CASE("sgd rejects non-finite gradients") {
  Matrix p(1, 1, 0.0);
  Matrix g(1, 1, std::nan(""));
  SgdState sgd;
  Matrix* params[] = {&p};
  const Matrix* grads[] = {&g};
  CHECK_THROWS_AS(sgd.step(params, grads), Error);
}

TEST_CASE("mlp forward is deterministic for identical inputs") {
  Rng rng(13);
  const std::array<std::size_t, 2> widths{6, 3};
  const std::array<Activation, 2> acts{Activation::relu, Activation::identity};
  const Mlp net = make_mlp(5, widths, acts, rng);
  const Matrix x = random_matrix(4, 5, rng);
  CHECK(mlp_forward(net, x) == mlp_forward(net, x));
}
