#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vital/gradcheck.hpp"
#include "vital/tensor.hpp"

using namespace vital;
using namespace vital::ad;

TEST_CASE("broadcast_mul_spatial with all-ones and all-zeros masks") {
  Rng rng(7);
  const auto values = testutil::uniform(2 * 3 * 3, -1, 1, rng);
  const Tensor c = Tensor::constant({2, 3, 3}, values);
  const Tensor same = broadcast_mul_spatial(c, Tensor::ones({3, 3}));
  CHECK(std::vector<double>(same.values().begin(), same.values().end()) == values);
  const Tensor zero = broadcast_mul_spatial(c, Tensor::zeros({3, 3}));
  for (double v : zero.values()) CHECK(v == 0.0);
}

TEST_CASE("broadcast_mul_spatial indexes out[k][i][j] = map[k][i][j] * mask[i][j]") {
  Rng rng(8);
  const auto m = testutil::uniform(3 * 2 * 4, -1, 1, rng);
  const auto w = testutil::uniform(2 * 4, 0, 1, rng);
  const Tensor out = broadcast_mul_spatial(Tensor::constant({3, 2, 4}, m), Tensor::constant({2, 4}, w));
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 4; ++j) CHECK(out[(k * 2 + i) * 4 + j] == m[(k * 2 + i) * 4 + j] * w[i * 4 + j]);
}

TEST_CASE("sigmoid(0) is one half") { CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5); }

TEST_CASE("shape mismatch reports both shapes") {
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({3, 2});
  try {
    (void)add(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[3x2]") != std::string::npos);
  }
  CHECK_THROWS_AS(matmul(a, a), DimensionError);
  CHECK_THROWS_AS(broadcast_mul_spatial(Tensor::zeros({2, 3, 3}), Tensor::zeros({2, 2})), DimensionError);
  CHECK_THROWS_AS(reshape(a, {4}), DimensionError);
}

TEST_CASE("matmul and reductions") {
  const Tensor a = Tensor::constant({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b = Tensor::constant({3, 2}, {7, 8, 9, 10, 11, 12});
  const Tensor c = matmul(a, b);
  CHECK(c.shape() == Shape{2, 2});
  CHECK(c[0] == 58);
  CHECK(c[1] == 64);
  CHECK(c[2] == 139);
  CHECK(c[3] == 154);
  CHECK(sum(a).item() == 21);
  CHECK(mean(a).item() == 3.5);
  const Tensor j = concat({a, Tensor::constant({1, 3}, {7, 8, 9})});
  CHECK(j.shape() == Shape{3, 3});
  CHECK(j[8] == 9);
}

TEST_CASE("backward of sum is all ones") {
  const Tensor x = Tensor::parameter({2, 2}, {0.3, -1, 4, 2});
  const auto g = backward(sum(x)).of(x);
  CHECK(g == std::vector<double>{1, 1, 1, 1});
}

TEST_CASE("backward of sum(x*x) at 2 is 4") {
  const Tensor x = Tensor::parameter({1}, {2.0});
  CHECK(backward(sum(mul(x, x))).of(x) == std::vector<double>{4.0});
}

TEST_CASE("backward rejects a non-scalar loss") {
  const Tensor x = Tensor::parameter({3}, {1, 2, 3});
  CHECK_THROWS_AS(backward(x), ContractError);
}

TEST_CASE("independent parameter gets an exactly zero gradient") {
  const Tensor x = Tensor::parameter({2}, {1, 2});
  const Tensor y = Tensor::parameter({2}, {3, 4});
  const auto g = backward(sum(mul(x, x)));
  CHECK(g.of(y) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("a reused node accumulates gradient from every use") {
  const Tensor x = Tensor::parameter({1}, {3.0});
  const Tensor y = add(mul(x, x), x);  // x^2 + x
  CHECK(backward(sum(y)).of(x)[0] == doctest::Approx(7.0));
}

TEST_CASE("random two-layer network matches finite differences") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Tensor> p = {Tensor::parameter({5, 4}, testutil::uniform(20, -1, 1, rng)),
                             Tensor::parameter({4}, testutil::uniform(4, -0.5, 0.5, rng)),
                             Tensor::parameter({4, 1}, testutil::uniform(4, -1, 1, rng))};
    const Tensor x = Tensor::constant({3, 5}, testutil::uniform(15, -1, 1, rng));
    auto f = [&] { return mean(log(sigmoid(matmul(relu(add(matmul(x, p[0]), p[1])), p[2])))); };
    const auto r = check_gradients("two_layer", p, f);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("forward ops are pure") {
  Rng rng(3);
  const auto v = testutil::uniform(12, -2, 2, rng);
  const Tensor a = Tensor::constant({3, 4}, v);
  const Tensor r1 = sigmoid(matmul(a, reshape(a, {4, 3})));
  const Tensor r2 = sigmoid(matmul(a, reshape(a, {4, 3})));
  CHECK(std::equal(r1.values().begin(), r1.values().end(), r2.values().begin()));
}

TEST_CASE("log rejects nonpositive input") { CHECK_THROWS_AS(log(Tensor::scalar(0.0)), ContractError); }

TEST_CASE("sgd: p=1, g=1, lr=0.1 gives 0.9") {
  std::vector<Tensor> p = {Tensor::parameter({1}, {1.0})};
  const std::vector<std::vector<double>> g = {{1.0}};
  Sgd opt({0.1, 0.0, 0.0});
  opt.step(p, g);
  CHECK(p[0][0] == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("sgd: zero gradient leaves parameters unchanged") {
  std::vector<Tensor> p = {Tensor::parameter({3}, {1.5, -2, 0.25})};
  Sgd opt({0.1, 0.9, 0.0});
  opt.step(p, std::vector<std::vector<double>>{{0, 0, 0}});
  CHECK(std::vector<double>(p[0].values().begin(), p[0].values().end()) == std::vector<double>{1.5, -2, 0.25});
}

TEST_CASE("sgd: two momentum steps follow the recurrence") {
  const double lr = 0.1, mu = 0.9, g = 0.5, p0 = 2.0;
  std::vector<Tensor> p = {Tensor::parameter({1}, {p0})};
  Sgd opt({lr, mu, 0.0});
  opt.step(p, std::vector<std::vector<double>>{{g}});
  opt.step(p, std::vector<std::vector<double>>{{g}});
  const double v1 = g;
  const double v2 = mu * v1 + g;
  CHECK(p[0][0] == doctest::Approx(p0 - lr * v1 - lr * v2).epsilon(1e-15));
}

TEST_CASE("sgd: weight decay adds wd * p to the gradient") {
  std::vector<Tensor> p = {Tensor::parameter({1}, {2.0})};
  sgd_step(p, backward(sum(mul(p[0], Tensor::constant({1}, {0.0})))), {0.1, 0.0, 0.5});
  CHECK(p[0][0] == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0));
}

TEST_CASE("sgd config validation") {
  CHECK_THROWS_AS(SgdConfig({0.1, 1.0, 0.0}).validate(), ConfigError);
  CHECK_THROWS_AS(SgdConfig({-0.1, 0.0, 0.0}).validate(), ConfigError);
  CHECK_THROWS_AS(SgdConfig({0.1, 0.0, -1.0}).validate(), ConfigError);
}

TEST_CASE("assign keeps earlier graphs intact") {
  Tensor x = Tensor::parameter({1}, {2.0});
  const Tensor y = mul(x, x);
  x.assign({5.0});
  CHECK(y.item() == 4.0);
  CHECK(mul(x, x).item() == 25.0);
}

TEST_CASE("glorot init stays inside its bound") {
  Rng rng(1);
  const Tensor w = glorot_parameter(30, 10, rng);
  const double a = std::sqrt(6.0 / 40.0);
  for (double v : w.values()) CHECK(std::abs(v) <= a);
  CHECK(w.requires_grad());
}
