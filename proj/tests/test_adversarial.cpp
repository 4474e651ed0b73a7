#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "vital/adversarial.hpp"

using namespace vital;
using ad::Tensor;

TEST_CASE("drop_one canonical masks") {
  const auto masks = canonical_masks(3, 3, 9, MaskPolarity::drop_one);
  REQUIRE(masks.size() == 9);
  for (std::size_t k = 0; k < 9; ++k) {
    double total = 0.0;
    for (std::size_t c = 0; c < 9; ++c) {
      CHECK(masks[k].values[c] == (c == k ? 0.0 : 1.0));
      total += masks[k].values[c];
    }
    CHECK(total == 8.0);
  }
  for (std::size_t c = 0; c < 9; ++c) {
    double lo = 1.0;
    for (const auto& m : masks) lo = std::min(lo, m.values[c]);
    CHECK(lo == 0.0);
  }
}

TEST_CASE("keep_one canonical masks sum to all ones") {
  const auto masks = canonical_masks(3, 3, 9, MaskPolarity::keep_one);
  for (std::size_t c = 0; c < 9; ++c) {
    double s = 0.0;
    for (const auto& m : masks) s += m.values[c];
    CHECK(s == 1.0);
  }
}

TEST_CASE("canonical masks on a 6x6 grid cover 2x2 blocks") {
  const auto masks = canonical_masks(6, 6, 9, MaskPolarity::drop_one);
  CHECK(masks[4].at(2, 2) == 0.0);
  CHECK(masks[4].at(3, 3) == 0.0);
  CHECK(masks[4].at(1, 2) == 1.0);
  CHECK(std::count(masks[4].values.begin(), masks[4].values.end(), 0.0) == 4);
}

TEST_CASE("indivisible grid is a configuration error") {
  CHECK_THROWS_AS(canonical_masks(4, 4, 9, MaskPolarity::drop_one), ConfigError);
  CHECK_THROWS_AS(canonical_masks(3, 3, 8, MaskPolarity::drop_one), ConfigError);
  CHECK_THROWS_AS(parse_polarity("sideways"), ConfigError);
}

TEST_CASE("apply_mask examples") {
  Rng rng(1);
  const auto c = testutil::random_features(2, 3, rng);
  CHECK(apply_mask(c, Mask::ones(3, 3)) == c);
  for (double v : apply_mask(c, Mask::filled(3, 3, 0.0)).values) CHECK(v == 0.0);

  FeatureMap ones{2, 3, 3, std::vector<double>(18, 1.0)};
  Mask m = Mask::ones(3, 3);
  m.values[0] = 0.0;
  const auto out = apply_mask(ones, m);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(out.at(k, i, j) == ((i == 0 && j == 0) ? 0.0 : 1.0));
  CHECK_THROWS_AS(apply_mask(c, Mask::ones(2, 2)), DimensionError);
}

TEST_CASE("apply_mask is linear in C") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto c1 = testutil::random_features(3, 3, rng);
    const auto c2 = testutil::random_features(3, 3, rng);
    Mask m{3, 3, testutil::uniform(9, 0, 1, rng)};
    const double a = 1.7, b = -0.4;
    FeatureMap mix = c1;
    for (std::size_t i = 0; i < mix.values.size(); ++i) mix.values[i] = a * c1.values[i] + b * c2.values[i];
    const auto lhs = apply_mask(mix, m);
    const auto r1 = apply_mask(c1, m), r2 = apply_mask(c2, m);
    for (std::size_t i = 0; i < lhs.values.size(); ++i) {
      CHECK(lhs.values[i] == doctest::Approx(a * r1.values[i] + b * r2.values[i]).epsilon(1e-13));
    }
  }
}

TEST_CASE("cross entropy examples") {
  CHECK(cross_entropy(1.0, 1) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(std::abs(cross_entropy(0.5, 1) - std::log(2.0)) < 1e-12);
  CHECK(std::abs(cross_entropy(0.5, 0) - std::log(2.0)) < 1e-12);
  CHECK(std::abs(cross_entropy(0.1, 0) - 0.105360515657826) < 1e-12);
  CHECK(std::isfinite(cross_entropy(0.0, 1)));
  CHECK(cross_entropy(0.0, 1) == doctest::Approx(-std::log(kProbEps)));
}

TEST_CASE("cost-sensitive examples") {
  CHECK(std::abs(cost_sensitive(0.5, 1) - 0.5 * std::log(2.0)) < 1e-12);
  CHECK(std::abs(cost_sensitive(0.1, 0) - 0.1 * -std::log(0.9)) < 1e-12);
  CHECK(std::abs(cost_sensitive(0.1, 0) * 10.0 - cross_entropy(0.1, 0)) < 1e-12);
  CHECK(std::abs(cost_sensitive(0.9, 0) - 0.9 * -std::log(0.1)) < 1e-12);
  CHECK(std::abs(cost_sensitive(0.9, 0) - 2.0723265836946) < 1e-9);
}

TEST_CASE("cost-sensitive never exceeds cross entropy") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double p = u(rng);
    for (int y : {0, 1}) CHECK(cost_sensitive(p, y) <= cross_entropy(p, y));
  }
}

TEST_CASE("entropy examples and shape") {
  CHECK(std::abs(entropy(0.5) - std::log(2.0)) < 1e-12);
  CHECK(entropy(0.0) < 1e-5);
  CHECK(entropy(1.0) < 1e-5);
  CHECK(entropy(0.3) == doctest::Approx(entropy(0.7)).epsilon(1e-14));
  for (double p = 0.01; p < 1.0; p += 0.01) {
    CHECK(entropy(p) <= std::log(2.0));
    const double h = 1e-3;
    if (p > h && p < 1 - h) CHECK(entropy(p - h) + entropy(p + h) <= 2 * entropy(p) + 1e-15);  // concave
  }
}

TEST_CASE("generator and discriminator outputs lie strictly inside (0, 1)") {
  Rng rng(4);
  const auto shape = testutil::small_shape();
  const Generator g(shape, rng);
  const Discriminator d(shape, rng);
  const Tensor x = Tensor::constant({5, 4, 3, 3}, testutil::uniform(5 * 36, 0, 3, rng));
  const Tensor masks = g.predict(x);
  for (double v : masks.values()) CHECK_MESSAGE((v > 0.0 && v < 1.0), v);
  for (double v : d.probabilities(x)) CHECK_MESSAGE((v > 0.0 && v < 1.0), v);
  CHECK(g.predict(x).shape() == ad::Shape{5, 3, 3});
  CHECK_THROWS_AS(d.probabilities(Tensor::zeros({2, 5, 3, 3})), DimensionError);
}

TEST_CASE("parameter sets copy deeply") {
  Rng rng(5);
  Discriminator d(testutil::small_shape(), rng);
  Discriminator copy = d;
  CHECK(copy == d);
  testutil::set_params(copy, 0.0, 0.0);
  CHECK_FALSE(copy == d);
}

TEST_CASE("d_objective examples") {
  Rng rng(6);
  Discriminator d(testutil::small_shape(), rng);
  testutil::set_params(d, 0.0, 0.0);  // D(x) = sigmoid(0) = 0.5
  const Tensor x = Tensor::constant({1, 4, 3, 3}, testutil::uniform(36, 0, 1, rng));
  const Tensor m = Tensor::ones({1, 3, 3});
  const std::vector<int> pos = {1};
  CHECK(std::abs(d_objective(d, x, m, pos, false).item() - std::log(2.0)) < 1e-12);
  CHECK(std::abs(d_objective(d, x, m, pos, true).item() - 0.5 * std::log(2.0)) < 1e-12);
  CHECK_THROWS_AS(d_objective(d, x, m, std::span<const int>{}, false), ContractError);
}

TEST_CASE("confident correct D has near-zero loss") {
  Rng rng(7);
  Discriminator d(testutil::small_shape(), rng);
  testutil::set_params(d, 0.0, 40.0);  // p ~ 1 everywhere
  const Tensor x = Tensor::constant({3, 4, 3, 3}, testutil::uniform(108, 0, 1, rng));
  const std::vector<int> labels = {1, 1, 1};
  CHECK(d_objective(d, x, Tensor::ones({3, 3, 3}), labels, false).item() < 1e-6);
  CHECK(d_objective(d, x, Tensor::ones({3, 3, 3}), labels, true).item() < 1e-6);
}

TEST_CASE("d_objective trace exposes the modulating factors") {
  Rng rng(8);
  const auto shape = testutil::small_shape();
  Discriminator d(shape, rng);
  const Tensor x = Tensor::constant({6, 4, 3, 3}, testutil::uniform(6 * 36, 0, 2, rng));
  const Tensor m = Tensor::constant({6, 3, 3}, testutil::uniform(54, 0, 1, rng));
  const std::vector<int> labels = {1, 0, 1, 0, 0, 1};
  DObjectiveTrace tr;
  const double loss = d_objective(d, x, m, labels, true, &tr).item();
  const auto p = d.probabilities(ad::broadcast_mul_spatial(x, m));
  double manual = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(tr.probabilities[i] == p[i]);
    CHECK(tr.factors[i] == (labels[i] ? 1.0 - p[i] : p[i]));
    manual += labels[i] ? cost_sensitive(p[i], 1) : cost_sensitive(p[i], 0);
  }
  CHECK(loss == doctest::Approx(manual / 6).epsilon(1e-12));
  CHECK(tr.real_term + tr.fake_term == doctest::Approx(loss).epsilon(1e-12));
}

TEST_CASE("g_objective examples") {
  Rng rng(9);
  const auto shape = testutil::small_shape();
  Generator g(shape, rng);
  Discriminator d(shape, rng);
  const auto c = testutil::random_features(4, 3, rng);
  const Mask pred = g.predict(c);

  LossTerms t;
  const double same = g_objective(c, pred, d, g, 1.0, &t);
  CHECK(t.g_l2_term == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(same == doctest::Approx(t.g_adv_term));

  Mask off = pred;
  off.values[4] = pred.values[4] + 0.5;
  g_objective(c, off, d, g, 1.0, &t);
  CHECK(t.g_l2_term == doctest::Approx(0.25 / 9).epsilon(1e-12));

  const double zero_lambda = g_objective(c, off, d, g, 0.0, &t);
  CHECK(zero_lambda == doctest::Approx(t.g_adv_term).epsilon(1e-15));
  const double p = d.probability(apply_mask(c, pred));
  CHECK(t.g_adv_term == doctest::Approx(std::log(1.0 - p)).epsilon(1e-12));
  CHECK(t.g_l2_term >= 0.0);
  CHECK_THROWS_AS(g_objective(c, off, d, g, -1.0), ConfigError);
}

TEST_CASE("classification terms reject bad labels") {
  const Tensor p = Tensor::constant({2}, {0.3, 0.6});
  const std::vector<int> bad = {1, 2};
  CHECK_THROWS_AS(classification_terms(p, bad, false), ContractError);
  const std::vector<int> short_labels = {1};
  CHECK_THROWS_AS(classification_terms(p, short_labels, false), DimensionError);
}
