#include "vital/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "vital/adversarial.hpp"
#include "vital/rng.hpp"

namespace vital {

namespace {

using ad::Shape;
using ad::Tensor;

std::vector<double> uniform_values(std::size_t n, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

Tensor random_param(Shape shape, double lo, double hi, Rng& rng) {
  const auto n = ad::shape_size(shape);
  return Tensor::parameter(std::move(shape), uniform_values(n, lo, hi, rng));
}

void absorb(GradcheckReport& report, GradcheckResult r) {
  report.max_rel_error = std::max(report.max_rel_error, r.max_rel_error);
  report.passed = report.passed && r.passed;
  report.results.push_back(std::move(r));
}

void check_ops(GradcheckReport& report, Rng& rng, const GradcheckOptions& opts) {
  {
    std::vector<Tensor> p = {random_param({3, 4}, -1, 1, rng), random_param({3, 4}, -1, 1, rng)};
    const Tensor w1 = Tensor::constant({3, 4}, uniform_values(12, -1, 1, rng));
    auto f = [&] {
      return ad::sum(ad::mul(ad::add(ad::mul(p[0], p[1]), ad::sub(p[0], ad::affine(p[1], 0.7, 0.2))), w1));
    };
    absorb(report, check_gradients("op.add_sub_mul_affine", p, f, opts));
  }
  {
    std::vector<Tensor> p = {random_param({5, 3}, -1, 1, rng), random_param({3}, -1, 1, rng)};
    const Tensor w = Tensor::constant({5, 3}, uniform_values(15, -1, 1, rng));
    auto f = [&] { return ad::sum(ad::mul(ad::add(p[0], p[1]), w)); };
    absorb(report, check_gradients("op.add_bias", p, f, opts));
  }
  {
    std::vector<Tensor> p = {random_param({4, 6}, -1, 1, rng), random_param({6, 3}, -1, 1, rng)};
    const Tensor w = Tensor::constant({4, 3}, uniform_values(12, -1, 1, rng));
    auto f = [&] { return ad::sum(ad::mul(ad::matmul(p[0], p[1]), w)); };
    absorb(report, check_gradients("op.matmul", p, f, opts));
  }
  {
    std::vector<Tensor> p = {random_param({2, 3, 3, 3}, 0, 2, rng), random_param({2, 3, 3}, 0, 1, rng)};
    const Tensor w = Tensor::constant({2, 3, 3, 3}, uniform_values(54, -1, 1, rng));
    auto f = [&] { return ad::sum(ad::mul(ad::broadcast_mul_spatial(p[0], p[1]), w)); };
    absorb(report, check_gradients("op.broadcast_mul_spatial", p, f, opts));
  }
  {
    std::vector<Tensor> p = {random_param({3, 3, 3}, 0, 2, rng), random_param({3, 3}, 0, 1, rng)};
    const Tensor w = Tensor::constant({3, 3, 3}, uniform_values(27, -1, 1, rng));
    auto f = [&] { return ad::sum(ad::mul(ad::broadcast_mul_spatial(p[0], p[1]), w)); };
    absorb(report, check_gradients("op.broadcast_mul_spatial_single", p, f, opts));
  }
  {
    // Keep inputs away from the relu kink and the clamp bounds.
    auto away = [&](std::size_t n, double lo, double hi, std::span<const double> kinks) {
      std::vector<double> v = uniform_values(n, lo, hi, rng);
      for (auto& x : v) {
        for (double k : kinks) {
          if (std::abs(x - k) < 1e-2) x = k + 2e-2;
        }
      }
      return v;
    };
    const double relu_kinks[] = {0.0};
    std::vector<Tensor> p = {Tensor::parameter({10}, away(10, -1, 1, relu_kinks))};
    const Tensor w = Tensor::constant({10}, uniform_values(10, -1, 1, rng));
    auto f_relu = [&] { return ad::sum(ad::mul(ad::relu(p[0]), w)); };
    absorb(report, check_gradients("op.relu", p, f_relu, opts));

    std::vector<Tensor> q = {random_param({10}, -4, 4, rng)};
    auto f_sig = [&] { return ad::sum(ad::mul(ad::sigmoid(q[0]), w)); };
    absorb(report, check_gradients("op.sigmoid", q, f_sig, opts));

    std::vector<Tensor> r = {random_param({10}, 0.05, 3, rng)};
    auto f_log = [&] { return ad::sum(ad::mul(ad::log(r[0]), w)); };
    absorb(report, check_gradients("op.log", r, f_log, opts));

    const double clamp_kinks[] = {0.2, 0.8};
    std::vector<Tensor> c = {Tensor::parameter({10}, away(10, 0, 1, clamp_kinks))};
    auto f_clamp = [&] { return ad::sum(ad::mul(ad::clamp(c[0], 0.2, 0.8), w)); };
    absorb(report, check_gradients("op.clamp", c, f_clamp, opts));
  }
  {
    std::vector<Tensor> p = {random_param({2, 3}, -1, 1, rng), random_param({4, 3}, -1, 1, rng)};
    const Tensor w = Tensor::constant({3, 2}, uniform_values(6, -1, 1, rng));
    auto f = [&] {
      const Tensor joined = ad::reshape(ad::concat({p[0], p[1]}), {3, 6});
      return ad::add(ad::mean(ad::matmul(joined, ad::reshape(ad::concat({w, w}), {6, 2}))), ad::sum(p[0]));
    };
    absorb(report, check_gradients("op.concat_reshape_mean_sum", p, f, opts));
  }
}

NetworkShape random_shape(Rng& rng) {
  std::uniform_int_distribution<int> ch(1, 4);
  std::uniform_int_distribution<int> grid(2, 3);
  std::uniform_int_distribution<int> hidden(2, 8);
  NetworkShape s;
  s.channels = static_cast<std::size_t>(ch(rng));
  s.grid = static_cast<std::size_t>(grid(rng));
  s.generator_hidden = static_cast<std::size_t>(hidden(rng));
  s.discriminator_hidden = static_cast<std::size_t>(hidden(rng));
  return s;
}

// Zero-initialized biases would leave every relu on the same side; jitter all
// parameters so both regimes are exercised.
void jitter_params(ParamSet& params, Rng& rng) {
  std::normal_distribution<double> n(0.0, 0.15);
  for (auto& t : params.span()) {
    std::vector<double> v(t.values().begin(), t.values().end());
    for (auto& x : v) x += n(rng);
    t.assign(std::move(v));
  }
}

void check_configuration(GradcheckReport& report, std::uint64_t seed, int index, const GradcheckOptions& opts) {
  Rng rng(derive_seed(seed, "gradcheck", static_cast<std::uint64_t>(index)));
  const NetworkShape shape = random_shape(rng);
  Generator g(shape, rng);
  Discriminator d(shape, rng);
  jitter_params(g.params(), rng);
  jitter_params(d.params(), rng);

  const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 6)(rng);
  const std::size_t h = shape.grid;
  const Tensor features = Tensor::constant({n, shape.channels, h, h}, uniform_values(n * shape.channels * h * h, 0, 2, rng));
  const Tensor masks = Tensor::constant({n, h, h}, uniform_values(n * h * h, 0, 1, rng));
  const Tensor targets = Tensor::constant({n, h, h}, uniform_values(n * h * h, 0, 1, rng));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2 == 0 ? 1 : rng() % 2);

  const std::string tag = "config" + std::to_string(index);
  for (bool cs : {false, true}) {
    auto f = [&] { return d_objective(d, features, masks, labels, cs); };
    absorb(report, check_gradients(tag + (cs ? ".d_objective.cost_sensitive" : ".d_objective.cross_entropy"),
                                   d.params().span(), f, opts));
  }
  for (double lambda : {0.0, 1.0, 10.0}) {
    auto f = [&] { return g_objective(g, d, features, targets, lambda); };
    absorb(report, check_gradients(tag + ".g_objective.lambda" + std::to_string(static_cast<int>(lambda)),
                                   g.params().span(), f, opts));
  }
}

}  // namespace

GradcheckResult check_gradients(const std::string& name, std::span<Tensor> params, const std::function<Tensor()>& loss,
                                const GradcheckOptions& opts) {
  GradcheckResult r;
  r.name = name;
  const auto grads = ad::backward(loss());
  for (auto& p : params) {
    const std::vector<double> analytic = grads.of(p);
    std::vector<double> values(p.values().begin(), p.values().end());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + opts.step;
      p.assign(values);
      const double up = loss().item();
      values[i] = orig - opts.step;
      p.assign(values);
      const double down = loss().item();
      values[i] = orig;
      p.assign(values);
      const double numeric = (up - down) / (2.0 * opts.step);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), opts.denominator_floor});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      r.max_rel_error = std::max(r.max_rel_error, rel);
      ++r.components;
    }
  }
  r.passed = r.max_rel_error < opts.tolerance;
  return r;
}

GradcheckReport run_gradcheck(std::uint64_t seed, int configurations, const GradcheckOptions& opts) {
  GradcheckReport report;
  Rng rng(derive_seed(seed, "gradcheck-ops"));
  check_ops(report, rng, opts);
  for (int i = 0; i < configurations; ++i) check_configuration(report, seed, i, opts);
  report.configurations = configurations;
  return report;
}

}  // namespace vital
