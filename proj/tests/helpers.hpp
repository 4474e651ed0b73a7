#pragma once

#include <random>
#include <vector>

#include "vital/adversarial.hpp"
#include "vital/features.hpp"
#include "vital/rng.hpp"

namespace testutil {

inline std::vector<double> uniform(std::size_t n, double lo, double hi, vital::Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline vital::FeatureMap random_features(std::size_t k, std::size_t grid, vital::Rng& rng, double hi = 2.0) {
  return {k, grid, grid, uniform(k * grid * grid, 0.0, hi, rng)};
}

inline vital::NetworkShape small_shape(std::size_t channels = 4) {
  vital::NetworkShape s;
  s.channels = channels;
  s.grid = 3;
  s.generator_hidden = 8;
  s.discriminator_hidden = 8;
  return s;
}

/// Sets every parameter of a network to the given values, tensor by tensor.
template <class Net>
void set_params(Net& net, double weight_value, double last_bias) {
  auto params = net.params().span();
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<double> v(params[i].size(), weight_value);
    if (i + 1 == params.size()) std::fill(v.begin(), v.end(), last_bias);
    params[i].assign(std::move(v));
  }
}

}  // namespace testutil
