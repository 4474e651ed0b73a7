#include "vital/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vital {

using ad::Tensor;

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

Tensor flatten_rows(const Tensor& features) {
  if (features.rank() < 2) throw DimensionError("expected a batched feature tensor, got " + ad::shape_string(features.shape()));
  const std::size_t n = features.shape()[0];
  return features.rank() == 2 ? features : ad::reshape(features, {n, features.size() / std::max<std::size_t>(n, 1)});
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) { return ad::add(ad::matmul(x, w), b); }

Tensor zero_bias(std::size_t n) { return Tensor::parameter({n}, std::vector<double>(n, 0.0)); }

Tensor stack_masks(std::span<const LabeledMaskedSample> batch) {
  const auto& m0 = batch.front().mask;
  std::vector<double> values;
  values.reserve(batch.size() * m0.values.size());
  for (const auto& s : batch) {
    if (s.mask.height != m0.height || s.mask.width != m0.width) throw DimensionError("masks differ in shape");
    values.insert(values.end(), s.mask.values.begin(), s.mask.values.end());
  }
  return Tensor::constant({batch.size(), m0.height, m0.width}, std::move(values));
}

}  // namespace

Mask Mask::filled(std::size_t height, std::size_t width, double value) {
  return Mask{height, width, std::vector<double>(height * width, value)};
}

MaskPolarity parse_polarity(std::string_view name) {
  if (name == "drop_one") return MaskPolarity::drop_one;
  if (name == "keep_one") return MaskPolarity::keep_one;
  throw ConfigError("unknown mask polarity '" + std::string(name) + "' (valid: drop_one, keep_one)");
}

std::string_view to_string(MaskPolarity polarity) {
  return polarity == MaskPolarity::drop_one ? "drop_one" : "keep_one";
}

std::vector<Mask> canonical_masks(std::size_t height, std::size_t width, std::size_t parts, MaskPolarity polarity) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(parts))));
  if (parts == 0 || side * side != parts || height % side != 0 || width % side != 0) {
    throw ConfigError("canonical_masks: " + std::to_string(height) + "x" + std::to_string(width) +
                      " grid cannot be split into " + std::to_string(parts) + " equal parts");
  }
  const std::size_t ph = height / side;
  const std::size_t pw = width / side;
  const double inside = polarity == MaskPolarity::drop_one ? 0.0 : 1.0;
  std::vector<Mask> masks;
  masks.reserve(parts);
  for (std::size_t part = 0; part < parts; ++part) {
    Mask m = Mask::filled(height, width, 1.0 - inside);
    const std::size_t r0 = (part / side) * ph;
    const std::size_t c0 = (part % side) * pw;
    for (std::size_t i = r0; i < r0 + ph; ++i) {
      for (std::size_t j = c0; j < c0 + pw; ++j) m.values[i * width + j] = inside;
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

FeatureMap apply_mask(const FeatureMap& features, const Mask& mask) {
  Tensor out = ad::broadcast_mul_spatial(features.tensor(), mask.tensor());
  FeatureMap result = features;
  result.values.assign(out.values().begin(), out.values().end());
  return result;
}

double cross_entropy(double p, int y) {
  const double q = clamp_prob(p);
  return -(y * std::log(q) + (1 - y) * std::log(1.0 - q));
}

double cost_sensitive(double p, int y) {
  const double q = clamp_prob(p);
  return -(y * (1.0 - p) * std::log(q) + (1 - y) * p * std::log(1.0 - q));
}

double entropy(double p) {
  const double q = clamp_prob(p);
  return -(q * std::log(q) + (1.0 - q) * std::log(1.0 - q));
}

ParamSet::ParamSet(const ParamSet& other) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) {
    params_.push_back(Tensor::parameter(p.shape(), std::vector<double>(p.values().begin(), p.values().end())));
  }
}

ParamSet& ParamSet::operator=(const ParamSet& other) {
  if (this != &other) *this = ParamSet(other);
  return *this;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

std::vector<Tensor> ParamSet::frozen() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.detach());
  return out;
}

std::vector<double> ParamSet::flat() const {
  std::vector<double> out;
  out.reserve(scalar_count());
  for (const auto& p : params_) out.insert(out.end(), p.values().begin(), p.values().end());
  return out;
}

Generator::Generator(const NetworkShape& shape, std::mt19937_64& rng) : shape_(shape) {
  Tensor w1 = ad::glorot_parameter(shape.feature_size(), shape.generator_hidden, rng);
  Tensor w2 = ad::glorot_parameter(shape.generator_hidden, shape.cells(), rng);
  params_ = ParamSet({w1, zero_bias(shape.generator_hidden), w2, zero_bias(shape.cells())});
}

Tensor Generator::run(const Tensor& features, std::span<const Tensor> p) const {
  Tensor x = flatten_rows(features);
  if (x.shape()[1] != shape_.feature_size()) {
    throw DimensionError("generator expects " + std::to_string(shape_.feature_size()) + " features per sample, got " +
                         ad::shape_string(features.shape()));
  }
  Tensor h = ad::relu(dense(x, p[0], p[1]));
  Tensor m = ad::sigmoid(dense(h, p[2], p[3]));
  return ad::reshape(m, {x.shape()[0], shape_.grid, shape_.grid});
}

Tensor Generator::forward(const Tensor& features) const { return run(features, params_.span()); }

Tensor Generator::predict(const Tensor& features) const {
  auto frozen = params_.frozen();
  return run(features.detach(), frozen);
}

Mask Generator::predict(const FeatureMap& features) const {
  Tensor out = predict(ad::reshape(features.tensor(), {1, features.values.size()}));
  return Mask{shape_.grid, shape_.grid, std::vector<double>(out.values().begin(), out.values().end())};
}

Discriminator::Discriminator(const NetworkShape& shape, std::mt19937_64& rng) : shape_(shape) {
  const std::size_t h = shape.discriminator_hidden;
  Tensor w1 = ad::glorot_parameter(shape.feature_size(), h, rng);
  Tensor w2 = ad::glorot_parameter(h, h, rng);
  Tensor w3 = ad::glorot_parameter(h, 1, rng);
  params_ = ParamSet({w1, zero_bias(h), w2, zero_bias(h), w3, zero_bias(1)});
}

Tensor Discriminator::run(const Tensor& features, std::span<const Tensor> p) const {
  Tensor x = flatten_rows(features);
  if (x.shape()[1] != shape_.feature_size()) {
    throw DimensionError("discriminator expects " + std::to_string(shape_.feature_size()) +
                         " features per sample, got " + ad::shape_string(features.shape()));
  }
  Tensor h1 = ad::relu(dense(x, p[0], p[1]));
  Tensor h2 = ad::relu(dense(h1, p[2], p[3]));
  Tensor out = ad::sigmoid(dense(h2, p[4], p[5]));
  return ad::reshape(out, {x.shape()[0]});
}

Tensor Discriminator::forward(const Tensor& features) const { return run(features, params_.span()); }

Tensor Discriminator::forward_frozen(const Tensor& features) const {
  auto frozen = params_.frozen();
  return run(features, frozen);
}

std::vector<double> Discriminator::probabilities(const Tensor& features) const {
  Tensor p = forward_frozen(features.detach());
  return {p.values().begin(), p.values().end()};
}

double Discriminator::probability(const FeatureMap& features) const {
  return probabilities(ad::reshape(features.tensor(), {1, features.values.size()}))[0];
}

Tensor classification_terms(const Tensor& p, std::span<const int> labels, bool cost_sensitive) {
  const std::size_t n = p.size();
  if (labels.size() != n) throw DimensionError("classification_terms: label count does not match batch");
  std::vector<double> pos(n), neg(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ContractError("labels must be 0 or 1");
    pos[i] = -static_cast<double>(labels[i]);
    neg[i] = -static_cast<double>(1 - labels[i]);
  }
  Tensor log_p = ad::log(ad::clamp(p, kProbEps, 1.0 - kProbEps));
  Tensor one_minus_p = ad::affine(p, -1.0, 1.0);
  Tensor log_q = ad::log(ad::clamp(one_minus_p, kProbEps, 1.0 - kProbEps));
  if (cost_sensitive) {
    log_p = ad::mul(one_minus_p, log_p);  // K1 = 1 - p
    log_q = ad::mul(p, log_q);            // K2 = p
  }
  return ad::add(ad::mul(Tensor::constant({n}, std::move(pos)), log_p),
                 ad::mul(Tensor::constant({n}, std::move(neg)), log_q));
}

Tensor d_objective(const Discriminator& d, const Tensor& features, const Tensor& masks, std::span<const int> labels,
                   bool cost_sensitive, DObjectiveTrace* trace) {
  if (labels.empty()) throw ContractError("d_objective: empty batch");
  Tensor dropped = ad::broadcast_mul_spatial(features, masks);
  Tensor p = d.forward(dropped);
  Tensor terms = classification_terms(p, labels, cost_sensitive);
  Tensor loss = ad::mean(terms);
  if (trace != nullptr) {
    const std::size_t n = labels.size();
    trace->probabilities.assign(p.values().begin(), p.values().end());
    trace->factors.resize(n);
    trace->real_term = trace->fake_term = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double pi = p[i];
      if (labels[i] == 1) {
        trace->factors[i] = cost_sensitive ? 1.0 - pi : 1.0;
        trace->real_term += terms[i] / static_cast<double>(n);
      } else {
        trace->factors[i] = cost_sensitive ? pi : 1.0;
        trace->fake_term += terms[i] / static_cast<double>(n);
      }
    }
  }
  return loss;
}

double d_objective(std::span<const LabeledMaskedSample> batch, const Discriminator& d, bool cost_sensitive,
                   DObjectiveTrace* trace) {
  if (batch.empty()) throw ContractError("d_objective: empty batch");
  std::vector<FeatureMap> maps;
  std::vector<int> labels;
  maps.reserve(batch.size());
  for (const auto& s : batch) {
    maps.push_back(s.features);
    labels.push_back(s.label);
  }
  return d_objective(d, stack_features(maps), stack_masks(batch), labels, cost_sensitive, trace).item();
}

Tensor g_objective(const Generator& g, const Discriminator& d, const Tensor& features, const Tensor& targets,
                   double lambda, LossTerms* terms) {
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  Tensor predicted = g.forward(features);
  if (predicted.shape() != targets.shape()) {
    throw DimensionError("g_objective: predicted masks " + ad::shape_string(predicted.shape()) + " vs targets " +
                         ad::shape_string(targets.shape()));
  }
  Tensor p = d.forward_frozen(ad::broadcast_mul_spatial(features, predicted));
  Tensor adv = ad::mean(ad::log(ad::clamp(ad::affine(p, -1.0, 1.0), kProbEps, 1.0 - kProbEps)));
  Tensor diff = ad::sub(predicted, targets);
  Tensor l2 = ad::mean(ad::mul(diff, diff));
  Tensor loss = ad::add(adv, ad::affine(l2, lambda, 0.0));
  if (terms != nullptr) {
    terms->g_adv_term = adv.item();
    terms->g_l2_term = l2.item();
    terms->lambda = lambda;
  }
  return loss;
}

double g_objective(const FeatureMap& features, const Mask& target, const Discriminator& d, const Generator& g,
                   double lambda, LossTerms* terms) {
  Tensor c = ad::reshape(features.tensor(), {1, features.channels, features.height, features.width});
  Tensor m = ad::reshape(target.tensor(), {1, target.height, target.width});
  return g_objective(g, d, c, m, lambda, terms).item();
}

}  // namespace vital
