#pragma once

// Masks, the spatial dropout of feature maps, the mask generator and the
// target classifier, and the losses that tie them together.

#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "vital/features.hpp"
#include "vital/tensor.hpp"

namespace vital {

/// Log arguments are clamped to [kProbEps, 1 - kProbEps].
inline constexpr double kProbEps = 1e-7;

/// Single-channel spatial weight map, values in [0, 1].
struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  static Mask filled(std::size_t height, std::size_t width, double value);
  static Mask ones(std::size_t height, std::size_t width) { return filled(height, width, 1.0); }
  double at(std::size_t i, std::size_t j) const { return values[i * width + j]; }
  ad::Tensor tensor() const { return ad::Tensor::constant({height, width}, values); }

  bool operator==(const Mask&) const = default;
};

enum class MaskPolarity {
  drop_one,  // the distinguished part is 0, the rest 1
  keep_one,  // the distinguished part is 1, the rest 0
};

MaskPolarity parse_polarity(std::string_view name);
std::string_view to_string(MaskPolarity polarity);

/// Splits the grid into `parts` equal rectangles (a square number of them)
/// and returns one binary mask per part, in row-major part order.
std::vector<Mask> canonical_masks(std::size_t height, std::size_t width, std::size_t parts, MaskPolarity polarity);

/// Scales every channel of `features` by the mask at each spatial cell.
FeatureMap apply_mask(const FeatureMap& features, const Mask& mask);

double cross_entropy(double p, int y);
double cost_sensitive(double p, int y);
double entropy(double p);

/// Owns a list of parameter tensors. Copies are deep, so copying a network
/// gives an independent set of weights.
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(std::vector<ad::Tensor> params) : params_(std::move(params)) {}
  ParamSet(const ParamSet& other);
  ParamSet& operator=(const ParamSet& other);
  ParamSet(ParamSet&&) noexcept = default;
  ParamSet& operator=(ParamSet&&) noexcept = default;

  std::span<ad::Tensor> span() { return params_; }
  std::span<const ad::Tensor> span() const { return params_; }
  const ad::Tensor& operator[](std::size_t i) const { return params_[i]; }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  /// Copy whose tensors are constants, for evaluation without gradients.
  std::vector<ad::Tensor> frozen() const;
  /// All parameter values concatenated.
  std::vector<double> flat() const;
  bool operator==(const ParamSet& other) const { return flat() == other.flat(); }

 private:
  std::vector<ad::Tensor> params_;
};

struct NetworkShape {
  std::size_t channels = 32;
  std::size_t grid = 3;
  std::size_t generator_hidden = 128;
  std::size_t discriminator_hidden = 64;

  std::size_t cells() const { return grid * grid; }
  std::size_t feature_size() const { return channels * cells(); }
};

/// flatten(C) -> hidden (relu) -> H*W (sigmoid). Predicts a mask per sample.
class Generator {
 public:
  Generator() = default;
  Generator(const NetworkShape& shape, std::mt19937_64& rng);

  const NetworkShape& shape() const { return shape_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  /// N x K x H x W features -> N x H x W masks, differentiable in the
  /// generator's parameters.
  ad::Tensor forward(const ad::Tensor& features) const;
  /// Same values without recording gradients.
  ad::Tensor predict(const ad::Tensor& features) const;
  Mask predict(const FeatureMap& features) const;

  bool operator==(const Generator& other) const { return params_ == other.params_; }

 private:
  ad::Tensor run(const ad::Tensor& features, std::span<const ad::Tensor> params) const;

  NetworkShape shape_;
  ParamSet params_;
};

/// flatten(C) -> 64 (relu) -> 64 (relu) -> 1 (sigmoid), the target probability.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const NetworkShape& shape, std::mt19937_64& rng);

  const NetworkShape& shape() const { return shape_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  /// N x K x H x W (or N x F) features -> length-N probabilities.
  ad::Tensor forward(const ad::Tensor& features) const;
  /// Probabilities with the parameters held as constants. Gradients still
  /// flow to `features` if it requires them.
  ad::Tensor forward_frozen(const ad::Tensor& features) const;
  std::vector<double> probabilities(const ad::Tensor& features) const;
  double probability(const FeatureMap& features) const;

  bool operator==(const Discriminator& other) const { return params_ == other.params_; }

 private:
  ad::Tensor run(const ad::Tensor& features, std::span<const ad::Tensor> params) const;

  NetworkShape shape_;
  ParamSet params_;
};

/// Per-sample CE (or cost-sensitive) terms on probabilities `p`, i.e.
/// -(y * K1 * log p + (1 - y) * K2 * log(1 - p)) with K1 = 1 - p, K2 = p when
/// cost sensitive and K1 = K2 = 1 otherwise. Returns a length-N tensor.
ad::Tensor classification_terms(const ad::Tensor& p, std::span<const int> labels, bool cost_sensitive);

/// Diagnostics from a classifier objective evaluation.
struct DObjectiveTrace {
  std::vector<double> probabilities;  // D(M . C) per sample
  std::vector<double> factors;        // K1 for positives, K2 for negatives
  double real_term = 0.0;             // positive-sample share of the loss
  double fake_term = 0.0;             // negative-sample share
};

/// Classifier loss to minimize over D: mean over the batch of the
/// classification terms of D on mask-dropped features.
/// `features` is N x K x H x W and `masks` N x H x W.
ad::Tensor d_objective(const Discriminator& d, const ad::Tensor& features, const ad::Tensor& masks,
                       std::span<const int> labels, bool cost_sensitive, DObjectiveTrace* trace = nullptr);

struct LabeledMaskedSample {
  FeatureMap features;
  Mask mask;
  int label = 0;
};

double d_objective(std::span<const LabeledMaskedSample> batch, const Discriminator& d, bool cost_sensitive,
                   DObjectiveTrace* trace = nullptr);

struct LossTerms {
  double d_real_term = 0.0;
  double d_fake_term = 0.0;
  double g_adv_term = 0.0;
  double g_l2_term = 0.0;
  double lambda = 1.0;
};

/// Generator loss to minimize over G with D held fixed:
/// mean_n log(1 - D(G(C_n) . C_n)) + lambda * mean squared error(G(C), M).
/// `features` is N x K x H x W and `targets` N x H x W.
ad::Tensor g_objective(const Generator& g, const Discriminator& d, const ad::Tensor& features,
                       const ad::Tensor& targets, double lambda, LossTerms* terms = nullptr);

double g_objective(const FeatureMap& features, const Mask& target, const Discriminator& d, const Generator& g,
                   double lambda, LossTerms* terms = nullptr);

}  // namespace vital
