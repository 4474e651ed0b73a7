#include "vital/trainer.hpp"

#include <algorithm>
#include <string>

namespace vital {

using ad::Tensor;

MaskSource parse_mask_source(std::string_view name) {
  if (name == "none") return MaskSource::none;
  if (name == "generator") return MaskSource::generator;
  if (name == "uniform") return MaskSource::uniform;
  if (name == "canonical") return MaskSource::canonical;
  if (name == "untrained_generator") return MaskSource::untrained_generator;
  throw ConfigError("unknown mask source '" + std::string(name) +
                    "' (valid: none, generator, uniform, canonical, untrained_generator)");
}

std::string_view to_string(MaskSource source) {
  switch (source) {
    case MaskSource::none:
      return "none";
    case MaskSource::generator:
      return "generator";
    case MaskSource::uniform:
      return "uniform";
    case MaskSource::canonical:
      return "canonical";
    case MaskSource::untrained_generator:
      return "untrained_generator";
  }
  return "none";
}

LossReduction parse_reduction(std::string_view name) {
  if (name == "mean") return LossReduction::mean;
  if (name == "sum") return LossReduction::sum;
  throw ConfigError("unknown loss reduction '" + std::string(name) + "' (valid: mean, sum)");
}

std::string_view to_string(LossReduction reduction) {
  return reduction == LossReduction::sum ? "sum" : "mean";
}

void TrainConfig::validate() const {
  if (!(lr_g >= 0.0) || !(lr_d >= 0.0)) throw ConfigError("learning rates must be nonnegative");
  if (init_iterations < 0 || update_iterations < 0) throw ConfigError("iteration counts must be nonnegative");
  if (warmup_iterations < 0) throw ConfigError("warmup_iterations must be nonnegative");
  if (update_period_frames <= 0) throw ConfigError("update_period_frames must be positive");
  if (batch_pos <= 0 || batch_neg <= 0) throw ConfigError("batch sizes must be positive");
  if (buffer_frames <= 0) throw ConfigError("buffer_frames must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (network.grid == 0 || network.channels == 0) throw ConfigError("network shape must be nonempty");
  ad::SgdConfig{lr_g, momentum, weight_decay}.validate();
}

SampleBuffer::SampleBuffer(int capacity_frames) : capacity_frames_(capacity_frames) {
  if (capacity_frames <= 0) throw ConfigError("buffer capacity must be positive");
}

void SampleBuffer::add(LabeledSample sample) {
  if (sample.label == 1) {
    positives_.push_back(std::move(sample));
  } else if (sample.label == 0) {
    negatives_.push_back(std::move(sample));
  } else {
    throw ContractError("sample labels must be 0 or 1");
  }
}

void SampleBuffer::add(std::span<const LabeledSample> samples) {
  for (const auto& s : samples) add(s);
}

void SampleBuffer::evict(int frame) {
  const int oldest = frame - capacity_frames_ + 1;
  auto stale = [oldest](const LabeledSample& s) { return s.frame < oldest; };
  std::erase_if(positives_, stale);
  std::erase_if(negatives_, stale);
}

void SampleBuffer::clear() {
  positives_.clear();
  negatives_.clear();
}

std::vector<std::size_t> select_hardest_masks(const Discriminator& d, const Tensor& features,
                                              std::span<const Mask> masks) {
  if (masks.empty()) throw ContractError("select_hardest_mask: empty mask list");
  if (features.rank() != 4) throw DimensionError("select_hardest_masks expects N x K x H x W features");
  const std::size_t n = features.shape()[0];
  const std::size_t per = features.size() / std::max<std::size_t>(n, 1);
  const std::size_t m = masks.size();
  const std::size_t cells = masks.front().values.size();

  // Every (sample, mask) pair as one row of a single batch.
  std::vector<double> reps;
  std::vector<double> mask_values;
  reps.reserve(n * m * per);
  mask_values.reserve(n * m * cells);
  auto fv = features.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& mask : masks) {
      reps.insert(reps.end(), fv.begin() + i * per, fv.begin() + (i + 1) * per);
      mask_values.insert(mask_values.end(), mask.values.begin(), mask.values.end());
    }
  }
  const auto& s = features.shape();
  Tensor batch = Tensor::constant({n * m, s[1], s[2], s[3]}, std::move(reps));
  Tensor mask_batch = Tensor::constant({n * m, s[2], s[3]}, std::move(mask_values));
  auto probs = d.probabilities(ad::broadcast_mul_spatial(batch, mask_batch));

  std::vector<std::size_t> picks(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = cross_entropy(probs[i * m], 1);
    for (std::size_t k = 1; k < m; ++k) {
      const double loss = cross_entropy(probs[i * m + k], 1);
      if (loss > best) {
        best = loss;
        picks[i] = k;
      }
    }
  }
  return picks;
}

HardestMask select_hardest_mask(const Discriminator& d, const FeatureMap& features, std::span<const Mask> masks) {
  if (masks.empty()) throw ContractError("select_hardest_mask: empty mask list");
  Tensor c = ad::reshape(features.tensor(), {1, features.channels, features.height, features.width});
  const std::size_t k = select_hardest_masks(d, c, masks)[0];
  const double loss = cross_entropy(d.probability(apply_mask(features, masks[k])), 1);
  return HardestMask{k, masks[k], loss};
}

Tensor resample_features(std::span<const LabeledSample> pool, int count, Rng& rng) {
  if (pool.empty()) throw ContractError("cannot resample from an empty pool");
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const auto& f0 = pool.front().features;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(count) * f0.values.size());
  for (int i = 0; i < count; ++i) {
    const auto& f = pool[pick(rng)].features;
    values.insert(values.end(), f.values.begin(), f.values.end());
  }
  return Tensor::constant({static_cast<std::size_t>(count), f0.channels, f0.height, f0.width}, std::move(values));
}

AdversarialTrainer::AdversarialTrainer(TrainConfig cfg)
    : cfg_(cfg), opt_g_({cfg.lr_g, cfg.momentum, cfg.weight_decay}), opt_d_({cfg.lr_d, cfg.momentum, cfg.weight_decay}) {
  cfg_.validate();
  Rng init = make_rng(cfg_.seed, "init");
  // D is drawn first so every arm with the same seed starts from the same D.
  d_ = Discriminator(cfg_.network, init);
  g_ = Generator(cfg_.network, init);
  rng_ = make_rng(cfg_.seed, "minibatch");
  masks_ = canonical_masks(cfg_.network.grid, cfg_.network.grid, 9, cfg_.polarity);
}

AdversarialTrainer::AdversarialTrainer(TrainConfig cfg, Generator g, Discriminator d)
    : cfg_(cfg),
      g_(std::move(g)),
      d_(std::move(d)),
      opt_g_({cfg.lr_g, cfg.momentum, cfg.weight_decay}),
      opt_d_({cfg.lr_d, cfg.momentum, cfg.weight_decay}),
      rng_(make_rng(cfg.seed, "minibatch")) {
  cfg_.validate();
  masks_ = canonical_masks(cfg_.network.grid, cfg_.network.grid, 9, cfg_.polarity);
}

Tensor AdversarialTrainer::positive_masks(const Tensor& features) {
  const std::size_t n = features.shape()[0];
  const std::size_t grid = cfg_.network.grid;
  switch (cfg_.mask_source) {
    case MaskSource::generator:
    case MaskSource::untrained_generator:
      return g_.predict(features);
    case MaskSource::uniform: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<double> values(n * grid * grid);
      for (auto& v : values) v = u(rng_);
      return Tensor::constant({n, grid, grid}, std::move(values));
    }
    case MaskSource::canonical: {
      std::uniform_int_distribution<std::size_t> pick(0, masks_.size() - 1);
      std::vector<double> values;
      values.reserve(n * grid * grid);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& m = masks_[pick(rng_)].values;
        values.insert(values.end(), m.begin(), m.end());
      }
      return Tensor::constant({n, grid, grid}, std::move(values));
    }
    case MaskSource::none:
      break;
  }
  return Tensor::ones({n, grid, grid});
}

Tensor AdversarialTrainer::reduce(const Tensor& mean_loss, std::size_t batch) const {
  if (cfg_.reduction == LossReduction::mean) return mean_loss;
  return ad::affine(mean_loss, static_cast<double>(batch), 0.0);
}

void AdversarialTrainer::train_d_step(const SampleBuffer& buffer, bool masked) {
  if (buffer.positives().empty() || buffer.negatives().empty()) {
    throw ContractError("train_d_step: buffer needs at least one positive and one negative sample");
  }
  Tensor pos = resample_features(buffer.positives(), cfg_.batch_pos, rng_);
  Tensor neg = resample_features(buffer.negatives(), cfg_.batch_neg, rng_);
  const std::size_t grid = cfg_.network.grid;
  Tensor pos_masks = masked ? positive_masks(pos) : Tensor::ones({pos.shape()[0], grid, grid});
  Tensor neg_masks = Tensor::ones({neg.shape()[0], grid, grid});

  std::vector<int> labels(static_cast<std::size_t>(cfg_.batch_pos), 1);
  labels.resize(labels.size() + static_cast<std::size_t>(cfg_.batch_neg), 0);
  train_d_step(ad::concat({pos, neg}), ad::concat({pos_masks, neg_masks}), labels);
}

void AdversarialTrainer::train_d_step(const Tensor& features, const Tensor& masks, std::span<const int> labels) {
  Tensor loss = d_objective(d_, features, masks.detach(), labels, cfg_.cost_sensitive);
  last_d_loss_ = loss.item();
  auto grads = ad::backward(reduce(loss, labels.size()));
  opt_d_.step(d_.params().span(), grads);
  ++counters_.d_steps;
}

void AdversarialTrainer::train_g_step(const SampleBuffer& buffer) {
  if (buffer.positives().empty()) throw ContractError("train_g_step: buffer holds no positive samples");
  Tensor pos = resample_features(buffer.positives(), cfg_.batch_pos, rng_);
  const auto& s = pos.shape();
  std::vector<FeatureMap> maps(s[0]);
  const std::size_t per = pos.size() / s[0];
  for (std::size_t i = 0; i < s[0]; ++i) {
    maps[i] = FeatureMap{s[1], s[2], s[3], std::vector<double>(pos.values().begin() + i * per,
                                                               pos.values().begin() + (i + 1) * per)};
  }
  train_g_step(maps);
}

void AdversarialTrainer::train_g_step(std::span<const FeatureMap> positives) {
  if (positives.empty()) throw ContractError("train_g_step: no positive samples");
  Tensor features = stack_features(positives);
  auto picks = select_hardest_masks(d_, features, masks_);
  const std::size_t cells = masks_.front().values.size();
  std::vector<double> targets;
  targets.reserve(picks.size() * cells);
  for (auto k : picks) targets.insert(targets.end(), masks_[k].values.begin(), masks_[k].values.end());
  Tensor target = Tensor::constant({picks.size(), masks_.front().height, masks_.front().width}, std::move(targets));

  Tensor loss = g_objective(g_, d_, features, target, cfg_.lambda);
  last_g_loss_ = loss.item();
  auto grads = ad::backward(reduce(loss, picks.size()));
  opt_g_.step(g_.params().span(), grads);
  ++counters_.g_steps;
}

void AdversarialTrainer::joint_iteration(const SampleBuffer& buffer) {
  train_d_step(buffer, true);
  if (cfg_.mask_source == MaskSource::generator) train_g_step(buffer);
}

void AdversarialTrainer::initialize(std::span<const LabeledSample> samples) {
  SampleBuffer buffer(cfg_.buffer_frames);
  buffer.add(samples);
  for (int it = 0; it < cfg_.init_iterations; ++it) {
    if (it < cfg_.warmup_iterations) {
      train_d_step(buffer, false);
    } else {
      joint_iteration(buffer);
    }
  }
}

bool AdversarialTrainer::periodic_update(const SampleBuffer& buffer, int frame_idx) {
  if (frame_idx <= 0) throw ContractError("periodic_update: frame index must be positive");
  if (frame_idx % cfg_.update_period_frames != 0) return false;
  for (int it = 0; it < cfg_.update_iterations; ++it) joint_iteration(buffer);
  return true;
}

}  // namespace vital
