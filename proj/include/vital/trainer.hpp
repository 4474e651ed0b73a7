#pragma once

// Alternating optimisation of the classifier D and the mask generator G.
// Each joint iteration trains D on mask-dropped positives plus negatives and
// then regresses G toward the mask that hurts D most.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "vital/adversarial.hpp"
#include "vital/rng.hpp"

namespace vital {

/// Where the masks applied to positives during D training come from.
enum class MaskSource {
  none,                 // no dropout (baseline)
  generator,            // G's predicted mask (adversarial)
  uniform,              // i.i.d. uniform [0, 1] per cell
  canonical,            // one of the canonical masks, uniformly at random
  untrained_generator,  // G's prediction, but G is never trained
};

/// How per-sample losses are combined before the optimizer step. The
/// objectives themselves always report the batch mean.
enum class LossReduction {
  mean,
  sum,
};

LossReduction parse_reduction(std::string_view name);
std::string_view to_string(LossReduction reduction);

MaskSource parse_mask_source(std::string_view name);
std::string_view to_string(MaskSource source);

struct TrainConfig {
  double lr_g = 1e-3;
  double lr_d = 1e-4;
  double momentum = 0.0;
  double weight_decay = 0.0;
  int init_iterations = 100;
  int warmup_iterations = 20;  // D-only iterations at the start of initialization
  int update_iterations = 10;
  int update_period_frames = 10;
  int batch_pos = 32;
  int batch_neg = 96;
  int buffer_frames = 20;
  double lambda = 1.0;
  LossReduction reduction = LossReduction::sum;
  bool cost_sensitive = true;
  MaskPolarity polarity = MaskPolarity::drop_one;
  MaskSource mask_source = MaskSource::generator;
  NetworkShape network;
  std::uint64_t seed = 1;

  void validate() const;
};

struct LabeledSample {
  FeatureMap features;
  int label = 0;
  int frame = 0;
};

/// Positive and negative samples from the most recent `capacity_frames` frames.
class SampleBuffer {
 public:
  explicit SampleBuffer(int capacity_frames = 20);

  void add(LabeledSample sample);
  void add(std::span<const LabeledSample> samples);
  /// Drops samples collected more than capacity_frames - 1 frames before `frame`.
  void evict(int frame);
  void clear();

  std::span<const LabeledSample> positives() const { return positives_; }
  std::span<const LabeledSample> negatives() const { return negatives_; }
  int capacity_frames() const { return capacity_frames_; }

 private:
  int capacity_frames_;
  std::vector<LabeledSample> positives_;
  std::vector<LabeledSample> negatives_;
};

struct HardestMask {
  std::size_t index = 0;
  Mask mask;
  double loss = 0.0;
};

/// Mask whose dropout gives the highest CE loss of D on a positive sample.
/// Ties go to the lowest index.
HardestMask select_hardest_mask(const Discriminator& d, const FeatureMap& features, std::span<const Mask> masks);

/// Batched form: the hardest mask index for each of N samples in an
/// N x K x H x W tensor.
std::vector<std::size_t> select_hardest_masks(const Discriminator& d, const ad::Tensor& features,
                                              std::span<const Mask> masks);

struct StepCounters {
  long d_steps = 0;
  long g_steps = 0;
};

/// One training session: owns G, D, their optimizers and the sampling RNG.
class AdversarialTrainer {
 public:
  /// Random G and D drawn from the "init" stream of cfg.seed.
  explicit AdversarialTrainer(TrainConfig cfg);
  AdversarialTrainer(TrainConfig cfg, Generator g, Discriminator d);

  const TrainConfig& config() const { return cfg_; }
  const Generator& generator() const { return g_; }
  const Discriminator& discriminator() const { return d_; }
  Generator& generator() { return g_; }
  Discriminator& discriminator() { return d_; }
  const StepCounters& counters() const { return counters_; }
  std::span<const Mask> candidate_masks() const { return masks_; }
  double last_d_loss() const { return last_d_loss_; }
  double last_g_loss() const { return last_g_loss_; }

  /// One SGD step on the classifier objective over a batch resampled (with
  /// replacement) from the buffer. Positives are dropped by the configured
  /// mask source unless `masked` is false; negatives are never masked.
  void train_d_step(const SampleBuffer& buffer, bool masked = true);
  /// The same step on an explicit batch.
  void train_d_step(const ad::Tensor& features, const ad::Tensor& masks, std::span<const int> labels);

  /// Resamples batch_pos positives, picks each one's hardest canonical mask
  /// under the current D, and takes one SGD step on the generator objective.
  /// D is not modified.
  void train_g_step(const SampleBuffer& buffer);
  void train_g_step(std::span<const FeatureMap> positives);

  /// First-frame training: warmup D-only iterations, then joint iterations,
  /// init_iterations in total. The samples seed an internal buffer.
  void initialize(std::span<const LabeledSample> samples);

  /// Runs update_iterations joint iterations when frame_idx is a multiple of
  /// update_period_frames; returns whether it did.
  bool periodic_update(const SampleBuffer& buffer, int frame_idx);

  /// D step followed (for the generator mask source) by a G step.
  void joint_iteration(const SampleBuffer& buffer);

 private:
  ad::Tensor positive_masks(const ad::Tensor& features);
  ad::Tensor reduce(const ad::Tensor& mean_loss, std::size_t batch) const;

  TrainConfig cfg_;
  Generator g_;
  Discriminator d_;
  ad::Sgd opt_g_;
  ad::Sgd opt_d_;
  Rng rng_;
  std::vector<Mask> masks_;
  StepCounters counters_;
  double last_d_loss_ = 0.0;
  double last_g_loss_ = 0.0;
};

/// Features of `count` indices drawn uniformly with replacement.
ad::Tensor resample_features(std::span<const LabeledSample> pool, int count, Rng& rng);

}  // namespace vital
