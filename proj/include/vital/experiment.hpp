#pragma once

// Ablation arms and the experiments built from them: per-sequence tracking,
// the arms x seeds comparison table, and the entropy-map study.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vital/config.hpp"
#include "vital/io.hpp"
#include "vital/metrics.hpp"

namespace vital {

enum class Arm {
  full,         // generator masks + cost-sensitive loss
  no_gan,       // no masks, cross entropy
  random_mask,  // random masks, cross entropy
  gan_no_csl,   // generator masks, cross entropy
};

/// Throws ConfigError listing the valid arm names.
Arm parse_arm(std::string_view name);
std::string_view to_string(Arm arm);
std::vector<Arm> parse_arms(std::span<const std::string> names);
/// Sets the mask source and loss of `cfg` for `arm`. `random_source` is the
/// mask source used by the random_mask arm.
void apply_arm(TrainConfig& cfg, Arm arm, MaskSource random_source = MaskSource::canonical);

struct SequenceData {
  std::string name;
  std::vector<Frame> frames;
  std::optional<std::vector<BoundingBox>> ground_truth;
  std::optional<SequenceSpec> spec;

  static SequenceData from(const Sequence& seq);
  static SequenceData from(io::LoadedSequence loaded);
  BoundingBox init_box() const;
};

/// Tracks one sequence under one arm. The root seed comes from cfg.seed.
Trajectory run_arm(const SequenceData& seq, const RunConfig& cfg, Arm arm);

struct AblationRow {
  Arm arm = Arm::full;
  std::uint64_t seed = 0;
  std::string sequence;
  double success_auc = 0.0;
  double precision_20 = 0.0;
};

struct ArmSummary {
  Arm arm = Arm::full;
  double mean_auc = 0.0;
  double mean_precision_20 = 0.0;
  /// Seeds where this arm's suite-mean AUC beats the baseline's.
  int wins_vs_baseline = 0;
  int seeds = 0;
};

struct AblationTable {
  std::vector<Arm> arms;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> sequences;
  std::vector<AblationRow> rows;  // ordered arm, seed, sequence
  Arm baseline = Arm::no_gan;

  /// Suite-mean AUC of one arm under one seed.
  double seed_mean_auc(Arm arm, std::uint64_t seed) const;
  /// Seeds where mean AUC of `a` is strictly greater than that of `b`.
  int wins(Arm a, Arm b) const;
  std::vector<ArmSummary> summary() const;
  std::string rows_csv() const;
  std::string summary_text() const;
};

/// Runs every arm x seed x sequence on `threads` workers. Each job is
/// independent, so the table is the same for any thread count.
AblationTable run_ablation(std::span<const SequenceData> sequences, std::span<const std::uint64_t> seeds,
                           std::span<const Arm> arms, const RunConfig& base, int threads = 1);

struct EntropyStudy {
  Arm arm = Arm::full;
  int frame = 0;
  EntropyMap map;
  BoundingBox region;       // ground truth (or tracker estimate) at `frame`
  double region_mean = 0.0;  // mean entropy over cells centered in `region`
};

/// Tracks frames [0, frame) with the given arm, then maps D's entropy over
/// `frame` with a window the size of the current estimate.
EntropyStudy entropy_study(const SequenceData& seq, int frame, const RunConfig& cfg, Arm arm);

/// First frame with an active occlusion, if the spec schedules one.
std::optional<int> first_occluded_frame(const SequenceSpec& spec);

}  // namespace vital
