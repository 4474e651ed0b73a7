#pragma once

// Flat key = value run configuration. Every tunable of every command lives
// here; unknown keys are rejected and dump() output parses back unchanged.

#include <cstdint>
#include <string>
#include <vector>

#include "vital/features.hpp"
#include "vital/tracker.hpp"
#include "vital/trainer.hpp"

namespace vital {

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out = "out";
  std::string arm = "full";
  std::vector<std::string> arms = {"full", "no_gan", "random_mask", "gan_no_csl"};
  int seed_count = 10;  // ablate runs root seeds seed .. seed + seed_count - 1
  int threads = 1;
  int entropy_frame = -1;  // -1: first occluded frame when known, else the last frame
  int entropy_grid_step = 2;
  MaskSource random_mask_source = MaskSource::canonical;  // masks of the random_mask arm

  TrainConfig train;
  TrackerConfig tracker;
  ExtractorConfig extractor;

  /// Sets one key from its text form; throws ConfigError on unknown keys or
  /// malformed values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  /// Every key in a fixed order, as "key = value" lines.
  std::string dump() const;
  void load_text(const std::string& text);
  static std::vector<std::string> keys();
  /// Brings derived fields (network shape, seeds) in line and validates.
  void finalize();
};

}  // namespace vital
