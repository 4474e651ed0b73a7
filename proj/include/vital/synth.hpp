#pragma once

// Seeded synthetic tracking sequences with exact ground truth. A textured
// target moves over a textured background while scheduled challenges
// (occlusion, in-plane rotation, illumination change, target-like
// distractors) perturb its appearance.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vital/features.hpp"

namespace vital {

enum class ChallengeKind { occlusion, in_plane_rotation, illumination, background_clutter };

ChallengeKind parse_challenge(std::string_view name);
std::string_view to_string(ChallengeKind kind);

/// Which side of the target the occluder enters from. `marker` picks the side
/// holding the target's most distinctive spot.
enum class OccluderSide { seeded, left, right, top, bottom, marker };

OccluderSide parse_occluder_side(std::string_view name);
std::string_view to_string(OccluderSide side);

/// A challenge active on frames [first, last]. `intensity` means:
/// occlusion - covered fraction of the target in [0, 0.6];
/// in_plane_rotation - degrees per frame;
/// illumination - global gain in [0.5, 2];
/// background_clutter - number of distractors.
struct Challenge {
  int first = 0;
  int last = 0;
  ChallengeKind kind = ChallengeKind::occlusion;
  double intensity = 0.0;

  bool active(int t) const { return t >= first && t <= last; }
};

struct SequenceSpec {
  std::string name = "sequence";
  int frame_w = 64;
  int frame_h = 64;
  int length = 60;
  int target_w = 16;
  int target_h = 16;
  double start_x = 24.0;
  double start_y = 24.0;
  double vx = 0.0;
  double vy = 0.0;
  double jitter_std = 0.0;
  double clutter_density = 0.6;  // background texture contrast in [0, 1]
  double noise_std = 0.01;       // per-frame sensor noise
  std::uint64_t texture_seed = 1;
  std::uint64_t seed = 1;
  OccluderSide occluder_side = OccluderSide::seeded;
  std::vector<Challenge> schedule;

  void validate() const;
  bool has(ChallengeKind kind) const;
};

struct Sequence {
  SequenceSpec spec;
  std::vector<Frame> frames;
  std::vector<BoundingBox> ground_truth;
};

/// Renders a sequence. Deterministic in the spec.
Sequence generate_sequence(const SequenceSpec& spec);

/// Renders without the occluder so the clean appearance can be compared.
Sequence generate_sequence_without_occlusion(const SequenceSpec& spec);

/// Ten 60-frame 64x64 specs: two per challenge kind plus two mixed.
std::vector<SequenceSpec> standard_suite(std::uint64_t seed);

/// A static sequence whose occluder covers the side of the target holding its
/// distinctive spot, used for entropy studies.
SequenceSpec occlusion_fixture(std::uint64_t seed, double fraction = 0.5, int first = 30, int last = 40);

/// Region of the target box hidden by the occluder at frame t (empty when
/// no occlusion is active).
BoundingBox occluder_region(const SequenceSpec& spec, const BoundingBox& target, int t);

}  // namespace vital
