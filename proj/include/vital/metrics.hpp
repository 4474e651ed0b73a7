#pragma once

// One-pass evaluation: center-distance precision and overlap success curves,
// plus the classifier entropy map.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "vital/adversarial.hpp"
#include "vital/features.hpp"

namespace vital {

using Trajectory = std::vector<BoundingBox>;

double iou(const BoundingBox& a, const BoundingBox& b);
double center_error(const BoundingBox& a, const BoundingBox& b);

struct Curve {
  std::vector<double> thresholds;
  std::vector<double> values;
};

/// Fraction of frames with center error <= t for t = 0, 1, ..., max_px.
Curve precision_curve(std::span<const BoundingBox> traj, std::span<const BoundingBox> gt, int max_px = 50);
double precision_at(std::span<const BoundingBox> traj, std::span<const BoundingBox> gt, double px = 20.0);

/// Fraction of frames with IoU > t for t = 0, 0.05, ..., 1 (21 thresholds).
Curve success_curve(std::span<const BoundingBox> traj, std::span<const BoundingBox> gt);
/// Mean of the success curve.
double success_auc(std::span<const BoundingBox> traj, std::span<const BoundingBox> gt);

struct EvalReport {
  Curve precision;
  double precision_20 = 0.0;
  Curve success;
  double success_auc = 0.0;
  /// Mean success AUC keyed by challenge name, when known.
  std::map<std::string, double> per_challenge;

  std::string to_json() const;
  /// One row per threshold index: index, precision threshold/value, success threshold/value.
  std::string to_csv() const;
};

EvalReport evaluate(std::span<const BoundingBox> traj, std::span<const BoundingBox> gt);

struct EntropyMap {
  int rows = 0;
  int cols = 0;
  int step = 1;
  double window_w = 0.0;
  double window_h = 0.0;
  std::vector<double> values;  // rows x cols, row-major
  std::vector<BoundingBox> windows;

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  /// Mean over cells whose window center lies inside `region`.
  double mean_inside(const BoundingBox& region) const;
  std::string to_csv() const;
};

/// Slides a window_w x window_h window over the frame every `grid_step`
/// pixels and records the entropy of D's target probability at each stop.
EntropyMap entropy_map(const Discriminator& d, const FeatureExtractor& extractor, const Frame& frame,
                       double window_w, double window_h, int grid_step);

}  // namespace vital
