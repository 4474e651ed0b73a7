#pragma once

// Online tracking-by-detection: sample candidates around the last estimate,
// score them with D (G plays no part at inference), average the best few,
// then collect IoU-labelled samples for the periodic model update.

#include <optional>
#include <span>
#include <vector>

#include "vital/features.hpp"
#include "vital/metrics.hpp"
#include "vital/rng.hpp"
#include "vital/trainer.hpp"

namespace vital {

struct TrackerConfig {
  int candidates = 256;
  double center_std = 0.3;  // in units of mean(w, h)
  double scale_base = 1.05;
  double scale_std = 0.5;
  int top_k = 5;
  int update_positives = 50;
  int update_negatives = 200;
  int init_positives = 200;
  int init_negatives = 800;
  double positive_iou = 0.7;
  double negative_iou = 0.3;
  int oversample = 10;  // attempts per requested sample before giving up
  double min_side = 4.0;

  void validate() const;
};

struct CandidateSet {
  std::vector<BoundingBox> boxes;
  std::vector<double> scores;

  bool scored() const { return !boxes.empty() && scores.size() == boxes.size(); }
};

/// Draws n boxes: centers Gaussian around prev's center (std center_std *
/// mean(w, h) per axis) and size scaled by scale_base^r, r ~ N(0, scale_std).
/// Boxes are clipped so they always overlap the frame.
CandidateSet sample_candidates(const BoundingBox& prev, int n, Rng& rng, int frame_w, int frame_h,
                               const TrackerConfig& cfg = {});

/// Scores every candidate with D on unmasked features.
void score_candidates(const Discriminator& d, const FeatureExtractor& extractor, const Frame& frame,
                      CandidateSet& candidates);

/// Coordinate-wise mean of the top_k highest-scoring boxes; ties broken by
/// candidate index.
BoundingBox estimate_target(const CandidateSet& candidates, int top_k = 5);

struct SampleBoxes {
  std::vector<BoundingBox> positives;
  std::vector<BoundingBox> negatives;
};

/// Rejection-samples boxes labelled by IoU with `est`: positives have
/// IoU >= positive_iou, negatives IoU <= negative_iou. A class that cannot be
/// filled within oversample * count attempts is returned partially filled.
SampleBoxes draw_labeled_boxes(const Frame& frame, const BoundingBox& est, int n_pos, int n_neg, Rng& rng,
                               const TrackerConfig& cfg = {});

std::vector<LabeledSample> collect_update_samples(const Frame& frame, const BoundingBox& est, Rng& rng,
                                                  const FeatureExtractor& extractor, int frame_idx,
                                                  const TrackerConfig& cfg = {}, int n_pos = -1, int n_neg = -1);

class Tracker {
 public:
  Tracker(TrackerConfig tracker_cfg, TrainConfig train_cfg, ExtractorConfig extractor_cfg = {});

  /// Trains on samples from the first frame.
  void start(const Frame& frame, const BoundingBox& init_box);
  /// Processes the next frame and returns the new estimate.
  BoundingBox step(const Frame& frame);

  bool started() const { return started_; }
  int frame_index() const { return frame_idx_; }
  const BoundingBox& current_box() const { return box_; }
  const AdversarialTrainer& trainer() const { return *trainer_; }
  AdversarialTrainer& trainer() { return *trainer_; }
  const SampleBuffer& buffer() const { return buffer_; }
  const FeatureExtractor& extractor() const { return extractor_; }
  const CandidateSet& last_candidates() const { return last_candidates_; }

 private:
  TrackerConfig cfg_;
  FeatureExtractor extractor_;
  std::optional<AdversarialTrainer> trainer_;
  SampleBuffer buffer_;
  Rng rng_;
  BoundingBox box_;
  CandidateSet last_candidates_;
  int frame_idx_ = 0;
  int frame_w_ = 0;
  int frame_h_ = 0;
  bool started_ = false;
};

/// Runs the tracker over a whole sequence. Frame 0 reports init_box.
Trajectory track_sequence(std::span<const Frame> frames, const BoundingBox& init_box, const TrackerConfig& tracker_cfg,
                          const TrainConfig& train_cfg, const ExtractorConfig& extractor_cfg = {});

}  // namespace vital
