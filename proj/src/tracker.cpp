#include "vital/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vital {

namespace {

BoundingBox clip_box(BoundingBox b, int frame_w, int frame_h, double min_side) {
  const double cx = std::clamp(b.cx(), 0.5, frame_w - 0.5);
  const double cy = std::clamp(b.cy(), 0.5, frame_h - 0.5);
  b.w = std::clamp(b.w, min_side, static_cast<double>(frame_w));
  b.h = std::clamp(b.h, min_side, static_cast<double>(frame_h));
  b.x = cx - 0.5 * b.w;
  b.y = cy - 0.5 * b.h;
  return b;
}

BoundingBox perturb(const BoundingBox& prev, double center_std, double scale_std, double scale_base, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double spread = 0.5 * (prev.w + prev.h);
  const double dx = normal(rng) * center_std * spread;
  const double dy = normal(rng) * center_std * spread;
  const double s = std::pow(scale_base, normal(rng) * scale_std);
  BoundingBox b;
  b.w = prev.w * s;
  b.h = prev.h * s;
  b.x = prev.cx() + dx - 0.5 * b.w;
  b.y = prev.cy() + dy - 0.5 * b.h;
  return b;
}

}  // namespace

void TrackerConfig::validate() const {
  if (candidates < 1) throw ConfigError("candidates must be at least 1");
  if (top_k < 1) throw ConfigError("top_k must be at least 1");
  if (center_std < 0.0 || scale_std < 0.0 || scale_base <= 0.0) throw ConfigError("invalid candidate spread");
  if (update_positives < 0 || update_negatives < 0 || init_positives < 1 || init_negatives < 1) {
    throw ConfigError("sample counts must be nonnegative (first frame: positive)");
  }
  if (!(positive_iou > negative_iou)) throw ConfigError("positive_iou must exceed negative_iou");
  if (oversample < 1) throw ConfigError("oversample must be at least 1");
}

CandidateSet sample_candidates(const BoundingBox& prev, int n, Rng& rng, int frame_w, int frame_h,
                               const TrackerConfig& cfg) {
  if (n < 1) throw ContractError("sample_candidates: n must be at least 1");
  CandidateSet set;
  set.boxes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    set.boxes.push_back(
        clip_box(perturb(prev, cfg.center_std, cfg.scale_std, cfg.scale_base, rng), frame_w, frame_h, cfg.min_side));
  }
  return set;
}

void score_candidates(const Discriminator& d, const FeatureExtractor& extractor, const Frame& frame,
                      CandidateSet& candidates) {
  if (d.params().size() == 0) throw ContractError("score_candidates: discriminator is not initialized");
  if (candidates.boxes.empty()) throw ContractError("score_candidates: no candidates");
  candidates.scores = d.probabilities(extractor.extract_batch(frame, candidates.boxes));
}

BoundingBox estimate_target(const CandidateSet& candidates, int top_k) {
  if (candidates.boxes.empty()) throw ContractError("estimate_target: empty candidate set");
  if (!candidates.scored()) throw ContractError("estimate_target: candidates are not scored");
  std::vector<std::size_t> order(candidates.boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return candidates.scores[a] > candidates.scores[b]; });
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(top_k, 1)), order.size());
  BoundingBox mean{0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < k; ++i) {
    const auto& b = candidates.boxes[order[i]];
    mean.x += b.x;
    mean.y += b.y;
    mean.w += b.w;
    mean.h += b.h;
  }
  const double kd = static_cast<double>(k);
  return {mean.x / kd, mean.y / kd, mean.w / kd, mean.h / kd};
}

SampleBoxes draw_labeled_boxes(const Frame& frame, const BoundingBox& est, int n_pos, int n_neg, Rng& rng,
                               const TrackerConfig& cfg) {
  if (!est.intersects(frame.width(), frame.height())) {
    throw ContractError("collect_update_samples: estimate does not intersect the frame");
  }
  const int fw = frame.width(), fh = frame.height();
  SampleBoxes out;
  for (long attempt = 0; static_cast<int>(out.positives.size()) < n_pos &&
                         attempt < static_cast<long>(cfg.oversample) * n_pos;
       ++attempt) {
    BoundingBox b = clip_box(perturb(est, 0.1, 0.3, cfg.scale_base, rng), fw, fh, cfg.min_side);
    if (iou(b, est) >= cfg.positive_iou) out.positives.push_back(b);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (long attempt = 0; static_cast<int>(out.negatives.size()) < n_neg &&
                         attempt < static_cast<long>(cfg.oversample) * n_neg;
       ++attempt) {
    BoundingBox b;
    if (unit(rng) < 0.5) {
      b = est;
      b.x = unit(rng) * fw - 0.5 * est.w;
      b.y = unit(rng) * fh - 0.5 * est.h;
    } else {
      b = perturb(est, 1.0, 0.5, cfg.scale_base, rng);
    }
    b = clip_box(b, fw, fh, cfg.min_side);
    if (iou(b, est) <= cfg.negative_iou) out.negatives.push_back(b);
  }
  return out;
}

std::vector<LabeledSample> collect_update_samples(const Frame& frame, const BoundingBox& est, Rng& rng,
                                                  const FeatureExtractor& extractor, int frame_idx,
                                                  const TrackerConfig& cfg, int n_pos, int n_neg) {
  if (n_pos < 0) n_pos = cfg.update_positives;
  if (n_neg < 0) n_neg = cfg.update_negatives;
  SampleBoxes boxes = draw_labeled_boxes(frame, est, n_pos, n_neg, rng, cfg);
  std::vector<LabeledSample> samples;
  samples.reserve(boxes.positives.size() + boxes.negatives.size());
  for (const auto& b : boxes.positives) samples.push_back({extractor.extract(frame, b), 1, frame_idx});
  for (const auto& b : boxes.negatives) samples.push_back({extractor.extract(frame, b), 0, frame_idx});
  return samples;
}

Tracker::Tracker(TrackerConfig tracker_cfg, TrainConfig train_cfg, ExtractorConfig extractor_cfg)
    : cfg_(tracker_cfg),
      extractor_(extractor_cfg),
      trainer_(std::in_place, train_cfg),
      buffer_(train_cfg.buffer_frames),
      rng_(make_rng(train_cfg.seed, "sampling")) {
  cfg_.validate();
  const auto grid = static_cast<std::size_t>(extractor_.config().grid());
  const auto channels = static_cast<std::size_t>(extractor_.config().channels);
  if (train_cfg.network.grid != grid || train_cfg.network.channels != channels) {
    throw ConfigError("network shape does not match the feature extractor output");
  }
}

void Tracker::start(const Frame& frame, const BoundingBox& init_box) {
  if (!init_box.valid() || !init_box.intersects(frame.width(), frame.height())) {
    throw ContractError("tracker: initial box must be valid and overlap the frame");
  }
  frame_w_ = frame.width();
  frame_h_ = frame.height();
  frame_idx_ = 0;
  box_ = init_box;
  buffer_.clear();
  auto samples =
      collect_update_samples(frame, init_box, rng_, extractor_, 0, cfg_, cfg_.init_positives, cfg_.init_negatives);
  buffer_.add(samples);
  trainer_->initialize(samples);
  started_ = true;
}

BoundingBox Tracker::step(const Frame& frame) {
  if (!started_) throw ContractError("tracker: step() before start()");
  if (frame.width() != frame_w_ || frame.height() != frame_h_) throw DimensionError("tracker: frame size changed");
  ++frame_idx_;
  last_candidates_ = sample_candidates(box_, cfg_.candidates, rng_, frame_w_, frame_h_, cfg_);
  score_candidates(trainer_->discriminator(), extractor_, frame, last_candidates_);
  box_ = clip_box(estimate_target(last_candidates_, cfg_.top_k), frame_w_, frame_h_, cfg_.min_side);

  buffer_.add(collect_update_samples(frame, box_, rng_, extractor_, frame_idx_, cfg_));
  buffer_.evict(frame_idx_);
  trainer_->periodic_update(buffer_, frame_idx_);
  return box_;
}

Trajectory track_sequence(std::span<const Frame> frames, const BoundingBox& init_box, const TrackerConfig& tracker_cfg,
                          const TrainConfig& train_cfg, const ExtractorConfig& extractor_cfg) {
  if (frames.empty()) throw ContractError("track_sequence: no frames");
  Tracker tracker(tracker_cfg, train_cfg, extractor_cfg);
  tracker.start(frames[0], init_box);
  Trajectory traj{init_box};
  traj.reserve(frames.size());
  for (std::size_t t = 1; t < frames.size(); ++t) traj.push_back(tracker.step(frames[t]));
  return traj;
}

}  // namespace vital
