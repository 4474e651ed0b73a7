#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vital/config.hpp"
#include "vital/experiment.hpp"
#include "vital/synth.hpp"
#include "vital/tracker.hpp"

using namespace vital;

namespace {

RunConfig full_config(std::uint64_t seed = 1) {
  RunConfig c;
  c.seed = seed;
  c.finalize();
  apply_arm(c.train, Arm::full);
  return c;
}

SequenceSpec static_spec() {
  SequenceSpec s;
  s.name = "static";
  s.length = 20;
  s.noise_std = 0.0;
  s.texture_seed = 17;
  s.seed = 5;
  return s;
}

}  // namespace

TEST_CASE("zero spread returns the previous box") {
  Rng rng(1);
  TrackerConfig cfg;
  cfg.center_std = 0.0;
  cfg.scale_std = 0.0;
  const BoundingBox prev{10, 12, 16, 20};
  const auto set = sample_candidates(prev, 1, rng, 64, 64, cfg);
  CHECK(set.boxes.size() == 1);
  CHECK(set.boxes[0] == prev);
  CHECK_THROWS_AS(sample_candidates(prev, 0, rng, 64, 64), ContractError);
}

TEST_CASE("candidates always intersect the frame") {
  Rng rng(2);
  for (const BoundingBox prev : {BoundingBox{0, 0, 16, 16}, BoundingBox{55, 58, 16, 16}, BoundingBox{-10, 30, 20, 12}}) {
    for (const auto& b : sample_candidates(prev, 500, rng, 64, 64).boxes) CHECK(b.intersects(64, 64));
  }
}

TEST_CASE("candidate centers have std 0.3 mean(w, h)") {
  Rng rng(3);
  const BoundingBox prev{5000, 5000, 20, 30};
  const auto set = sample_candidates(prev, 100000, rng, 10000, 10000);
  double sx = 0, sxx = 0, sy = 0, syy = 0;
  for (const auto& b : set.boxes) {
    sx += b.cx();
    sxx += b.cx() * b.cx();
    sy += b.cy();
    syy += b.cy() * b.cy();
  }
  const double n = static_cast<double>(set.boxes.size());
  const double std_x = std::sqrt(sxx / n - (sx / n) * (sx / n));
  const double std_y = std::sqrt(syy / n - (sy / n) * (sy / n));
  const double want = 0.3 * 25.0;
  CHECK(std::abs(std_x - want) / want < 0.05);
  CHECK(std::abs(std_y - want) / want < 0.05);
}

TEST_CASE("estimate_target examples") {
  CandidateSet one{{{1, 2, 3, 4}}, {0.7}};
  CHECK(estimate_target(one) == BoundingBox{1, 2, 3, 4});

  CandidateSet same;
  for (int i = 0; i < 5; ++i) same.boxes.push_back({7, 8, 9, 10});
  same.boxes.push_back({100, 100, 1, 1});
  same.scores = {0.9, 0.9, 0.9, 0.9, 0.9, 0.1};
  CHECK(estimate_target(same) == BoundingBox{7, 8, 9, 10});

  CandidateSet six;
  six.boxes = {{0, 0, 10, 10}, {10, 0, 10, 10}, {20, 0, 10, 10}, {30, 0, 10, 10}, {40, 0, 10, 10}, {50, 0, 10, 10}};
  six.scores = {0.5, 0.9, 0.2, 0.8, 0.7, 0.6};  // top five exclude index 2
  const auto e = estimate_target(six);
  CHECK(e.x == doctest::Approx((0 + 10 + 30 + 40 + 50) / 5.0));
  CHECK(e.w == doctest::Approx(10.0));

  CandidateSet tied;
  tied.boxes = {{0, 0, 4, 4}, {6, 0, 4, 4}, {12, 0, 4, 4}};
  tied.scores = {0.5, 0.5, 0.5};
  CHECK(estimate_target(tied, 1) == BoundingBox{0, 0, 4, 4});

  CHECK_THROWS_AS(estimate_target(CandidateSet{}), ContractError);
  CandidateSet unscored{{{0, 0, 4, 4}}, {}};
  CHECK_THROWS_AS(estimate_target(unscored), ContractError);
}

TEST_CASE("update samples satisfy their IoU bands") {
  Rng rng(4);
  const Frame frame(64, 64, 0.5);
  const BoundingBox est{20, 20, 16, 16};
  const auto boxes = draw_labeled_boxes(frame, est, 50, 200, rng);
  CHECK(boxes.positives.size() == 50);
  CHECK(boxes.negatives.size() == 200);
  for (const auto& b : boxes.positives) CHECK(iou(b, est) >= 0.7);
  for (const auto& b : boxes.negatives) CHECK(iou(b, est) <= 0.3);
  CHECK(iou(est, est) >= 0.7);
  CHECK(iou(est, {40, 40, 16, 16}) <= 0.3);
  const double half = iou(est, {28, 20, 16, 16});
  CHECK(half == doctest::Approx(1.0 / 3.0));
  CHECK(half < 0.7);
  CHECK(half > 0.3);

  const auto labeled = collect_update_samples(frame, est, rng, FeatureExtractor{}, 3);
  int pos = 0;
  for (const auto& s : labeled) {
    pos += s.label;
    CHECK(s.frame == 3);
  }
  CHECK(pos == 50);
  CHECK(labeled.size() == 250u);
}

TEST_CASE("an unfillable class returns a partial set") {
  Rng rng(5);
  const Frame frame(16, 16, 0.5);
  TrackerConfig cfg;
  cfg.oversample = 1;
  // A box covering the whole frame leaves no room for IoU <= 0.3 negatives.
  const auto boxes = draw_labeled_boxes(frame, {0, 0, 16, 16}, 5, 50, rng, cfg);
  CHECK(boxes.negatives.size() < 50);
  CHECK_THROWS_AS(draw_labeled_boxes(frame, {40, 40, 4, 4}, 1, 1, rng), ContractError);
}

TEST_CASE("scoring ignores G and gives duplicates equal scores") {
  Rng rng(6);
  const RunConfig c = full_config();
  Tracker tracker(c.tracker, c.train, c.extractor);
  const auto seq = generate_sequence(static_spec());
  tracker.start(seq.frames[0], seq.ground_truth[0]);

  CandidateSet set;
  set.boxes = {{10, 10, 16, 16}, {10, 10, 16, 16}, seq.ground_truth[0], {0, 0, 16, 16}};
  score_candidates(tracker.trainer().discriminator(), tracker.extractor(), seq.frames[0], set);
  CHECK(set.scores[0] == set.scores[1]);
  for (double s : set.scores) CHECK((s > 0.0 && s < 1.0));

  testutil::set_params(tracker.trainer().generator(), 0.0, 0.0);
  CandidateSet again = set;
  score_candidates(tracker.trainer().discriminator(), tracker.extractor(), seq.frames[0], again);
  CHECK(again.scores == set.scores);
  Generator random_g(c.train.network, rng);
  tracker.trainer().generator() = random_g;
  score_candidates(tracker.trainer().discriminator(), tracker.extractor(), seq.frames[0], again);
  CHECK(again.scores == set.scores);
}

TEST_CASE("trained D prefers the target over far background") {
  const RunConfig c = full_config(2);
  const auto seq = generate_sequence(static_spec());
  Tracker tracker(c.tracker, c.train, c.extractor);
  tracker.start(seq.frames[0], seq.ground_truth[0]);
  const auto& d = tracker.trainer().discriminator();
  const double target = d.probability(tracker.extractor().extract(seq.frames[0], seq.ground_truth[0]));
  const double far = d.probability(tracker.extractor().extract(seq.frames[0], {46, 46, 16, 16}));
  CHECK(target > far);
}

TEST_CASE("static sequence is tracked with IoU >= 0.8 throughout") {
  const RunConfig c = full_config(3);
  SequenceSpec spec = static_spec();
  spec.jitter_std = 0.0;
  const auto seq = generate_sequence(spec);
  const auto traj = track_sequence(seq.frames, seq.ground_truth[0], c.tracker, c.train, c.extractor);
  REQUIRE(traj.size() == seq.frames.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    CHECK(iou(traj[t], seq.ground_truth[t]) >= 0.8);
    CHECK(traj[t].intersects(64, 64));
  }
}

TEST_CASE("single frame trajectory and determinism") {
  const RunConfig c = full_config(4);
  const auto seq = generate_sequence(static_spec());
  const std::vector<Frame> one = {seq.frames[0]};
  const auto single = track_sequence(one, seq.ground_truth[0], c.tracker, c.train, c.extractor);
  CHECK(single == Trajectory{seq.ground_truth[0]});

  const std::vector<Frame> few(seq.frames.begin(), seq.frames.begin() + 12);
  const auto a = track_sequence(few, seq.ground_truth[0], c.tracker, c.train, c.extractor);
  const auto b = track_sequence(few, seq.ground_truth[0], c.tracker, c.train, c.extractor);
  CHECK(a == b);
}

TEST_CASE("tracker rejects misuse") {
  const RunConfig c = full_config();
  Tracker tracker(c.tracker, c.train, c.extractor);
  CHECK_THROWS_AS(tracker.step(Frame(64, 64, 0.5)), ContractError);
  CHECK_THROWS_AS(tracker.start(Frame(64, 64, 0.5), {100, 100, 5, 5}), ContractError);
  TrainConfig wrong = c.train;
  wrong.network.channels = 3;
  CHECK_THROWS_AS(Tracker(c.tracker, wrong, c.extractor), ConfigError);
  TrackerConfig bad = c.tracker;
  bad.positive_iou = 0.2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
