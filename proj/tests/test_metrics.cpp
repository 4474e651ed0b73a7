#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "helpers.hpp"
#include "vital/metrics.hpp"

using namespace vital;

namespace {

/// Pixel-set oracle for integer boxes.
double pixel_iou(int ax, int ay, int aw, int ah, int bx, int by, int bw, int bh) {
  long inter = 0;
  for (int y = std::min(ay, by); y < std::max(ay + ah, by + bh); ++y) {
    for (int x = std::min(ax, bx); x < std::max(ax + aw, bx + bw); ++x) {
      const bool in_a = x >= ax && x < ax + aw && y >= ay && y < ay + ah;
      const bool in_b = x >= bx && x < bx + bw && y >= by && y < by + bh;
      inter += in_a && in_b;
    }
  }
  const long uni = static_cast<long>(aw) * ah + static_cast<long>(bw) * bh - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Trajectory shifted(const Trajectory& gt, double dx, double dy) {
  Trajectory t = gt;
  for (auto& b : t) {
    b.x += dx;
    b.y += dy;
  }
  return t;
}

}  // namespace

TEST_CASE("iou examples and pixel oracle") {
  const BoundingBox a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, {20, 20, 5, 5}) == 0.0);
  CHECK(iou(a, {10, 0, 10, 10}) == 0.0);
  CHECK(iou(a, {5, 0, 10, 10}) == 1.0 / 3.0);
  Rng rng(1);
  std::uniform_int_distribution<int> pos(0, 20), size(1, 12);
  for (int i = 0; i < 300; ++i) {
    const int ax = pos(rng), ay = pos(rng), aw = size(rng), ah = size(rng);
    const int bx = pos(rng), by = pos(rng), bw = size(rng), bh = size(rng);
    const BoundingBox p{double(ax), double(ay), double(aw), double(ah)}, q{double(bx), double(by), double(bw), double(bh)};
    CHECK(iou(p, q) == pixel_iou(ax, ay, aw, ah, bx, by, bw, bh));
    CHECK(iou(p, q) == iou(q, p));
  }
}

TEST_CASE("center error") {
  const BoundingBox a{0, 0, 10, 10};
  CHECK(center_error(a, a) == 0.0);
  CHECK(center_error(a, {3, 4, 10, 10}) == 5.0);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto v = testutil::uniform(8, 1, 30, rng);
    const BoundingBox p{v[0], v[1], v[2], v[3]}, q{v[4], v[5], v[6], v[7]};
    const double dx = (p.x + p.w / 2) - (q.x + q.w / 2), dy = (p.y + p.h / 2) - (q.y + q.h / 2);
    CHECK(center_error(p, q) == std::hypot(dx, dy));
  }
}

TEST_CASE("precision examples") {
  const Trajectory gt = {{0, 0, 10, 10}, {5, 5, 10, 10}, {9, 1, 10, 10}};
  const auto perfect = precision_curve(gt, gt);
  CHECK(perfect.values.size() == 51);
  for (double v : perfect.values) CHECK(v == 1.0);

  const auto off = shifted(gt, 15, 20);
  CHECK(precision_at(off, gt, 20) == 0.0);
  CHECK(precision_at(off, gt, 25) == 1.0);

  Trajectory mixed = {shifted({gt[0]}, 3, 4)[0], shifted({gt[1]}, 9, 12)[0], shifted({gt[2]}, 18, 24)[0]};
  CHECK(precision_at(mixed, gt) == 2.0 / 3.0);
  CHECK_THROWS_AS(precision_at(mixed, Trajectory{gt[0]}), DimensionError);
}

TEST_CASE("success examples") {
  const Trajectory gt = {{0, 0, 10, 10}, {5, 5, 10, 10}, {9, 1, 10, 10}};
  CHECK(success_auc(gt, gt) == 20.0 / 21.0);
  CHECK(success_auc(shifted(gt, 100, 0), gt) == 0.0);
  // Horizontal shift of w/3 at equal size gives IoU (2/3)/(4/3) = 1/2.
  const Trajectory half = {{0, 0, 12, 10}, {4, 0, 12, 10}};
  const Trajectory half_gt = {{4, 0, 12, 10}, {0, 0, 12, 10}};
  CHECK(iou(half[0], half_gt[0]) == 0.5);
  CHECK(success_auc(half, half_gt) == 10.0 / 21.0);
  const auto curve = success_curve(half, half_gt);
  CHECK(curve.thresholds.size() == 21);
  CHECK_THROWS_AS(success_auc(Trajectory{}, Trajectory{}), ContractError);
}

TEST_CASE("curves are monotone and bounded") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Trajectory gt, tr;
    for (int i = 0; i < 30; ++i) {
      const auto v = testutil::uniform(6, 0, 40, rng);
      gt.push_back({v[0], v[1], 5 + v[2] / 4, 5 + v[3] / 4});
      tr.push_back({v[0] + v[4] - 20, v[1] + v[5] - 20, 5 + v[2] / 4, 5 + v[3] / 4});
    }
    const auto r = evaluate(tr, gt);
    for (std::size_t i = 1; i < r.precision.values.size(); ++i) CHECK(r.precision.values[i] >= r.precision.values[i - 1]);
    for (std::size_t i = 1; i < r.success.values.size(); ++i) CHECK(r.success.values[i] <= r.success.values[i - 1]);
    CHECK((r.success_auc >= 0.0 && r.success_auc <= 1.0));
    const auto again = evaluate(tr, gt);
    CHECK(again.to_json() == r.to_json());
  }
}

TEST_CASE("report serialization") {
  const Trajectory gt = {{0, 0, 10, 10}, {5, 5, 10, 10}};
  const auto r = evaluate(shifted(gt, 1, 0), gt);
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["precision_20"].get<double>() == r.precision_20);
  CHECK(j["success_auc"].get<double>() == r.success_auc);
  CHECK(j["precision"]["values"].size() == 51);
  CHECK(j["success"]["values"].size() == 21);
  const auto csv = r.to_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 52);
}

TEST_CASE("entropy map of a constant D is ln 2 everywhere") {
  Rng rng(4);
  NetworkShape shape;
  Discriminator d(shape, rng);
  testutil::set_params(d, 0.0, 0.0);
  const Frame frame(32, 32, testutil::uniform(32 * 32, 0, 1, rng));
  const auto map = entropy_map(d, FeatureExtractor{}, frame, 16, 16, 4);
  CHECK(map.rows == 5);
  CHECK(map.cols == 5);
  for (double v : map.values) CHECK(std::abs(v - std::log(2.0)) < 1e-12);
  CHECK(map.mean_inside({0, 0, 32, 32}) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(entropy_map(d, FeatureExtractor{}, frame, 40, 16, 4), ContractError);
}

TEST_CASE("entropy map values stay in [0, ln 2]") {
  Rng rng(5);
  NetworkShape shape;
  Discriminator d(shape, rng);
  const Frame frame(40, 40, testutil::uniform(1600, 0, 1, rng));
  const auto map = entropy_map(d, FeatureExtractor{}, frame, 12, 20, 3);
  CHECK(map.values.size() == static_cast<std::size_t>(map.rows * map.cols));
  for (double v : map.values) CHECK((v >= 0.0 && v <= std::log(2.0)));
}
