#include "vital/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace vital {

namespace {

void check_lengths(std::span<const BoundingBox> traj, std::span<const BoundingBox> gt) {
  if (traj.size() != gt.size()) {
    throw DimensionError("trajectory has " + std::to_string(traj.size()) + " frames, ground truth " +
                         std::to_string(gt.size()));
  }
  if (traj.empty()) throw ContractError("cannot evaluate an empty trajectory");
}

constexpr int kSuccessSteps = 20;

}  // namespace

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

double center_error(const BoundingBox& a, const BoundingBox& b) { return std::hypot(a.cx() - b.cx(), a.cy() - b.cy()); }

Curve precision_curve(std::span<const BoundingBox> traj, std::span<const BoundingBox> gt, int max_px) {
  check_lengths(traj, gt);
  std::vector<double> errors(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) errors[i] = center_error(traj[i], gt[i]);
  Curve curve;
  for (int t = 0; t <= max_px; ++t) {
    const auto hits = std::count_if(errors.begin(), errors.end(), [t](double e) { return e <= t; });
    curve.thresholds.push_back(t);
    curve.values.push_back(static_cast<double>(hits) / static_cast<double>(errors.size()));
  }
  return curve;
}

double precision_at(std::span<const BoundingBox> traj, std::span<const BoundingBox> gt, double px) {
  check_lengths(traj, gt);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) hits += center_error(traj[i], gt[i]) <= px ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(traj.size());
}

Curve success_curve(std::span<const BoundingBox> traj, std::span<const BoundingBox> gt) {
  check_lengths(traj, gt);
  std::vector<double> overlaps(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) overlaps[i] = iou(traj[i], gt[i]);
  Curve curve;
  for (int i = 0; i <= kSuccessSteps; ++i) {
    const double t = static_cast<double>(i) / kSuccessSteps;
    const auto hits = std::count_if(overlaps.begin(), overlaps.end(), [t](double o) { return o > t; });
    curve.thresholds.push_back(t);
    curve.values.push_back(static_cast<double>(hits) / static_cast<double>(overlaps.size()));
  }
  return curve;
}

double success_auc(std::span<const BoundingBox> traj, std::span<const BoundingBox> gt) {
  const Curve c = success_curve(traj, gt);
  double total = 0.0;
  for (double v : c.values) total += v;
  return total / static_cast<double>(c.values.size());
}

EvalReport evaluate(std::span<const BoundingBox> traj, std::span<const BoundingBox> gt) {
  EvalReport r;
  r.precision = precision_curve(traj, gt);
  r.precision_20 = precision_at(traj, gt, 20.0);
  r.success = success_curve(traj, gt);
  r.success_auc = success_auc(traj, gt);
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["precision"] = {{"thresholds", precision.thresholds}, {"values", precision.values}};
  j["precision_20"] = precision_20;
  j["success"] = {{"thresholds", success.thresholds}, {"values", success.values}};
  j["success_auc"] = success_auc;
  j["per_challenge"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : per_challenge) j["per_challenge"][k] = v;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "index,precision_threshold_px,precision,success_threshold_iou,success\n";
  const std::size_t rows = std::max(precision.values.size(), success.values.size());
  for (std::size_t i = 0; i < rows; ++i) {
    os << i << ',';
    if (i < precision.values.size()) os << precision.thresholds[i] << ',' << precision.values[i];
    else os << ',';
    os << ',';
    if (i < success.values.size()) os << success.thresholds[i] << ',' << success.values[i];
    else os << ',';
    os << '\n';
  }
  return os.str();
}

double EntropyMap::mean_inside(const BoundingBox& region) const {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const double cx = windows[i].cx(), cy = windows[i].cy();
    if (cx >= region.x && cx <= region.x + region.w && cy >= region.y && cy <= region.y + region.h) {
      total += values[i];
      ++n;
    }
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

std::string EntropyMap::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) os << (c ? "," : "") << at(r, c);
    os << '\n';
  }
  return os.str();
}

EntropyMap entropy_map(const Discriminator& d, const FeatureExtractor& extractor, const Frame& frame,
                       double window_w, double window_h, int grid_step) {
  if (grid_step <= 0) throw ContractError("entropy_map: grid_step must be positive");
  if (!(window_w > 0.0 && window_h > 0.0) || window_w > frame.width() || window_h > frame.height()) {
    throw ContractError("entropy_map: window must fit inside the frame");
  }
  EntropyMap map;
  map.step = grid_step;
  map.window_w = window_w;
  map.window_h = window_h;
  for (int y = 0; y + window_h <= frame.height(); y += grid_step) {
    ++map.rows;
    int cols = 0;
    for (int x = 0; x + window_w <= frame.width(); x += grid_step) {
      map.windows.push_back({static_cast<double>(x), static_cast<double>(y), window_w, window_h});
      ++cols;
    }
    map.cols = cols;
  }
  auto probs = d.probabilities(extractor.extract_batch(frame, map.windows));
  map.values.reserve(probs.size());
  for (double p : probs) map.values.push_back(entropy(p));
  return map;
}

}  // namespace vital
