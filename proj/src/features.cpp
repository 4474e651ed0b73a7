#include "vital/features.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace vital {

Frame::Frame(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 16 || height < 16) throw ConfigError("frame must be at least 16x16");
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DimensionError("frame pixel count does not match " + std::to_string(width) + "x" + std::to_string(height));
  }
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("frame intensities must lie in [0, 1]");
  }
}

Frame::Frame(int width, int height, double value)
    : Frame(width, height, std::vector<double>(static_cast<std::size_t>(width) * height, value)) {}

double Frame::at_or_zero(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return 0.0;
  return at(x, y);
}

bool BoundingBox::intersects(int width, int height) const {
  const double ix = std::min(x + w, static_cast<double>(width)) - std::max(x, 0.0);
  const double iy = std::min(y + h, static_cast<double>(height)) - std::max(y, 0.0);
  return ix > 0.0 && iy > 0.0;
}

ad::Tensor FeatureMap::tensor() const { return ad::Tensor::constant({channels, height, width}, values); }

std::vector<double> crop_resize(const Frame& frame, const BoundingBox& box, int out_side) {
  if (out_side <= 0) throw ContractError("crop_resize: out_side must be positive");
  if (!box.valid()) throw ContractError("crop_resize: box must have positive size");
  if (!box.intersects(frame.width(), frame.height())) throw OutOfBoundsError("crop_resize: box lies outside the frame");

  std::vector<double> patch(static_cast<std::size_t>(out_side) * out_side);
  const double sx = box.w / out_side;
  const double sy = box.h / out_side;
  for (int v = 0; v < out_side; ++v) {
    // Pixel-center convention: output sample v covers source row y + (v + 0.5) * sy.
    const double fy = box.y + (v + 0.5) * sy - 0.5;
    const double y0f = std::floor(fy);
    const int y0 = static_cast<int>(y0f);
    const double ty = fy - y0f;
    for (int u = 0; u < out_side; ++u) {
      const double fx = box.x + (u + 0.5) * sx - 0.5;
      const double x0f = std::floor(fx);
      const int x0 = static_cast<int>(x0f);
      const double tx = fx - x0f;
      double value = 0.0;
      if (tx == 0.0 && ty == 0.0) {
        value = frame.at_or_zero(x0, y0);
      } else {
        value = (1.0 - ty) * ((1.0 - tx) * frame.at_or_zero(x0, y0) + tx * frame.at_or_zero(x0 + 1, y0)) +
                ty * ((1.0 - tx) * frame.at_or_zero(x0, y0 + 1) + tx * frame.at_or_zero(x0 + 1, y0 + 1));
      }
      patch[static_cast<std::size_t>(v) * out_side + u] = value;
    }
  }
  return patch;
}

FeatureExtractor::FeatureExtractor(ExtractorConfig config) : config_(config) {
  if (config_.kernel <= 0 || config_.patch_side <= 0 || config_.patch_side % config_.kernel != 0) {
    throw ConfigError("extractor: patch_side must be a positive multiple of kernel");
  }
  if (config_.channels <= 0) throw ConfigError("extractor: channels must be positive");
  const std::size_t taps = static_cast<std::size_t>(config_.kernel) * config_.kernel;
  filters_.resize(taps * config_.channels);
  std::mt19937_64 rng(config_.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < config_.channels; ++k) {
    double* f = filters_.data() + k * taps;
    double mean = 0.0;
    for (std::size_t t = 0; t < taps; ++t) {
      f[t] = normal(rng);
      mean += f[t];
    }
    mean /= static_cast<double>(taps);
    // Zero-mean, unit-norm filters respond to texture rather than brightness.
    double norm = 0.0;
    for (std::size_t t = 0; t < taps; ++t) {
      f[t] -= mean;
      norm += f[t] * f[t];
    }
    norm = std::sqrt(norm);
    for (std::size_t t = 0; t < taps; ++t) f[t] *= config_.filter_gain / norm;
  }
}

std::span<const double> FeatureExtractor::filter(int k) const {
  const std::size_t taps = static_cast<std::size_t>(config_.kernel) * config_.kernel;
  return std::span<const double>(filters_).subspan(static_cast<std::size_t>(k) * taps, taps);
}

void FeatureExtractor::extract_into(std::span<const double> patch, double* out) const {
  const int side = config_.patch_side;
  const int kernel = config_.kernel;
  const int grid = config_.grid();
  const std::size_t taps = static_cast<std::size_t>(kernel) * kernel;
  if (patch.size() != static_cast<std::size_t>(side) * side) {
    throw ContractError("extract_features: expected a " + std::to_string(side) + "x" + std::to_string(side) + " patch");
  }
  std::vector<double> window(taps);
  for (int gi = 0; gi < grid; ++gi) {
    for (int gj = 0; gj < grid; ++gj) {
      for (int r = 0; r < kernel; ++r) {
        const double* row = patch.data() + static_cast<std::size_t>(gi * kernel + r) * side + gj * kernel;
        std::copy(row, row + kernel, window.begin() + r * kernel);
      }
      for (int k = 0; k < config_.channels; ++k) {
        const double* f = filters_.data() + k * taps;
        double acc = 0.0;
        for (std::size_t t = 0; t < taps; ++t) acc += f[t] * window[t];
        out[(static_cast<std::size_t>(k) * grid + gi) * grid + gj] = acc > 0.0 ? acc : 0.0;
      }
    }
  }
}

FeatureMap FeatureExtractor::extract(std::span<const double> patch) const {
  FeatureMap map;
  map.channels = static_cast<std::size_t>(config_.channels);
  map.height = map.width = static_cast<std::size_t>(config_.grid());
  map.values.resize(config_.feature_size());
  extract_into(patch, map.values.data());
  return map;
}

FeatureMap FeatureExtractor::extract(const Frame& frame, const BoundingBox& box) const {
  return extract(crop_resize(frame, box, config_.patch_side));
}

ad::Tensor FeatureExtractor::extract_batch(const Frame& frame, std::span<const BoundingBox> boxes) const {
  const std::size_t fs = config_.feature_size();
  std::vector<double> values(boxes.size() * fs);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    extract_into(crop_resize(frame, boxes[i], config_.patch_side), values.data() + i * fs);
  }
  const auto g = static_cast<std::size_t>(config_.grid());
  return ad::Tensor::constant({boxes.size(), static_cast<std::size_t>(config_.channels), g, g}, std::move(values));
}

ad::Tensor stack_features(std::span<const FeatureMap> maps) {
  if (maps.empty()) throw ContractError("stack_features: no feature maps");
  const auto& first = maps.front();
  std::vector<double> values;
  values.reserve(maps.size() * first.values.size());
  for (const auto& m : maps) {
    if (m.channels != first.channels || m.height != first.height || m.width != first.width) {
      throw DimensionError("stack_features: feature maps differ in shape");
    }
    values.insert(values.end(), m.values.begin(), m.values.end());
  }
  return ad::Tensor::constant({maps.size(), first.channels, first.height, first.width}, std::move(values));
}

}  // namespace vital
