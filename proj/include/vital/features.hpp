#pragma once

// Frames, boxes, patch cropping and the fixed convolutional feature bank that
// turns a patch into a K x 3 x 3 feature map.

#include <cstdint>
#include <span>
#include <vector>

#include "vital/tensor.hpp"

namespace vital {

/// Grayscale image, intensities in [0, 1], row-major.
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, std::vector<double> pixels);
  /// Constant-intensity frame.
  Frame(int width, int height, double value);

  int width() const { return width_; }
  int height() const { return height_; }
  std::span<const double> pixels() const { return pixels_; }
  double at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  /// Zero outside the frame.
  double at_or_zero(int x, int y) const;

  bool operator==(const Frame&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// Axis-aligned box; (x, y) is the top-left corner in pixels.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const { return w > 0.0 && h > 0.0; }
  /// Positive-area overlap with a width x height frame.
  bool intersects(int width, int height) const;

  bool operator==(const BoundingBox&) const = default;
};

/// Channels x height x width feature block, row-major.
struct FeatureMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  std::size_t cells() const { return height * width; }
  double at(std::size_t k, std::size_t i, std::size_t j) const { return values[(k * height + i) * width + j]; }
  ad::Tensor tensor() const;

  bool operator==(const FeatureMap&) const = default;
};

/// Resamples `box` to an out_side x out_side patch with bilinear
/// interpolation; samples that fall outside the frame read as zero.
/// Throws OutOfBoundsError when the box does not overlap the frame.
std::vector<double> crop_resize(const Frame& frame, const BoundingBox& box, int out_side);

struct ExtractorConfig {
  int patch_side = 24;
  int kernel = 8;  // also the stride
  int channels = 32;
  double filter_gain = 20.0;
  std::uint64_t seed = 0x5eedf00dULL;

  int grid() const { return patch_side / kernel; }
  std::size_t feature_size() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(grid() * grid());
  }
};

/// Fixed bank of seeded random filters applied with stride equal to the
/// kernel size, followed by relu. No bias, so a zero patch maps to zero.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(ExtractorConfig config = {});

  const ExtractorConfig& config() const { return config_; }
  /// Filter k as kernel x kernel weights, row-major.
  std::span<const double> filter(int k) const;

  FeatureMap extract(std::span<const double> patch) const;
  FeatureMap extract(const Frame& frame, const BoundingBox& box) const;
  /// N x K x H x W tensor of features for a list of boxes.
  ad::Tensor extract_batch(const Frame& frame, std::span<const BoundingBox> boxes) const;

 private:
  void extract_into(std::span<const double> patch, double* out) const;

  ExtractorConfig config_;
  std::vector<double> filters_;  // channels x kernel*kernel
};

/// Stacks feature maps into an N x K x H x W tensor.
ad::Tensor stack_features(std::span<const FeatureMap> maps);

}  // namespace vital
