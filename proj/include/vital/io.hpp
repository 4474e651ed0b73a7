#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vital/features.hpp"
#include "vital/synth.hpp"

namespace vital::io {

namespace fs = std::filesystem;

/// Binary 8-bit PGM (P5). Intensities are quantized as round(255 v).
void write_pgm(const fs::path& path, const Frame& frame);
Frame read_pgm(const fs::path& path);

/// Frame with every intensity snapped to the 8-bit grid.
Frame quantize(const Frame& frame);

/// Shortest decimal form that reads back to the same double.
std::string format_number(double v);
std::string format_box(const BoundingBox& b);
BoundingBox parse_box(const std::string& line);

/// One "x,y,w,h" line per box.
void write_boxes(const fs::path& path, std::span<const BoundingBox> boxes);
std::vector<BoundingBox> read_boxes(const fs::path& path);

/// Writes `contents` to a temporary sibling and renames it into place.
void write_file_atomic(const fs::path& path, const std::string& contents);
std::string read_file(const fs::path& path);

struct LoadedSequence {
  std::string name;
  std::vector<Frame> frames;
  std::optional<std::vector<BoundingBox>> ground_truth;
  std::optional<SequenceSpec> spec;
};

/// Writes NNNN.pgm frames, groundtruth.txt and sequence.cfg into `dir`.
void save_sequence(const fs::path& dir, const Sequence& seq);
LoadedSequence load_sequence(const fs::path& dir);
/// Subdirectories of `suite_dir` that hold sequences, sorted by name.
std::vector<fs::path> list_sequences(const fs::path& suite_dir);

std::string spec_to_text(const SequenceSpec& spec);
SequenceSpec spec_from_text(const std::string& text);

}  // namespace vital::io
