#include "vital/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vital::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto t = trim(s);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) throw IoError("not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto t = trim(s);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) throw IoError("not an unsigned integer: '" + s + "'");
  return v;
}

int pgm_token(std::istream& in) {
  std::string tok;
  while (in >> tok) {
    if (tok[0] == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    return std::stoi(tok);
  }
  throw IoError("truncated PGM header");
}

}  // namespace

void write_pgm(const fs::path& path, const Frame& frame) {
  std::string data = "P5\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n255\n";
  data.reserve(data.size() + frame.pixels().size());
  for (double v : frame.pixels()) data.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  write_file_atomic(path, data);
}

Frame read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw IoError(path.string() + ": not a binary PGM");
  const int w = pgm_token(in);
  const int h = pgm_token(in);
  const int maxval = pgm_token(in);
  if (maxval != 255) throw IoError(path.string() + ": only 8-bit PGM is supported");
  in.get();  // single whitespace before the raster
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw IoError(path.string() + ": truncated raster");
  std::vector<double> px(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) px[i] = raw[i] / 255.0;
  return Frame(w, h, std::move(px));
}

Frame quantize(const Frame& frame) {
  std::vector<double> px(frame.pixels().begin(), frame.pixels().end());
  for (auto& v : px) v = static_cast<double>(std::lround(v * 255.0)) / 255.0;
  return Frame(frame.width(), frame.height(), std::move(px));
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_box(const BoundingBox& b) {
  return format_number(b.x) + "," + format_number(b.y) + "," + format_number(b.w) + "," + format_number(b.h);
}

BoundingBox parse_box(const std::string& line) {
  std::string norm = line;
  std::replace(norm.begin(), norm.end(), '\t', ',');
  std::vector<std::string> parts;
  std::stringstream ss(norm);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  if (parts.size() != 4) throw IoError("expected x,y,w,h but got '" + line + "'");
  return {parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2]), parse_double(parts[3])};
}

void write_boxes(const fs::path& path, std::span<const BoundingBox> boxes) {
  std::string out;
  for (const auto& b : boxes) out += format_box(b) + "\n";
  write_file_atomic(path, out);
}

std::vector<BoundingBox> read_boxes(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<BoundingBox> boxes;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    boxes.push_back(parse_box(trim(line)));
  }
  return boxes;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string spec_to_text(const SequenceSpec& s) {
  std::ostringstream os;
  os << "name = " << s.name << '\n'
     << "frame_w = " << s.frame_w << '\n'
     << "frame_h = " << s.frame_h << '\n'
     << "length = " << s.length << '\n'
     << "target_w = " << s.target_w << '\n'
     << "target_h = " << s.target_h << '\n'
     << "start_x = " << format_number(s.start_x) << '\n'
     << "start_y = " << format_number(s.start_y) << '\n'
     << "vx = " << format_number(s.vx) << '\n'
     << "vy = " << format_number(s.vy) << '\n'
     << "jitter_std = " << format_number(s.jitter_std) << '\n'
     << "clutter_density = " << format_number(s.clutter_density) << '\n'
     << "noise_std = " << format_number(s.noise_std) << '\n'
     << "texture_seed = " << s.texture_seed << '\n'
     << "seed = " << s.seed << '\n'
     << "occluder_side = " << to_string(s.occluder_side) << '\n';
  for (const auto& ch : s.schedule) {
    os << "challenge = " << to_string(ch.kind) << ',' << ch.first << ',' << ch.last << ','
       << format_number(ch.intensity) << '\n';
  }
  return os.str();
}

SequenceSpec spec_from_text(const std::string& text) {
  SequenceSpec s;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("sequence.cfg: expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "name") s.name = value;
    else if (key == "frame_w") s.frame_w = static_cast<int>(parse_double(value));
    else if (key == "frame_h") s.frame_h = static_cast<int>(parse_double(value));
    else if (key == "length") s.length = static_cast<int>(parse_double(value));
    else if (key == "target_w") s.target_w = static_cast<int>(parse_double(value));
    else if (key == "target_h") s.target_h = static_cast<int>(parse_double(value));
    else if (key == "start_x") s.start_x = parse_double(value);
    else if (key == "start_y") s.start_y = parse_double(value);
    else if (key == "vx") s.vx = parse_double(value);
    else if (key == "vy") s.vy = parse_double(value);
    else if (key == "jitter_std") s.jitter_std = parse_double(value);
    else if (key == "clutter_density") s.clutter_density = parse_double(value);
    else if (key == "noise_std") s.noise_std = parse_double(value);
    else if (key == "texture_seed") s.texture_seed = parse_u64(value);
    else if (key == "seed") s.seed = parse_u64(value);
    else if (key == "occluder_side") s.occluder_side = parse_occluder_side(value);
    else if (key == "challenge") {
      std::vector<std::string> parts;
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) parts.push_back(trim(item));
      if (parts.size() != 4) throw IoError("sequence.cfg: challenge needs kind,first,last,intensity");
      s.schedule.push_back({static_cast<int>(parse_double(parts[1])), static_cast<int>(parse_double(parts[2])),
                            parse_challenge(parts[0]), parse_double(parts[3])});
    } else {
      throw IoError("sequence.cfg: unknown key '" + key + "'");
    }
  }
  return s;
}

void save_sequence(const fs::path& dir, const Sequence& seq) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "%04zu.pgm", t);
    write_pgm(dir / name, seq.frames[t]);
  }
  write_boxes(dir / "groundtruth.txt", seq.ground_truth);
  write_file_atomic(dir / "sequence.cfg", spec_to_text(seq.spec));
}

LoadedSequence load_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  LoadedSequence out;
  out.name = dir.filename().string();
  std::vector<fs::path> frames;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") frames.push_back(e.path());
  }
  std::sort(frames.begin(), frames.end());
  if (frames.empty()) throw IoError(dir.string() + " contains no .pgm frames");
  for (const auto& f : frames) out.frames.push_back(read_pgm(f));
  if (fs::exists(dir / "groundtruth.txt")) out.ground_truth = read_boxes(dir / "groundtruth.txt");
  if (fs::exists(dir / "sequence.cfg")) {
    out.spec = spec_from_text(read_file(dir / "sequence.cfg"));
    out.name = out.spec->name;
  }
  return out;
}

std::vector<fs::path> list_sequences(const fs::path& suite_dir) {
  if (!fs::is_directory(suite_dir)) throw IoError(suite_dir.string() + " is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(suite_dir)) {
    if (!e.is_directory()) continue;
    bool has_frames = false;
    for (const auto& f : fs::directory_iterator(e.path())) {
      if (f.path().extension() == ".pgm") {
        has_frames = true;
        break;
      }
    }
    if (has_frames) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

}  // namespace vital::io
