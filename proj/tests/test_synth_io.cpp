#include <doctest.h>

#include <filesystem>
#include <set>

#include "helpers.hpp"
#include "vital/io.hpp"
#include "vital/metrics.hpp"
#include "vital/synth.hpp"

using namespace vital;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vital_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("static spec keeps every ground-truth box identical") {
  SequenceSpec s;
  s.length = 15;
  const auto seq = generate_sequence(s);
  CHECK(seq.frames.size() == 15);
  for (const auto& b : seq.ground_truth) CHECK(b == seq.ground_truth[0]);
}

TEST_CASE("occlusion changes pixels only inside the occluder") {
  const SequenceSpec spec = occlusion_fixture(3);
  const auto occluded = generate_sequence(spec);
  const auto clean = generate_sequence_without_occlusion(spec);
  bool any_diff = false;
  for (int t = 0; t < spec.length; ++t) {
    const auto region = occluder_region(spec, occluded.ground_truth[static_cast<std::size_t>(t)], t);
    const auto& a = occluded.frames[static_cast<std::size_t>(t)];
    const auto& b = clean.frames[static_cast<std::size_t>(t)];
    for (int y = 0; y < spec.frame_h; ++y) {
      for (int x = 0; x < spec.frame_w; ++x) {
        if (a.at(x, y) == b.at(x, y)) continue;
        any_diff = true;
        const bool inside = x + 0.5 > region.x && x + 0.5 < region.x + region.w && y + 0.5 > region.y && y + 0.5 < region.y + region.h;
        CHECK(inside);
      }
    }
  }
  CHECK(any_diff);
}

TEST_CASE("occluded fraction never exceeds the spec fraction") {
  for (double fraction : {0.2, 0.5, 0.6}) {
    SequenceSpec spec = occlusion_fixture(4, fraction);
    const auto seq = generate_sequence(spec);
    for (int t = 30; t <= 40; ++t) {
      const auto& gt = seq.ground_truth[static_cast<std::size_t>(t)];
      const auto r = occluder_region(spec, gt, t);
      CHECK(r.area() / gt.area() <= fraction + 1e-12);
      CHECK(r.area() > 0.0);
    }
    CHECK(occluder_region(spec, seq.ground_truth[0], 0).area() == 0.0);
  }
}

TEST_CASE("generation is deterministic") {
  const auto suite = standard_suite(7);
  const auto a = generate_sequence(suite[9]);
  const auto b = generate_sequence(suite[9]);
  CHECK(a.frames == b.frames);
  CHECK(a.ground_truth == b.ground_truth);
}

TEST_CASE("standard suite shape") {
  const auto suite = standard_suite(1);
  CHECK(suite.size() == 10);
  for (ChallengeKind k : {ChallengeKind::occlusion, ChallengeKind::in_plane_rotation, ChallengeKind::illumination,
                          ChallengeKind::background_clutter}) {
    int n = 0;
    for (const auto& s : suite) n += s.has(k);
    CHECK(n >= 2);
  }
  std::set<std::string> names;
  for (const auto& s : suite) {
    CHECK(s.length == 60);
    CHECK(s.frame_w == 64);
    CHECK(s.frame_h == 64);
    names.insert(s.name);
  }
  CHECK(names.size() == 10);
  const auto other = standard_suite(2);
  bool differs = false;
  for (std::size_t i = 0; i < suite.size(); ++i) differs = differs || suite[i].texture_seed != other[i].texture_seed;
  CHECK(differs);
}

TEST_CASE("target stays at least half inside the frame") {
  for (const auto& spec : standard_suite(11)) {
    const auto seq = generate_sequence(spec);
    const BoundingBox frame{0, 0, double(spec.frame_w), double(spec.frame_h)};
    for (const auto& b : seq.ground_truth) {
      const double inside = iou(b, frame) * (frame.area() + b.area()) / (1.0 + iou(b, frame));
      CHECK(inside / b.area() >= 0.5 - 1e-12);
    }
  }
}

TEST_CASE("spec validation") {
  SequenceSpec s;
  s.schedule = {{0, 5, ChallengeKind::occlusion, 0.7}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.schedule = {{0, 5, ChallengeKind::illumination, 2.5}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.schedule = {{5, 2, ChallengeKind::illumination, 1.0}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.schedule.clear();
  s.target_w = 100;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_THROWS_AS(parse_challenge("fog"), ConfigError);
  CHECK_THROWS_AS(parse_occluder_side("inside"), ConfigError);
  CHECK(parse_occluder_side(to_string(OccluderSide::marker)) == OccluderSide::marker);
}

TEST_CASE("frames stay in [0, 1] under every challenge") {
  for (const auto& spec : standard_suite(5)) {
    for (const auto& f : generate_sequence(spec).frames) {
      for (double v : f.pixels()) CHECK((v >= 0.0 && v <= 1.0));
    }
  }
}

TEST_CASE("PGM and sequence round trip at 8-bit precision") {
  const fs::path dir = scratch("roundtrip");
  const auto spec = standard_suite(3)[4];
  const auto seq = generate_sequence(spec);
  io::save_sequence(dir, seq);
  const auto loaded = io::load_sequence(dir);
  REQUIRE(loaded.frames.size() == seq.frames.size());
  for (std::size_t i = 0; i < seq.frames.size(); ++i) CHECK(loaded.frames[i] == io::quantize(seq.frames[i]));
  REQUIRE(loaded.ground_truth);
  CHECK(*loaded.ground_truth == seq.ground_truth);
  REQUIRE(loaded.spec);
  CHECK(io::spec_to_text(*loaded.spec) == io::spec_to_text(spec));
  fs::remove_all(dir);
}

TEST_CASE("a directory without groundtruth.txt still loads") {
  const fs::path dir = scratch("nogt");
  SequenceSpec spec;
  spec.length = 3;
  io::save_sequence(dir, generate_sequence(spec));
  fs::remove(dir / "groundtruth.txt");
  const auto loaded = io::load_sequence(dir);
  CHECK(loaded.frames.size() == 3);
  CHECK_FALSE(loaded.ground_truth);
  fs::remove_all(dir);
  CHECK_THROWS_AS(io::load_sequence(dir), IoError);
}

TEST_CASE("number and box formatting round trip") {
  Rng rng(9);
  for (double v : testutil::uniform(200, -1e3, 1e3, rng)) CHECK(std::stod(io::format_number(v)) == v);
  const BoundingBox b{1.25, -3.5, 16.0 / 3.0, 7.0};
  CHECK(io::parse_box(io::format_box(b)) == b);
  CHECK_THROWS_AS(io::parse_box("1,2,3"), IoError);
}

TEST_CASE("spec text round trip covers every field") {
  SequenceSpec s = standard_suite(8)[9];
  s.occluder_side = OccluderSide::top;
  const auto back = io::spec_from_text(io::spec_to_text(s));
  CHECK(io::spec_to_text(back) == io::spec_to_text(s));
  CHECK(back.occluder_side == OccluderSide::top);
  CHECK(back.schedule.size() == s.schedule.size());
  CHECK_THROWS_AS(io::spec_from_text("bogus = 1\n"), IoError);
}

TEST_CASE("atomic writes leave no temporary files") {
  const fs::path dir = scratch("atomic");
  io::write_file_atomic(dir / "a.txt", "hello\n");
  io::write_file_atomic(dir / "a.txt", "world\n");
  CHECK(io::read_file(dir / "a.txt") == "world\n");
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) files += e.is_regular_file();
  CHECK(files == 1);
  fs::remove_all(dir);
}
