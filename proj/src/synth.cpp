#include "vital/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vital/rng.hpp"

namespace vital {

namespace {

struct Texture {
  int w = 0;
  int h = 0;
  std::vector<double> v;
  double marker_x = 0.0;
  double marker_y = 0.0;

  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }

  /// Bilinear sample; false when (x, y) is outside the texture.
  bool sample(double x, double y, double& out) const {
    if (x < -0.5 || y < -0.5 || x > w - 0.5 || y > h - 0.5) return false;
    const double cx = std::clamp(x, 0.0, w - 1.0);
    const double cy = std::clamp(y, 0.0, h - 1.0);
    const int x0 = std::min(static_cast<int>(cx), w - 1);
    const int y0 = std::min(static_cast<int>(cy), h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double tx = cx - x0, ty = cy - y0;
    out = (1 - ty) * ((1 - tx) * at(x0, y0) + tx * at(x1, y0)) + ty * ((1 - tx) * at(x0, y1) + tx * at(x1, y1));
    return true;
  }
};

/// Two oriented sinusoids (the body) plus one compact high-contrast spot (the
/// marker) and noise, rescaled to [0.1, 0.9]. The marker is the most
/// distinctive part of the target; the body is only subtly different from the
/// textured background.
Texture make_texture(int w, int h, std::uint64_t seed) {
  Rng rng(splitmix64(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int kWaves = 2;
  double freq[kWaves], angle[kWaves], phase[kWaves], amp[kWaves];
  for (int k = 0; k < kWaves; ++k) {
    freq[k] = 0.15 + 0.15 * unit(rng);  // cycles per pixel
    angle[k] = std::numbers::pi * unit(rng);
    phase[k] = 2.0 * std::numbers::pi * unit(rng);
    amp[k] = 0.6 + 0.4 * unit(rng);
  }
  Texture t{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
  t.marker_x = (0.2 + 0.6 * unit(rng)) * (w - 1);
  t.marker_y = (0.2 + 0.6 * unit(rng)) * (h - 1);
  const double sigma = 0.12 * std::min(w, h);
  const double msign = unit(rng) < 0.5 ? -1.0 : 1.0;
  double lo = 1e300, hi = -1e300;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWaves; ++k) {
        s += amp[k] * std::sin(2.0 * std::numbers::pi * freq[k] * (x * std::cos(angle[k]) + y * std::sin(angle[k])) +
                               phase[k]);
      }
      const double r2 = ((x - t.marker_x) * (x - t.marker_x) + (y - t.marker_y) * (y - t.marker_y)) / (2.0 * sigma * sigma);
      s += msign * 3.0 * std::exp(-r2);
      s += 0.4 * (unit(rng) - 0.5);
      t.v[static_cast<std::size_t>(y) * w + x] = s;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  for (auto& x : t.v) x = 0.1 + 0.8 * (x - lo) / std::max(hi - lo, 1e-12);
  return t;
}

/// Mid-gray texture: slow shading plus mid-frequency stripes at the scale of
/// target detail, both scaled by `contrast`.
std::vector<double> make_pattern(int w, int h, double contrast, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double fx[6], fy[6], ph[6];
  for (int k = 0; k < 6; ++k) {
    // Three slow waves, then three at target-detail frequencies.
    const double f = k < 3 ? 0.06 * unit(rng) : 0.12 + 0.18 * unit(rng);
    const double a = std::numbers::pi * unit(rng);
    fx[k] = f * std::cos(a);
    fy[k] = f * std::sin(a);
    ph[k] = 2.0 * std::numbers::pi * unit(rng);
  }
  std::vector<double> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double slow = 0.0, mid = 0.0;
      for (int k = 0; k < 3; ++k) slow += std::sin(2.0 * std::numbers::pi * (fx[k] * x + fy[k] * y) + ph[k]) / 3.0;
      for (int k = 3; k < 6; ++k) mid += std::sin(2.0 * std::numbers::pi * (fx[k] * x + fy[k] * y) + ph[k]) / 3.0;
      const double n = 2.0 * unit(rng) - 1.0;
      out[static_cast<std::size_t>(y) * w + x] = std::clamp(0.5 + contrast * (0.15 * slow + 0.3 * mid + 0.1 * n), 0.0, 1.0);
    }
  }
  return out;
}

std::vector<double> make_background(const SequenceSpec& spec) {
  Rng rng(derive_seed(spec.seed, "background"));
  return make_pattern(spec.frame_w, spec.frame_h, spec.clutter_density, rng);
}

struct Walker {
  double x, y, vx, vy;
};

/// Bounces a box of size w x h so it stays inside the frame.
void advance(Walker& p, int w, int h, int frame_w, int frame_h, double jitter, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  p.x += p.vx + (jitter > 0.0 ? jitter * normal(rng) : 0.0);
  p.y += p.vy + (jitter > 0.0 ? jitter * normal(rng) : 0.0);
  const double max_x = frame_w - w, max_y = frame_h - h;
  if (p.x < 0.0) {
    p.x = -p.x;
    p.vx = -p.vx;
  }
  if (p.x > max_x) {
    p.x = 2.0 * max_x - p.x;
    p.vx = -p.vx;
  }
  if (p.y < 0.0) {
    p.y = -p.y;
    p.vy = -p.vy;
  }
  if (p.y > max_y) {
    p.y = 2.0 * max_y - p.y;
    p.vy = -p.vy;
  }
  p.x = std::clamp(p.x, 0.0, max_x);
  p.y = std::clamp(p.y, 0.0, max_y);
}

void blit(std::vector<double>& img, int frame_w, int frame_h, const Texture& tex, int ox, int oy, double degrees) {
  const double rad = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double hx = 0.5 * (tex.w - 1), hy = 0.5 * (tex.h - 1);
  for (int y = 0; y < tex.h; ++y) {
    const int fy = oy + y;
    if (fy < 0 || fy >= frame_h) continue;
    for (int x = 0; x < tex.w; ++x) {
      const int fx = ox + x;
      if (fx < 0 || fx >= frame_w) continue;
      double value;
      if (degrees == 0.0) {
        value = tex.at(x, y);
      } else {
        // Inverse rotation about the texture center.
        const double dx = x - hx, dy = y - hy;
        if (!tex.sample(c * dx + s * dy + hx, -s * dx + c * dy + hy, value)) continue;
      }
      img[static_cast<std::size_t>(fy) * frame_w + fx] = value;
    }
  }
}

double rotation_at(const SequenceSpec& spec, int t) {
  double angle = 0.0;
  for (const auto& ch : spec.schedule) {
    if (ch.kind != ChallengeKind::in_plane_rotation || t < ch.first) continue;
    angle += ch.intensity * (std::min(t, ch.last) - ch.first + 1);
  }
  return angle;
}

Sequence render(const SequenceSpec& spec, bool with_occlusion) {
  spec.validate();
  Sequence seq;
  seq.spec = spec;
  const Texture target = make_texture(spec.target_w, spec.target_h, spec.texture_seed);
  const std::vector<double> background = make_background(spec);

  int max_distractors = 0;
  for (const auto& ch : spec.schedule) {
    if (ch.kind == ChallengeKind::background_clutter) {
      max_distractors = std::max(max_distractors, static_cast<int>(std::lround(ch.intensity)));
    }
  }
  std::vector<Texture> distractor_tex;
  std::vector<Walker> distractors;
  Rng clutter_rng(derive_seed(spec.seed, "clutter"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < max_distractors; ++i) {
    distractor_tex.push_back(make_texture(spec.target_w, spec.target_h, derive_seed(spec.texture_seed, "distractor", i)));
    distractors.push_back({unit(clutter_rng) * (spec.frame_w - spec.target_w),
                           unit(clutter_rng) * (spec.frame_h - spec.target_h), (unit(clutter_rng) - 0.5) * 2.0,
                           (unit(clutter_rng) - 0.5) * 2.0});
  }

  Rng occ_rng(derive_seed(spec.seed, "occluder"));
  const Texture occluder{spec.frame_w, spec.frame_h, make_pattern(spec.frame_w, spec.frame_h, 1.0, occ_rng)};

  Rng motion_rng(derive_seed(spec.seed, "motion"));
  Walker pos{spec.start_x, spec.start_y, spec.vx, spec.vy};
  for (int t = 0; t < spec.length; ++t) {
    if (t > 0) advance(pos, spec.target_w, spec.target_h, spec.frame_w, spec.frame_h, spec.jitter_std, motion_rng);
    for (auto& d : distractors) advance(d, spec.target_w, spec.target_h, spec.frame_w, spec.frame_h, 0.0, clutter_rng);

    std::vector<double> img = background;
    int active_distractors = 0;
    double gain = 1.0;
    for (const auto& ch : spec.schedule) {
      if (!ch.active(t)) continue;
      if (ch.kind == ChallengeKind::background_clutter) {
        active_distractors = std::max(active_distractors, static_cast<int>(std::lround(ch.intensity)));
      } else if (ch.kind == ChallengeKind::illumination) {
        gain *= ch.intensity;
      }
    }
    for (int i = 0; i < active_distractors; ++i) {
      blit(img, spec.frame_w, spec.frame_h, distractor_tex[static_cast<std::size_t>(i)],
           static_cast<int>(std::lround(distractors[static_cast<std::size_t>(i)].x)),
           static_cast<int>(std::lround(distractors[static_cast<std::size_t>(i)].y)), 0.0);
    }
    const int tx = static_cast<int>(std::lround(pos.x));
    const int ty = static_cast<int>(std::lround(pos.y));
    const BoundingBox gt{static_cast<double>(tx), static_cast<double>(ty), static_cast<double>(spec.target_w),
                         static_cast<double>(spec.target_h)};
    blit(img, spec.frame_w, spec.frame_h, target, tx, ty, rotation_at(spec, t));

    if (with_occlusion) {
      const BoundingBox occ = occluder_region(spec, gt, t);
      for (int y = static_cast<int>(occ.y); y < static_cast<int>(occ.y + occ.h); ++y) {
        for (int x = static_cast<int>(occ.x); x < static_cast<int>(occ.x + occ.w); ++x) {
          img[static_cast<std::size_t>(y) * spec.frame_w + x] = occluder.at(x, y);
        }
      }
    }

    Rng noise_rng(derive_seed(spec.seed, "noise", static_cast<std::uint64_t>(t)));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (auto& v : img) {
      const double n = spec.noise_std > 0.0 ? spec.noise_std * noise(noise_rng) : 0.0;
      v = std::clamp(gain * v + n, 0.0, 1.0);
    }
    seq.frames.emplace_back(spec.frame_w, spec.frame_h, std::move(img));
    seq.ground_truth.push_back(gt);
  }
  return seq;
}

}  // namespace

OccluderSide parse_occluder_side(std::string_view name) {
  if (name == "seeded") return OccluderSide::seeded;
  if (name == "left") return OccluderSide::left;
  if (name == "right") return OccluderSide::right;
  if (name == "top") return OccluderSide::top;
  if (name == "bottom") return OccluderSide::bottom;
  if (name == "marker") return OccluderSide::marker;
  throw ConfigError("unknown occluder side '" + std::string(name) + "' (valid: seeded, left, right, top, bottom, marker)");
}

std::string_view to_string(OccluderSide side) {
  switch (side) {
    case OccluderSide::seeded: return "seeded";
    case OccluderSide::left: return "left";
    case OccluderSide::right: return "right";
    case OccluderSide::top: return "top";
    case OccluderSide::bottom: return "bottom";
    case OccluderSide::marker: return "marker";
  }
  return "seeded";
}

ChallengeKind parse_challenge(std::string_view name) {
  if (name == "occlusion") return ChallengeKind::occlusion;
  if (name == "in_plane_rotation") return ChallengeKind::in_plane_rotation;
  if (name == "illumination") return ChallengeKind::illumination;
  if (name == "background_clutter") return ChallengeKind::background_clutter;
  throw ConfigError("unknown challenge '" + std::string(name) +
                    "' (valid: occlusion, in_plane_rotation, illumination, background_clutter)");
}

std::string_view to_string(ChallengeKind kind) {
  switch (kind) {
    case ChallengeKind::occlusion:
      return "occlusion";
    case ChallengeKind::in_plane_rotation:
      return "in_plane_rotation";
    case ChallengeKind::illumination:
      return "illumination";
    case ChallengeKind::background_clutter:
      return "background_clutter";
  }
  return "occlusion";
}

void SequenceSpec::validate() const {
  if (frame_w < 16 || frame_h < 16) throw ConfigError("frames must be at least 16x16");
  if (length < 1) throw ConfigError("sequence length must be positive");
  if (target_w < 2 || target_h < 2 || target_w > frame_w || target_h > frame_h) {
    throw ConfigError("target must fit inside the frame");
  }
  // The generator keeps the whole target inside; the start must allow that.
  if (start_x < 0.0 || start_y < 0.0 || start_x > frame_w - target_w || start_y > frame_h - target_h) {
    throw ConfigError("target must start inside the frame");
  }
  if (clutter_density < 0.0 || clutter_density > 1.0) throw ConfigError("clutter_density must lie in [0, 1]");
  if (noise_std < 0.0 || jitter_std < 0.0) throw ConfigError("noise and jitter must be nonnegative");
  for (const auto& ch : schedule) {
    if (ch.first < 0 || ch.last < ch.first) throw ConfigError("challenge frame range is empty");
    switch (ch.kind) {
      case ChallengeKind::occlusion:
        if (ch.intensity < 0.0 || ch.intensity > 0.6) throw ConfigError("occlusion fraction must lie in [0, 0.6]");
        break;
      case ChallengeKind::illumination:
        if (ch.intensity < 0.5 || ch.intensity > 2.0) throw ConfigError("illumination gain must lie in [0.5, 2]");
        break;
      case ChallengeKind::background_clutter:
        if (ch.intensity < 0.0) throw ConfigError("distractor count must be nonnegative");
        break;
      case ChallengeKind::in_plane_rotation:
        break;
    }
  }
}

bool SequenceSpec::has(ChallengeKind kind) const {
  return std::any_of(schedule.begin(), schedule.end(), [kind](const Challenge& c) { return c.kind == kind; });
}

BoundingBox occluder_region(const SequenceSpec& spec, const BoundingBox& target, int t) {
  double fraction = 0.0;
  for (const auto& ch : spec.schedule) {
    if (ch.kind == ChallengeKind::occlusion && ch.active(t)) fraction = std::max(fraction, ch.intensity);
  }
  if (fraction <= 0.0) return {target.x, target.y, 0.0, 0.0};
  int side = static_cast<int>(derive_seed(spec.seed, "occluder-side") % 4);
  if (spec.occluder_side == OccluderSide::marker) {
    const Texture tex = make_texture(spec.target_w, spec.target_h, spec.texture_seed);
    const double dx = tex.marker_x / (spec.target_w - 1) - 0.5;
    const double dy = tex.marker_y / (spec.target_h - 1) - 0.5;
    if (std::abs(dx) >= std::abs(dy)) side = dx < 0.0 ? 0 : 1;
    else side = dy < 0.0 ? 2 : 3;
  } else if (spec.occluder_side != OccluderSide::seeded) {
    side = static_cast<int>(spec.occluder_side) - 1;
  }
  const double cover_w = std::floor(fraction * target.w);
  const double cover_h = std::floor(fraction * target.h);
  switch (side) {
    case 0:  // left
      return {target.x, target.y, cover_w, target.h};
    case 1:  // right
      return {target.x + target.w - cover_w, target.y, cover_w, target.h};
    case 2:  // top
      return {target.x, target.y, target.w, cover_h};
    default:  // bottom
      return {target.x, target.y + target.h - cover_h, target.w, cover_h};
  }
}

Sequence generate_sequence(const SequenceSpec& spec) { return render(spec, true); }

Sequence generate_sequence_without_occlusion(const SequenceSpec& spec) { return render(spec, false); }

std::vector<SequenceSpec> standard_suite(std::uint64_t seed) {
  std::vector<SequenceSpec> suite;
  struct Plan {
    const char* name;
    std::vector<Challenge> schedule;
  };
  const std::vector<Plan> plans = {
      {"occlusion_a", {{20, 50, ChallengeKind::occlusion, 0.5}}},
      {"occlusion_b", {{15, 45, ChallengeKind::occlusion, 0.6}}},
      {"rotation_a", {{15, 45, ChallengeKind::in_plane_rotation, 3.0}}},
      {"rotation_b", {{10, 40, ChallengeKind::in_plane_rotation, 5.0}}},
      {"illumination_a", {{20, 45, ChallengeKind::illumination, 0.6}}},
      {"illumination_b", {{15, 50, ChallengeKind::illumination, 1.6}}},
      {"clutter_a", {{10, 59, ChallengeKind::background_clutter, 3.0}}},
      {"clutter_b", {{5, 59, ChallengeKind::background_clutter, 5.0}}},
      {"mixed_a", {{20, 45, ChallengeKind::occlusion, 0.5}, {10, 59, ChallengeKind::background_clutter, 3.0}}},
      {"mixed_b", {{15, 45, ChallengeKind::in_plane_rotation, 3.0}, {25, 50, ChallengeKind::illumination, 1.5}}},
  };
  for (std::size_t i = 0; i < plans.size(); ++i) {
    Rng rng(derive_seed(seed, "suite", i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SequenceSpec s;
    s.name = plans[i].name;
    s.schedule = plans[i].schedule;
    s.texture_seed = derive_seed(seed, "texture", i);
    s.seed = derive_seed(seed, "sequence", i);
    s.target_w = 14 + static_cast<int>(unit(rng) * 7);
    s.target_h = 14 + static_cast<int>(unit(rng) * 7);
    s.start_x = 16.0 + unit(rng) * (s.frame_w - s.target_w - 32.0);
    s.start_y = 16.0 + unit(rng) * (s.frame_h - s.target_h - 32.0);
    s.vx = (unit(rng) - 0.5) * 1.2;
    s.vy = (unit(rng) - 0.5) * 1.2;
    s.jitter_std = 0.5;
    suite.push_back(std::move(s));
  }
  return suite;
}

SequenceSpec occlusion_fixture(std::uint64_t seed, double fraction, int first, int last) {
  SequenceSpec s;
  s.name = "occlusion_fixture";
  s.texture_seed = derive_seed(seed, "fixture-texture");
  s.seed = derive_seed(seed, "fixture");
  s.start_x = 24.0;
  s.start_y = 24.0;
  s.occluder_side = OccluderSide::marker;
  s.schedule = {{first, last, ChallengeKind::occlusion, fraction}};
  return s;
}

}  // namespace vital
