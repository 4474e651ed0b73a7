#include "vital/experiment.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "vital/errors.hpp"
#include "vital/tracker.hpp"

namespace vital {

namespace {

constexpr Arm kAllArms[] = {Arm::full, Arm::no_gan, Arm::random_mask, Arm::gan_no_csl};

RunConfig prepared(const RunConfig& cfg, Arm arm) {
  RunConfig c = cfg;
  c.finalize();
  apply_arm(c.train, arm, c.random_mask_source);
  return c;
}

}  // namespace

Arm parse_arm(std::string_view name) {
  for (Arm a : kAllArms) {
    if (name == to_string(a)) return a;
  }
  throw ConfigError("unknown arm '" + std::string(name) + "' (valid arms: full, no_gan, random_mask, gan_no_csl)");
}

std::string_view to_string(Arm arm) {
  switch (arm) {
    case Arm::full: return "full";
    case Arm::no_gan: return "no_gan";
    case Arm::random_mask: return "random_mask";
    case Arm::gan_no_csl: return "gan_no_csl";
  }
  return "?";
}

std::vector<Arm> parse_arms(std::span<const std::string> names) {
  if (names.empty()) throw ConfigError("no arms given (valid arms: full, no_gan, random_mask, gan_no_csl)");
  std::vector<Arm> out;
  for (const auto& n : names) out.push_back(parse_arm(n));
  return out;
}

void apply_arm(TrainConfig& cfg, Arm arm, MaskSource random_source) {
  switch (arm) {
    case Arm::full:
      cfg.mask_source = MaskSource::generator;
      cfg.cost_sensitive = true;
      break;
    case Arm::no_gan:
      cfg.mask_source = MaskSource::none;
      cfg.cost_sensitive = false;
      break;
    case Arm::random_mask:
      cfg.mask_source = random_source;
      cfg.cost_sensitive = false;
      break;
    case Arm::gan_no_csl:
      cfg.mask_source = MaskSource::generator;
      cfg.cost_sensitive = false;
      break;
  }
}

SequenceData SequenceData::from(const Sequence& seq) {
  return {seq.spec.name, seq.frames, seq.ground_truth, seq.spec};
}

SequenceData SequenceData::from(io::LoadedSequence loaded) {
  return {std::move(loaded.name), std::move(loaded.frames), std::move(loaded.ground_truth), std::move(loaded.spec)};
}

BoundingBox SequenceData::init_box() const {
  if (ground_truth && !ground_truth->empty()) return ground_truth->front();
  throw ContractError("sequence '" + name + "' has no ground truth for the first frame");
}

Trajectory run_arm(const SequenceData& seq, const RunConfig& cfg, Arm arm) {
  const RunConfig c = prepared(cfg, arm);
  return track_sequence(seq.frames, seq.init_box(), c.tracker, c.train, c.extractor);
}

double AblationTable::seed_mean_auc(Arm arm, std::uint64_t seed) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.arm == arm && r.seed == seed) {
      sum += r.success_auc;
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

int AblationTable::wins(Arm a, Arm b) const {
  int w = 0;
  for (auto s : seeds) {
    if (seed_mean_auc(a, s) > seed_mean_auc(b, s)) ++w;
  }
  return w;
}

std::vector<ArmSummary> AblationTable::summary() const {
  std::vector<ArmSummary> out;
  for (Arm a : arms) {
    ArmSummary s;
    s.arm = a;
    s.seeds = static_cast<int>(seeds.size());
    int n = 0;
    for (const auto& r : rows) {
      if (r.arm != a) continue;
      s.mean_auc += r.success_auc;
      s.mean_precision_20 += r.precision_20;
      ++n;
    }
    if (n) {
      s.mean_auc /= n;
      s.mean_precision_20 /= n;
    }
    s.wins_vs_baseline = wins(a, baseline);
    out.push_back(s);
  }
  return out;
}

std::string AblationTable::rows_csv() const {
  std::string out = "arm,seed,sequence,success_auc,precision_20\n";
  for (const auto& r : rows) {
    out += std::string(to_string(r.arm)) + "," + std::to_string(r.seed) + "," + r.sequence + "," +
           io::format_number(r.success_auc) + "," + io::format_number(r.precision_20) + "\n";
  }
  return out;
}

std::string AblationTable::summary_text() const {
  std::ostringstream os;
  os << "arm,mean_auc,mean_precision_20,wins_vs_" << to_string(baseline) << ",seeds\n";
  for (const auto& s : summary()) {
    os << to_string(s.arm) << ',' << io::format_number(s.mean_auc) << ',' << io::format_number(s.mean_precision_20)
       << ',' << s.wins_vs_baseline << ',' << s.seeds << '\n';
  }
  return os.str();
}

AblationTable run_ablation(std::span<const SequenceData> sequences, std::span<const std::uint64_t> seeds,
                           std::span<const Arm> arms, const RunConfig& base, int threads) {
  if (sequences.empty() || seeds.empty() || arms.empty()) {
    throw ConfigError("ablation needs at least one sequence, seed and arm");
  }
  for (const auto& s : sequences) {
    if (!s.ground_truth) throw ConfigError("sequence '" + s.name + "' has no groundtruth.txt");
  }
  AblationTable table;
  table.arms.assign(arms.begin(), arms.end());
  table.seeds.assign(seeds.begin(), seeds.end());
  for (const auto& s : sequences) table.sequences.push_back(s.name);

  const std::size_t n_seq = sequences.size();
  const std::size_t total = arms.size() * seeds.size() * n_seq;
  table.rows.resize(total);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= total) return;
      const std::size_t q = job % n_seq;
      const std::size_t si = (job / n_seq) % seeds.size();
      const std::size_t ai = job / (n_seq * seeds.size());
      try {
        RunConfig c = base;
        c.seed = seeds[si];
        const auto traj = run_arm(sequences[q], c, arms[ai]);
        const auto& gt = *sequences[q].ground_truth;
        table.rows[job] = {arms[ai], seeds[si], sequences[q].name, success_auc(traj, gt), precision_at(traj, gt)};
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(total);
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(total)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return table;
}

EntropyStudy entropy_study(const SequenceData& seq, int frame, const RunConfig& cfg, Arm arm) {
  const int n = static_cast<int>(seq.frames.size());
  if (frame < 1 || frame >= n) {
    throw ConfigError("entropy frame " + std::to_string(frame) + " outside [1, " + std::to_string(n - 1) + "]");
  }
  const RunConfig c = prepared(cfg, arm);
  Tracker tracker(c.tracker, c.train, c.extractor);
  tracker.start(seq.frames[0], seq.init_box());
  for (int t = 1; t < frame; ++t) tracker.step(seq.frames[static_cast<std::size_t>(t)]);

  EntropyStudy out;
  out.arm = arm;
  out.frame = frame;
  const BoundingBox window = tracker.current_box();
  out.region = seq.ground_truth && static_cast<int>(seq.ground_truth->size()) > frame
                   ? (*seq.ground_truth)[static_cast<std::size_t>(frame)]
                   : window;
  out.map = entropy_map(tracker.trainer().discriminator(), tracker.extractor(),
                        seq.frames[static_cast<std::size_t>(frame)], window.w, window.h, c.entropy_grid_step);
  out.region_mean = out.map.mean_inside(out.region);
  return out;
}

std::optional<int> first_occluded_frame(const SequenceSpec& spec) {
  std::optional<int> first;
  for (const auto& ch : spec.schedule) {
    if (ch.kind != ChallengeKind::occlusion) continue;
    if (!first || ch.first < *first) first = ch.first;
  }
  return first;
}

}  // namespace vital
