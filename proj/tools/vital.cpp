// vital: synthetic benchmark generation, tracking, ablations, entropy maps
// and gradient checks from one flat key = value configuration.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vital/config.hpp"
#include "vital/errors.hpp"
#include "vital/experiment.hpp"
#include "vital/gradcheck.hpp"
#include "vital/io.hpp"
#include "vital/synth.hpp"

namespace fs = std::filesystem;
using namespace vital;

namespace {

struct GlobalFlags {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> arm;
  std::vector<std::string> overrides;
  bool dump_config = false;
};

RunConfig build_config(const GlobalFlags& flags) {
  RunConfig cfg;
  if (!flags.config_file.empty()) cfg.load_text(io::read_file(flags.config_file));
  for (const auto& kv : flags.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out) cfg.out = *flags.out;
  if (flags.arm) cfg.arm = *flags.arm;
  cfg.finalize();
  parse_arm(cfg.arm);
  parse_arms(cfg.arms);
  return cfg;
}

SequenceSpec static_fixture(std::uint64_t seed) {
  SequenceSpec s;
  s.name = "static";
  s.vx = 0.0;
  s.vy = 0.0;
  s.jitter_std = 0.0;
  s.texture_seed = derive_seed(seed, "static-texture");
  s.seed = derive_seed(seed, "static");
  return s;
}

int cmd_synth(const RunConfig& cfg, const std::string& fixture) {
  std::vector<SequenceSpec> specs;
  if (fixture == "suite") specs = standard_suite(cfg.seed);
  else if (fixture == "occlusion") specs = {occlusion_fixture(cfg.seed)};
  else if (fixture == "static") specs = {static_fixture(cfg.seed)};
  else throw ConfigError("unknown fixture '" + fixture + "' (valid: suite, occlusion, static)");
  for (const auto& spec : specs) {
    const fs::path dir = fs::path(cfg.out) / spec.name;
    io::save_sequence(dir, generate_sequence(spec));
    std::cout << dir.string() << '\n';
  }
  return 0;
}

int cmd_track(const RunConfig& cfg, const std::string& sequence_dir) {
  const auto seq = SequenceData::from(io::load_sequence(sequence_dir));
  const Arm arm = parse_arm(cfg.arm);
  const auto traj = run_arm(seq, cfg, arm);
  const fs::path out(cfg.out);
  io::write_boxes(out / "trajectory.txt", traj);
  if (!seq.ground_truth) {
    std::cout << "no groundtruth.txt; evaluation skipped\n";
    return 0;
  }
  const auto report = evaluate(traj, *seq.ground_truth);
  io::write_file_atomic(out / "report.json", report.to_json());
  io::write_file_atomic(out / "report.csv", report.to_csv());
  std::cout << seq.name << " arm=" << to_string(arm) << " success_auc=" << io::format_number(report.success_auc)
            << " precision_20=" << io::format_number(report.precision_20) << '\n';
  return 0;
}

std::vector<SequenceData> load_suite(const std::string& suite_dir) {
  std::vector<SequenceData> seqs;
  for (const auto& dir : io::list_sequences(suite_dir)) seqs.push_back(SequenceData::from(io::load_sequence(dir)));
  if (seqs.empty()) throw IoError(suite_dir + " holds no sequences");
  return seqs;
}

int cmd_ablate(const RunConfig& cfg, const std::string& suite_dir) {
  const auto seqs = load_suite(suite_dir);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < cfg.seed_count; ++i) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));
  const auto arms = parse_arms(cfg.arms);
  const auto table = run_ablation(seqs, seeds, arms, cfg, cfg.threads);
  const fs::path out(cfg.out);
  io::write_file_atomic(out / "ablation_rows.csv", table.rows_csv());
  io::write_file_atomic(out / "ablation_summary.csv", table.summary_text());
  std::cout << table.summary_text();
  return 0;
}

int cmd_entropy_map(const RunConfig& cfg, const std::string& sequence_dir) {
  const auto seq = SequenceData::from(io::load_sequence(sequence_dir));
  int frame = cfg.entropy_frame;
  if (frame < 0) {
    const auto occluded = seq.spec ? first_occluded_frame(*seq.spec) : std::nullopt;
    frame = occluded ? *occluded : static_cast<int>(seq.frames.size()) - 1;
  }
  const fs::path out(cfg.out);
  std::string summary = "arm,frame,region_mean_entropy\n";
  for (Arm arm : parse_arms(cfg.arms)) {
    const auto study = entropy_study(seq, frame, cfg, arm);
    const std::string file = "entropy_" + std::string(to_string(arm)) + "_frame" + std::to_string(frame) + ".csv";
    io::write_file_atomic(out / file, study.map.to_csv());
    summary += std::string(to_string(arm)) + "," + std::to_string(frame) + "," + io::format_number(study.region_mean) + "\n";
  }
  io::write_file_atomic(out / "entropy_summary.csv", summary);
  std::cout << summary;
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg, int configurations, bool verbose) {
  const auto report = run_gradcheck(cfg.seed, configurations);
  for (const auto& r : report.results) {
    if (verbose || !r.passed) {
      std::printf("%-48s %6zu  %.3e  %s\n", r.name.c_str(), r.components, r.max_rel_error, r.passed ? "ok" : "FAIL");
    }
  }
  std::printf("configurations=%d checks=%zu max_relative_error=%.3e %s\n", report.configurations,
              report.results.size(), report.max_rel_error, report.passed ? "PASS" : "FAIL");
  return report.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial tracking-by-detection at desk scale"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  GlobalFlags flags;
  app.add_option("--config", flags.config_file, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "root seed");
  app.add_option("--out", flags.out, "output directory");
  app.add_option("--arm", flags.arm, "ablation arm: full, no_gan, random_mask, gan_no_csl");
  app.add_option("--set", flags.overrides, "override a config key (key=value); repeatable");
  app.add_flag("--dump-config", flags.dump_config, "print the effective configuration and exit");

  std::string fixture = "suite";
  auto* synth = app.add_subcommand("synth", "generate and save a synthetic sequence suite");
  synth->add_option("--fixture", fixture, "suite (default), occlusion or static");

  std::string sequence_dir;
  auto* track = app.add_subcommand("track", "track one sequence directory");
  track->add_option("sequence_dir", sequence_dir)->required();

  std::string suite_dir;
  std::string arms_list;
  std::optional<int> seed_count;
  std::optional<int> threads;
  auto* ablate = app.add_subcommand("ablate", "run every arm x seed over a suite");
  ablate->add_option("suite_dir", suite_dir)->required();
  ablate->add_option("--arms", arms_list, "comma-separated arms");
  ablate->add_option("--seeds", seed_count, "number of root seeds, starting at --seed");
  ablate->add_option("--threads", threads, "worker threads");

  std::optional<int> frame;
  auto* entropy = app.add_subcommand("entropy-map", "entropy maps of D on one frame, per arm");
  entropy->add_option("sequence_dir", sequence_dir)->required();
  entropy->add_option("--frame", frame, "frame index (default: first occluded frame)");
  entropy->add_option("--arms", arms_list, "comma-separated arms");

  int configurations = 100;
  bool verbose = false;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every gradient");
  gradcheck->add_option("--configurations", configurations, "random network configurations")->check(CLI::PositiveNumber);
  gradcheck->add_flag("--verbose", verbose, "print every check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!arms_list.empty()) flags.overrides.push_back("arms=" + arms_list);
    if (seed_count) flags.overrides.push_back("seed_count=" + std::to_string(*seed_count));
    if (threads) flags.overrides.push_back("threads=" + std::to_string(*threads));
    if (frame) flags.overrides.push_back("entropy.frame=" + std::to_string(*frame));
    const RunConfig cfg = build_config(flags);
    if (flags.dump_config) {
      std::cout << cfg.dump();
      return 0;
    }
    if (*synth) return cmd_synth(cfg, fixture);
    if (*track) return cmd_track(cfg, sequence_dir);
    if (*ablate) return cmd_ablate(cfg, suite_dir);
    if (*entropy) return cmd_entropy_map(cfg, sequence_dir);
    if (*gradcheck) return cmd_gradcheck(cfg, configurations, verbose);
    std::cout << app.help();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
