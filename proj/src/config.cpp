#include "vital/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "vital/io.hpp"

namespace vital {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define VITAL_INT(name, member)                                                               \
  Field {                                                                                     \
    name, [](const RunConfig& c) { return std::to_string(c.member); },                        \
        [](RunConfig& c, const std::string& v) { c.member = parse_number<int>(name, v); }     \
  }
#define VITAL_U64(name, member)                                                                      \
  Field {                                                                                            \
    name, [](const RunConfig& c) { return std::to_string(c.member); },                               \
        [](RunConfig& c, const std::string& v) { c.member = parse_number<std::uint64_t>(name, v); }  \
  }
#define VITAL_SIZE(name, member)                                                                   \
  Field {                                                                                          \
    name, [](const RunConfig& c) { return std::to_string(c.member); },                             \
        [](RunConfig& c, const std::string& v) { c.member = parse_number<std::size_t>(name, v); }  \
  }
#define VITAL_DOUBLE(name, member)                                                              \
  Field {                                                                                       \
    name, [](const RunConfig& c) { return io::format_number(c.member); },                       \
        [](RunConfig& c, const std::string& v) { c.member = parse_number<double>(name, v); }    \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      VITAL_U64("seed", seed),
      Field{"out", [](const RunConfig& c) { return c.out; }, [](RunConfig& c, const std::string& v) { c.out = trim(v); }},
      Field{"arm", [](const RunConfig& c) { return c.arm; }, [](RunConfig& c, const std::string& v) { c.arm = trim(v); }},
      Field{"arms",
            [](const RunConfig& c) {
              std::string s;
              for (std::size_t i = 0; i < c.arms.size(); ++i) s += (i ? "," : "") + c.arms[i];
              return s;
            },
            [](RunConfig& c, const std::string& v) { c.arms = split_list(v); }},
      VITAL_INT("seed_count", seed_count),
      VITAL_INT("threads", threads),
      VITAL_INT("entropy.frame", entropy_frame),
      VITAL_INT("entropy.grid_step", entropy_grid_step),
      Field{"random_mask.source", [](const RunConfig& c) { return std::string(to_string(c.random_mask_source)); },
            [](RunConfig& c, const std::string& v) { c.random_mask_source = parse_mask_source(trim(v)); }},

      VITAL_DOUBLE("train.lr_g", train.lr_g),
      VITAL_DOUBLE("train.lr_d", train.lr_d),
      VITAL_DOUBLE("train.momentum", train.momentum),
      VITAL_DOUBLE("train.weight_decay", train.weight_decay),
      VITAL_INT("train.init_iterations", train.init_iterations),
      VITAL_INT("train.warmup_iterations", train.warmup_iterations),
      VITAL_INT("train.update_iterations", train.update_iterations),
      VITAL_INT("train.update_period_frames", train.update_period_frames),
      VITAL_INT("train.batch_pos", train.batch_pos),
      VITAL_INT("train.batch_neg", train.batch_neg),
      VITAL_INT("train.buffer_frames", train.buffer_frames),
      VITAL_DOUBLE("train.lambda", train.lambda),
      Field{"train.reduction", [](const RunConfig& c) { return std::string(to_string(c.train.reduction)); },
            [](RunConfig& c, const std::string& v) { c.train.reduction = parse_reduction(trim(v)); }},
      Field{"train.polarity", [](const RunConfig& c) { return std::string(to_string(c.train.polarity)); },
            [](RunConfig& c, const std::string& v) { c.train.polarity = parse_polarity(trim(v)); }},
      VITAL_SIZE("train.generator_hidden", train.network.generator_hidden),
      VITAL_SIZE("train.discriminator_hidden", train.network.discriminator_hidden),

      VITAL_INT("tracker.candidates", tracker.candidates),
      VITAL_DOUBLE("tracker.center_std", tracker.center_std),
      VITAL_DOUBLE("tracker.scale_base", tracker.scale_base),
      VITAL_DOUBLE("tracker.scale_std", tracker.scale_std),
      VITAL_INT("tracker.top_k", tracker.top_k),
      VITAL_INT("tracker.update_positives", tracker.update_positives),
      VITAL_INT("tracker.update_negatives", tracker.update_negatives),
      VITAL_INT("tracker.init_positives", tracker.init_positives),
      VITAL_INT("tracker.init_negatives", tracker.init_negatives),
      VITAL_DOUBLE("tracker.positive_iou", tracker.positive_iou),
      VITAL_DOUBLE("tracker.negative_iou", tracker.negative_iou),
      VITAL_INT("tracker.oversample", tracker.oversample),

      VITAL_INT("extractor.patch_side", extractor.patch_side),
      VITAL_INT("extractor.kernel", extractor.kernel),
      VITAL_INT("extractor.channels", extractor.channels),
      VITAL_DOUBLE("extractor.filter_gain", extractor.filter_gain),
      VITAL_U64("extractor.seed", extractor.seed),
  };
  return table;
}

#undef VITAL_INT
#undef VITAL_U64
#undef VITAL_SIZE
#undef VITAL_DOUBLE

const Field& find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (key == f.key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) { find_field(trim(key)).set(*this, value); }

std::string RunConfig::get(const std::string& key) const { return find_field(trim(key)).get(*this); }

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.key);
  return out;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
  return out;
}

void RunConfig::load_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::finalize() {
  if (seed_count < 1) throw ConfigError("seed_count must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (entropy_grid_step < 1) throw ConfigError("entropy.grid_step must be at least 1");
  FeatureExtractor probe(extractor);  // validates the extractor geometry
  train.network.channels = static_cast<std::size_t>(extractor.channels);
  train.network.grid = static_cast<std::size_t>(extractor.grid());
  train.seed = seed;
  train.validate();
  tracker.validate();
}

}  // namespace vital
