#include "gra/config.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace gra {

ClusteringConfig SimConfig::clustering_config() const {
  ClusteringConfig c;
  c.max_group_size = clustering.max_group_size;
  c.snr_threshold = clustering.snr_threshold;
  c.kmeans_iterations = clustering.kmeans_iterations;
  c.budget = channel.budget;
  return c;
}

void validate(const SimConfig& c) {
  validate(c.scenario);
  validate(c.channel.path_loss);
  validate(c.channel.budget);
  validate(c.channel.d2d);
  if (!(c.channel.csi_mae >= 0.0)) throw ConfigError("channel.csi_mae: must be >= 0");
  if (c.clustering.max_group_size < 1) throw ConfigError("clustering.max_group_size: must be >= 1");
  if (c.clustering.kmeans_iterations < 1) throw ConfigError("clustering.kmeans_iterations: must be >= 1");
  validate(c.rach);
  validate(c.eab);
  validate(c.protocol);
  if (!(c.gdb.residual_mae >= 0.0)) throw ConfigError("gdb.residual_mae: must be >= 0");
  if (c.gdb.assisted && !(c.gdb.residual_mae < c.channel.csi_mae)) {
    throw ConfigError("gdb.residual_mae: must be below channel.csi_mae");
  }
  if (!(c.engine.horizon >= 0.0)) throw ConfigError("engine.horizon: must be >= 0");
  if (!(c.engine.update_interval >= 0.0)) throw ConfigError("engine.update_interval: must be >= 0");
  if (!(c.engine.mobility_step > 0.0)) throw ConfigError("engine.mobility_step: must be > 0");
  if (!(c.engine.ull_budget > 0.0)) throw ConfigError("engine.ull_budget: must be > 0");
  if (!(c.study.group_density > 0.0)) throw ConfigError("study.group_density: must be > 0");
  if (c.study.csi_clusters < 1) throw ConfigError("study.csi_clusters: must be >= 1");
  if (c.study.csi_devices < 1) throw ConfigError("study.csi_devices: must be >= 1");
  if (!(c.study.csi_area_side > 0.0)) throw ConfigError("study.csi_area_side: must be > 0");
}

namespace {

/// Binds every known key to a field; parse and emit walk the same table so
/// they cannot drift apart.
template <typename Visitor>
void visit_keys(SimConfig& c, Visitor&& v) {
  auto& s = c.scenario;
  v("scenario", "area_side", s.area_side);
  v("scenario", "device_count", s.device_count);
  v("scenario", "traffic_mix.aperiodic", s.traffic_mix.aperiodic);
  v("scenario", "traffic_mix.periodic_1s", s.traffic_mix.periodic_1s);
  v("scenario", "traffic_mix.periodic_10s", s.traffic_mix.periodic_10s);
  v("scenario", "mobile_fraction", s.mobile_fraction);
  v("scenario", "speed_variance", s.speed_variance);
  v("scenario", "aperiodic_rate", s.aperiodic_rate);
  v("scenario", "payload", s.payload);
  v("scenario", "synchronized", s.synchronized);
  v("scenario", "rng_seed", s.rng_seed);

  auto& ch = c.channel;
  v("channel", "pl0", ch.path_loss.pl0);
  v("channel", "d0", ch.path_loss.d0);
  v("channel", "exponent", ch.path_loss.exponent);
  v("channel", "shadowing_sigma", ch.path_loss.shadowing_sigma);
  v("channel", "tx_gain", ch.budget.tx_gain);
  v("channel", "noise_floor", ch.budget.noise_floor);
  v("channel", "slot_duration", ch.d2d.slot_duration);
  v("channel", "packet_airtime", ch.d2d.packet_airtime);
  v("channel", "csi_mae", ch.csi_mae);

  v("clustering", "max_group_size", c.clustering.max_group_size);
  v("clustering", "snr_threshold", c.clustering.snr_threshold);
  v("clustering", "kmeans_iterations", c.clustering.kmeans_iterations);

  v("rach", "slot_length", c.rach.slot_length);
  v("rach", "preambles", c.rach.preambles);
  v("rach", "retry_backoff", c.rach.retry_backoff);

  v("eab", "barring_factor", c.eab.barring_factor);
  v("eab", "max_backoff", c.eab.max_backoff);
  v("eab", "sib_period", c.eab.sib_period);
  v("eab", "exempt_acs", c.eab.exempt_acs);

  auto& p = c.protocol;
  v("protocol", "da", p.da);
  v("protocol", "ra", p.ra);
  v("protocol", "aut", p.aut);
  v("protocol", "guard", p.guard);
  v("protocol", "adt", p.adt);
  v("protocol", "dd", p.dd);
  v("protocol", "miss_threshold", p.miss_threshold);
  v("protocol", "fallback_cycles", p.fallback_cycles);
  v("protocol", "preamble_trans_max", p.preamble_trans_max);

  v("gdb", "assisted", c.gdb.assisted);
  v("gdb", "residual_mae", c.gdb.residual_mae);

  v("engine", "horizon", c.engine.horizon);
  v("engine", "update_interval", c.engine.update_interval);
  v("engine", "mobility_step", c.engine.mobility_step);
  v("engine", "ull_budget", c.engine.ull_budget);

  v("study", "group_density", c.study.group_density);
  v("study", "group_trials", c.study.group_trials);
  v("study", "csi_devices", c.study.csi_devices);
  v("study", "csi_clusters", c.study.csi_clusters);
  v("study", "csi_area_side", c.study.csi_area_side);
}

std::vector<std::string> split_path(const std::string& key) {
  std::vector<std::string> parts;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  return parts;
}

int line_of(const YAML::Node& n) { return n.Mark().line + 1; }

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
  throw ConfigError(fmt::format("{} (line {}): {}", path, line, what));
}

template <typename T>
void read_value(const YAML::Node& node, const std::string& path, T& out) {
  if (!node.IsScalar()) fail(path, line_of(node), "expected a scalar");
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      const auto text = node.Scalar();
      if (!text.empty() && text.front() == '-') fail(path, line_of(node), "must be non-negative");
    }
    out = node.as<T>();
  } catch (const YAML::BadConversion&) {
    fail(path, line_of(node), fmt::format("cannot read '{}'", node.Scalar()));
  }
}

void read_value(const YAML::Node& node, const std::string& path, std::set<int>& out) {
  if (!node.IsSequence()) fail(path, line_of(node), "expected a list");
  out.clear();
  for (const auto& item : node) {
    int ac = 0;
    read_value(item, path, ac);
    out.insert(ac);
  }
}

std::optional<YAML::Node> lookup(const YAML::Node& root, const std::string& path,
                                 const std::string& section, const std::vector<std::string>& parts) {
  const YAML::Node top = root[section];
  if (!top) return std::nullopt;
  if (!top.IsMap()) fail(section, line_of(top), "expected a mapping");
  std::optional<YAML::Node> node = top;
  for (const auto& part : parts) {
    if (!node->IsMap()) fail(path, line_of(*node), "expected a mapping");
    const YAML::Node& parent = *node;
    const YAML::Node child = parent[part];
    if (!child) return std::nullopt;
    node.emplace(child);
  }
  return node;
}

/// Collects every leaf key path below `node` with its line.
void leaves(const YAML::Node& node, const std::string& prefix, std::map<std::string, int>& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      const auto path = prefix.empty() ? key : prefix + "." + key;
      if (kv.second.IsMap()) {
        leaves(kv.second, path, out);
      } else {
        out[path] = line_of(kv.first);
      }
    }
  }
}

}  // namespace

SimConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("syntax error (line {}): {}", e.mark.line + 1, e.msg));
  }
  SimConfig c;
  if (root.IsNull()) {
    validate(c);
    return c;
  }
  if (!root.IsMap()) throw ConfigError(fmt::format("(line {}): top level must be a mapping", line_of(root)));

  std::map<std::string, int> present;
  leaves(root, "", present);
  std::map<std::string, int> sections;
  for (const auto& kv : root) sections[kv.first.as<std::string>()] = line_of(kv.first);

  std::set<std::string> known;
  std::set<std::string> known_sections;
  visit_keys(c, [&](const char* section, const char* key, auto& field) {
    const std::string path = fmt::format("{}.{}", section, key);
    known.insert(path);
    known_sections.insert(section);
    const auto node = lookup(root, path, section, split_path(key));
    if (!node) return;
    read_value(*node, path, field);
  });
  for (const auto& [name, line] : sections) {
    if (!known_sections.contains(name)) fail(name, line, "unknown section");
  }
  for (const auto& [path, line] : present) {
    if (!known.contains(path) && !known_sections.contains(path)) fail(path, line, "unknown key");
  }

  try {
    validate(c);
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    const auto colon = what.find(':');
    const auto path = what.substr(0, colon);
    auto it = present.find(path);
    if (it == present.end()) {
      const auto dot = path.find('.');
      auto s = sections.find(path.substr(0, dot));
      if (s == sections.end()) throw;
      throw ConfigError(fmt::format("{} (line {}){}", path, s->second, what.substr(colon)));
    }
    throw ConfigError(fmt::format("{} (line {}){}", path, it->second, what.substr(colon)));
  }
  return c;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("{}: cannot open config file", path));
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

std::string emit_config(const SimConfig& config) {
  SimConfig copy = config;
  YAML::Node root;
  visit_keys(copy, [&](const char* section, const char* key, auto& field) {
    const auto parts = split_path(key);
    using T = std::decay_t<decltype(field)>;
    auto assign = [&](YAML::Node n) {
      if constexpr (std::is_same_v<T, std::set<int>>) {
        YAML::Node seq(YAML::NodeType::Sequence);
        for (int ac : field) seq.push_back(ac);
        seq.SetStyle(YAML::EmitterStyle::Flow);
        n = seq;
      } else if constexpr (std::is_same_v<T, double>) {
        n = fmt::format("{}", field);
      } else {
        n = field;
      }
    };
    if (parts.size() == 1) {
      assign(root[section][parts[0]]);
    } else {
      assign(root[section][parts[0]][parts[1]]);
    }
  });
  YAML::Emitter out;
  out << root;
  return std::string(out.c_str()) + "\n";
}

}  // namespace gra
