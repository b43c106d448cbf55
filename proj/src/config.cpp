#include "fedekd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace fedekd {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    auto item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <typename T>
std::string fmt_list(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_same_v<T, std::string>) {
      out += xs[i];
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(v)) out.push_back(static_cast<std::size_t>(to_u64(key, item)));
  return out;
}

template <typename Fn>
auto wrap(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

struct KeyDef {
  std::string key;
  bool required;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<KeyDef>& key_table() {
  using C = ExperimentConfig;
  using S = const std::string&;
  static const std::vector<KeyDef> table = {
      {"experiment.name", false, [](C& c, S, S v) { c.name = v; }, [](const C& c) { return c.name; }},
      {"experiment.output_dir", true, [](C& c, S, S v) { c.output_dir = v; },
       [](const C& c) { return c.output_dir.string(); }},
      {"experiment.num_seeds", false, [](C& c, S k, S v) { c.num_seeds = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.num_seeds); }},
      {"experiment.seed", false, [](C& c, S k, S v) { c.seed = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.seed); }},

      {"data.task", true, [](C& c, S k, S v) { c.spec.data.task = wrap(k, [&] { return parse_task(v); }); },
       [](const C& c) { return std::string(to_string(c.spec.data.task)); }},
      {"data.n", false, [](C& c, S k, S v) { c.spec.data.n = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.spec.data.n); }},
      {"data.dims", false, [](C& c, S k, S v) { c.spec.data.dims = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.spec.data.dims); }},
      {"data.num_classes", false, [](C& c, S k, S v) { c.spec.data.num_classes = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.spec.data.num_classes); }},
      {"data.class_separation", false, [](C& c, S k, S v) { c.spec.data.class_separation = to_double(k, v); },
       [](const C& c) { return fmt_double(c.spec.data.class_separation); }},
      {"data.noise", false, [](C& c, S k, S v) { c.spec.data.noise = to_double(k, v); },
       [](const C& c) { return fmt_double(c.spec.data.noise); }},
      {"data.latent_clusters", false, [](C& c, S k, S v) { c.spec.data.latent_clusters = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.spec.data.latent_clusters); }},
      {"data.cluster_spread", false, [](C& c, S k, S v) { c.spec.data.cluster_spread = to_double(k, v); },
       [](const C& c) { return fmt_double(c.spec.data.cluster_spread); }},

      {"partition.mode", false,
       [](C& c, S k, S v) { c.spec.partition.mode = wrap(k, [&] { return parse_partition_mode(v); }); },
       [](const C& c) { return std::string(to_string(c.spec.partition.mode)); }},
      {"partition.num_clients", false, [](C& c, S k, S v) { c.spec.partition.num_clients = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.spec.partition.num_clients); }},
      {"partition.alpha", false, [](C& c, S k, S v) { c.spec.partition.alpha = to_double(k, v); },
       [](const C& c) { return fmt_double(c.spec.partition.alpha); }},
      {"partition.bins", false, [](C& c, S k, S v) { c.spec.partition.bins = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.spec.partition.bins); }},
      {"partition.split", false,
       [](C& c, S k, S v) {
         const auto parts = split_list(v);
         if (parts.size() != 3) throw ConfigError("config key '" + k + "': expected train, val, test fractions");
         c.spec.partition.split = {to_double(k, parts[0]), to_double(k, parts[1]), to_double(k, parts[2])};
       },
       [](const C& c) {
         const auto& s = c.spec.partition.split;
         return fmt_double(s.train) + ", " + fmt_double(s.val) + ", " + fmt_double(s.test);
       }},
      {"partition.min_client_samples", false,
       [](C& c, S k, S v) { c.spec.partition.min_client_samples = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.spec.partition.min_client_samples); }},

      {"federation.strategy", true,
       [](C& c, S k, S v) {
         c.strategies.clear();
         for (const auto& item : split_list(v)) c.strategies.push_back(wrap(k, [&] { return parse_strategy(item); }));
         if (c.strategies.empty()) throw ConfigError("config key '" + k + "': no strategy given");
       },
       [](const C& c) {
         std::vector<std::string> names;
         for (auto s : c.strategies) names.emplace_back(to_string(s));
         return fmt_list(names);
       }},
      {"federation.rounds", false, [](C& c, S k, S v) { c.spec.federation.rounds = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.spec.federation.rounds); }},
      {"federation.local_epochs", false, [](C& c, S k, S v) { c.spec.federation.local_epochs = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.spec.federation.local_epochs); }},
      {"federation.batch_size", false, [](C& c, S k, S v) { c.spec.federation.batch_size = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.spec.federation.batch_size); }},
      {"federation.eval_batch_size", false,
       [](C& c, S k, S v) { c.spec.federation.eval_batch_size = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.spec.federation.eval_batch_size); }},
      {"federation.learning_rate", false,
       [](C& c, S k, S v) { c.spec.federation.learning_rate = to_double(k, v); },
       [](const C& c) { return fmt_double(c.spec.federation.learning_rate); }},
      {"federation.fedprox_mu", false, [](C& c, S k, S v) { c.spec.federation.fedprox_mu = to_double(k, v); },
       [](const C& c) { return fmt_double(c.spec.federation.fedprox_mu); }},
      {"federation.aggregation", false,
       [](C& c, S k, S v) { c.spec.federation.aggregation = wrap(k, [&] { return parse_aggregation(v); }); },
       [](const C& c) { return std::string(to_string(c.spec.federation.aggregation)); }},
      {"federation.private_hidden", false,
       [](C& c, S k, S v) { c.spec.federation.private_hidden = to_sizes(k, v); },
       [](const C& c) { return fmt_list(c.spec.federation.private_hidden); }},
      {"federation.proxy_hidden", false, [](C& c, S k, S v) { c.spec.federation.proxy_hidden = to_sizes(k, v); },
       [](const C& c) { return fmt_list(c.spec.federation.proxy_hidden); }},
      {"federation.proxy_supervised", false,
       [](C& c, S k, S v) { c.spec.federation.proxy_supervised = to_bool(k, v); },
       [](const C& c) { return std::string(c.spec.federation.proxy_supervised ? "true" : "false"); }},

      {"gate.energy", false,
       [](C& c, S k, S v) {
         if (v != "auto") wrap(k, [&] { return parse_energy_kind(v); });
         c.energy = v;
       },
       [](const C& c) { return c.energy; }},
      {"gate.beta", false, [](C& c, S k, S v) { c.spec.federation.gate.beta = to_double(k, v); },
       [](const C& c) { return fmt_double(c.spec.federation.gate.beta); }},
      {"gate.lambda_kd", false, [](C& c, S k, S v) { c.spec.federation.gate.lambda_kd = to_double(k, v); },
       [](const C& c) { return fmt_double(c.spec.federation.gate.lambda_kd); }},
      {"gate.eps_B", false, [](C& c, S k, S v) { c.spec.federation.gate.eps_B = to_double(k, v); },
       [](const C& c) { return fmt_double(c.spec.federation.gate.eps_B); }},
      {"gate.eps_H", false, [](C& c, S k, S v) { c.spec.federation.gate.eps_H = to_double(k, v); },
       [](const C& c) { return fmt_double(c.spec.federation.gate.eps_H); }},
  };
  return table;
}

const KeyDef& find_key(const std::string& key) {
  for (const auto& def : key_table()) {
    if (def.key == key) return def;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.num_seeds < 1) throw ConfigError("config key 'experiment.num_seeds': must be >= 1");
  if (cfg.output_dir.empty()) throw ConfigError("config key 'experiment.output_dir': must not be empty");
  try {
    const auto spec = resolved_spec(cfg);
    spec.federation.validate();
    spec.partition.validate();
    if (spec.data.task == TaskKind::regression && spec.partition.mode == PartitionMode::label_skew) {
      throw ConfigError("config key 'partition.mode': label_skew needs a classification task");
    }
    if (spec.data.task == TaskKind::classification && spec.data.num_classes < 2) {
      throw ConfigError("config key 'data.num_classes': must be >= 2");
    }
    if (spec.data.n == 0 || spec.data.dims == 0) throw ConfigError("config keys 'data.n' and 'data.dims' must be > 0");
    const EnergyKind kind = spec.federation.gate.energy_kind;
    const bool cls = spec.data.task == TaskKind::classification;
    if ((kind == EnergyKind::regression_sq && cls) ||
        (!cls && kind != EnergyKind::regression_sq && kind != EnergyKind::feat)) {
      throw ConfigError("config key 'gate.energy': " + std::string(to_string(kind)) + " does not fit the " +
                        std::string(to_string(spec.data.task)) + " task");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  auto apply = [&](const std::string& key, const std::string& value) {
    const auto& def = find_key(key);
    def.set(cfg, key, value);
    seen.insert(key);
  };
  std::set<std::string> from_file;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key outside a section");
    const auto key = section + "." + trim(std::string_view(line).substr(0, eq));
    if (!from_file.insert(key).second) throw ConfigError("duplicate config key '" + key + "'");
    apply(key, trim(std::string_view(line).substr(eq + 1)));
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    apply(trim(std::string_view(o).substr(0, eq)), trim(std::string_view(o).substr(eq + 1)));
  }
  for (const auto& def : key_table()) {
    if (def.required && !seen.count(def.key)) throw ConfigError("missing required config key '" + def.key + "'");
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string render_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& def : key_table()) {
    const auto dot = def.key.find('.');
    const auto sec = def.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += def.key.substr(dot + 1) + " = " + def.get(cfg) + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : render_config(cfg)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentSpec resolved_spec(const ExperimentConfig& cfg) {
  ExperimentSpec spec = cfg.spec;
  if (cfg.energy == "auto") {
    spec.federation.gate.energy_kind =
        spec.data.task == TaskKind::classification ? EnergyKind::kd_symkl : EnergyKind::regression_sq;
  } else {
    spec.federation.gate.energy_kind = parse_energy_kind(cfg.energy);
  }
  return spec;
}

}  // namespace fedekd
