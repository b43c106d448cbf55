#include "fedekd/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedekd/config.hpp"
#include "fedekd/report.hpp"

namespace fedekd {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::size_t resolve_workers(const std::optional<std::size_t>& requested) {
  if (requested) return std::max<std::size_t>(1, *requested);
  if (const char* env = std::getenv(kWorkersEnv); env && *env) {
    try {
      std::size_t pos = 0;
      const auto n = std::stoul(env, &pos);
      if (pos != std::string(env).size() || n == 0) throw std::invalid_argument("bad value");
      return n;
    } catch (const std::exception&) {
      throw ConfigError(std::string(kWorkersEnv) + " must be a positive integer, got '" + env + "'");
    }
  }
  return 1;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// A manifest written by cmd_run embeds its resolved config and can stand in
// for the config file.
ExperimentConfig load_run_config(const fs::path& path, const std::vector<std::string>& overrides) {
  if (path.extension() != ".json") return load_config(path, overrides);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read manifest " + path.string());
  try {
    const json manifest = json::parse(in);
    return parse_config(manifest.at("config").get<std::string>(), overrides);
  } catch (const json::exception& e) {
    throw ConfigError("manifest " + path.string() + " has no usable config: " + e.what());
  }
}

json summary_json(Strategy s, const NegativeTransferReport& t) {
  json j;
  j["strategy"] = std::string(to_string(s));
  j["avg_delta"] = t.avg_delta;
  j["worst_delta"] = t.worst_delta;
  j[t.task == TaskKind::classification ? "p10_delta" : "p90_delta"] = t.tail_delta;
  j["avg_metric"] = t.avg_metric;
  j["worst_metric"] = t.worst_metric;
  return j;
}

}  // namespace

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  std::size_t workers = 1;
  try {
    cfg = load_run_config(opts.config, opts.overrides);
    workers = resolve_workers(opts.workers);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::string stage = "setup";
  try {
    fs::create_directories(cfg.output_dir);
    const std::string resolved = render_config(cfg);
    write_text(cfg.output_dir / "config.resolved.ini", resolved);
    const ExperimentSpec base = resolved_spec(cfg);

    json manifest;
    manifest["schema_version"] = kReportSchemaVersion;
    manifest["tool"] = "fedekd";
    manifest["tool_version"] = kToolVersion;
    manifest["name"] = cfg.name;
    manifest["config_hash"] = config_hash(cfg);
    manifest["config_file"] = "config.resolved.ini";
    manifest["config"] = resolved;
    manifest["workers"] = workers;
    manifest["seeds"] = json::array();
    manifest["reports"] = json::array();
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < cfg.num_seeds; ++i) {
      const std::uint64_t run_seed = cfg.seed + i;
      stage = "experiment seed " + std::to_string(run_seed);
      const auto ts = std::chrono::steady_clock::now();
      ExperimentSpec spec = with_run_seed(base, run_seed);
      spec.federation.workers = workers;
      auto results = run_strategies(spec, cfg.strategies);
      std::vector<StrategyRun> runs;
      json summaries = json::array();
      for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
        summaries.push_back(summary_json(cfg.strategies[s], results[s].transfer));
        runs.push_back({cfg.strategies[s], std::move(results[s])});
      }
      stage = "write report seed " + std::to_string(run_seed);
      const std::string file = "report_seed" + std::to_string(run_seed) + ".csv";
      write_report_file(cfg.output_dir / file, run_seed, runs);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count();
      manifest["seeds"].push_back(run_seed);
      manifest["reports"].push_back({{"seed", run_seed}, {"file", file}, {"seconds", secs}, {"summary", summaries}});
      out << "seed " << run_seed << ": wrote " << (cfg.output_dir / file).string() << '\n';
    }
    manifest["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stage = "write manifest";
    write_text(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");
    out << "manifest: " << (cfg.output_dir / "manifest.json").string() << '\n';
  } catch (const std::exception& e) {
    err << "error during " << stage << ": " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_report(const fs::path& manifest_path, const std::optional<fs::path>& csv_out, std::ostream& out,
               std::ostream& err) {
  try {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot read manifest " + manifest_path.string());
    const json manifest = json::parse(in);
    if (!manifest.contains("reports") || !manifest["reports"].is_array() || manifest["reports"].empty()) {
      throw std::runtime_error("manifest lists no reports");
    }
    const fs::path dir = manifest_path.parent_path();
    std::vector<SummaryRow> rows;
    for (const auto& r : manifest["reports"]) {
      const auto file = dir / r.at("file").get<std::string>();
      auto part = read_report_summaries(file);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    if (rows.empty()) throw std::runtime_error("reports contain no summary records");
    const auto table = summarize(rows);
    print_summary_table(out, table);
    if (csv_out) {
      std::ofstream f(*csv_out, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + csv_out->string());
      write_summary_csv(f, table);
    }
  } catch (const std::exception& e) {
    err << "report error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_partition(const fs::path& config, const fs::path& out_dir, const std::vector<std::string>& overrides,
                  std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config, overrides);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    fs::create_directories(out_dir);
    const ExperimentSpec spec = with_run_seed(resolved_spec(cfg), cfg.seed);
    const Dataset full = gen_synthetic(spec.data);
    ClientIndices parts;
    std::vector<SplitIndices> splits;
    build_client_shards(spec, &parts, &splits);
    std::vector<long long> client(full.size(), -1);
    std::vector<std::string> split(full.size());
    for (std::size_t k = 0; k < parts.size(); ++k) {
      for (auto r : parts[k]) client[r] = static_cast<long long>(k);
      for (auto j : splits[k].train) split[parts[k][j]] = "train";
      for (auto j : splits[k].val) split[parts[k][j]] = "val";
      for (auto j : splits[k].test) split[parts[k][j]] = "test";
    }
    write_dataset_csv(out_dir / "dataset.csv", full);
    json side;
    side["schema_version"] = kReportSchemaVersion;
    side["dataset_file"] = "dataset.csv";
    side["task"] = std::string(to_string(full.task));
    side["num_classes"] = full.num_classes;
    side["dims"] = full.dims();
    side["n"] = full.size();
    side["run_seed"] = cfg.seed;
    side["data_seed"] = spec.data.seed;
    side["partition_seed"] = spec.partition.seed;
    side["partition_mode"] = std::string(to_string(spec.partition.mode));
    side["alpha"] = spec.partition.alpha;
    side["num_clients"] = parts.size();
    side["assignment"] = client;
    side["split"] = split;
    write_text(out_dir / "dataset.manifest.json", side.dump(2) + "\n");
    out << "wrote " << (out_dir / "dataset.csv").string() << " and dataset.manifest.json\n";
  } catch (const std::exception& e) {
    err << "error during partition: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"fedekd: energy-gated federated distillation simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config over its seeds");
  run_cmd->add_option("--config", run.config, "Config file")->required();
  run_cmd->add_option("--set", run.overrides, "Override section.key=value (repeatable)");
  run_cmd->add_option("--workers", run.workers, "Client threads (default $FEDEKD_WORKERS or 1)")->check(CLI::PositiveNumber);

  fs::path manifest;
  std::optional<fs::path> csv_out;
  auto* report_cmd = app.add_subcommand("report", "Summarize the reports listed in a manifest");
  report_cmd->add_option("--manifest", manifest, "manifest.json written by run")->required();
  report_cmd->add_option("--out", csv_out, "Also write the summary as CSV");

  fs::path part_config, part_out;
  std::vector<std::string> part_overrides;
  auto* part_cmd = app.add_subcommand("partition", "Dump the generated dataset and its client partition");
  part_cmd->add_option("--config", part_config, "Config file")->required();
  part_cmd->add_option("--out", part_out, "Output directory")->required();
  part_cmd->add_option("--set", part_overrides, "Override section.key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (*run_cmd) return cmd_run(run, out, err);
  if (*report_cmd) return cmd_report(manifest, csv_out, out, err);
  return cmd_partition(part_config, part_out, part_overrides, out, err);
}

}  // namespace fedekd
