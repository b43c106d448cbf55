#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fedekd {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kWorkersEnv = "FEDEKD_WORKERS";

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

struct RunOptions {
  // A config file, or a manifest.json from an earlier run.
  std::filesystem::path config;
  std::vector<std::string> overrides;
  // Falls back to $FEDEKD_WORKERS, then 1.
  std::optional<std::size_t> workers;
};

// Writes report_seed<N>.csv per seed, config.resolved.ini and manifest.json
// into the configured output directory.
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);

// Mean and population std over seeds, per strategy.
int cmd_report(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& csv_out,
               std::ostream& out, std::ostream& err);

// dataset.csv plus dataset.manifest.json (task, seeds, client and split of
// every row) for the first run seed of the config.
int cmd_partition(const std::filesystem::path& config, const std::filesystem::path& out_dir,
                  const std::vector<std::string>& overrides, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace fedekd
