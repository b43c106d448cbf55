#pragma once

// Per-seed report files.
//
// A report is CSV with the fixed header kReportHeader.  Every row carries
// schema_version and a record type; cells that do not apply to a record
// type are empty.
//   round_client  one row per strategy, round, client
//   round_cost    cost counters of one strategy's round
//   client        final metric, local-only metric and delta per client
//   summary       negative-transfer aggregates per strategy

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedekd/federation.hpp"

namespace fedekd {

inline constexpr int kReportSchemaVersion = 1;
extern const char* const kReportHeader;

struct StrategyRun {
  Strategy strategy = Strategy::fedekd;
  ExperimentResult result;
};

void write_report(std::ostream& out, std::uint64_t seed, const std::vector<StrategyRun>& runs);
void write_report_file(const std::filesystem::path& path, std::uint64_t seed, const std::vector<StrategyRun>& runs);

struct SummaryRow {
  std::uint64_t seed = 0;
  std::string strategy;
  TaskKind task = TaskKind::classification;
  double avg_delta = 0.0;
  double worst_delta = 0.0;
  double tail_delta = 0.0;
  double avg_metric = 0.0;
  double worst_metric = 0.0;
};

// The summary records of one report file.
std::vector<SummaryRow> read_report_summaries(const std::filesystem::path& path);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population: divides by the count
};

MeanStd mean_std(const std::vector<double>& xs);

struct StrategySummary {
  std::string strategy;
  TaskKind task = TaskKind::classification;
  std::size_t seeds = 0;
  MeanStd avg_delta, worst_delta, tail_delta, avg_metric, worst_metric;
};

// Groups rows by strategy in order of first appearance.
std::vector<StrategySummary> summarize(const std::vector<SummaryRow>& rows);

void print_summary_table(std::ostream& out, const std::vector<StrategySummary>& table);
void write_summary_csv(std::ostream& out, const std::vector<StrategySummary>& table);

std::string format_double(double v);

}  // namespace fedekd
