#include "fedekd/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fedekd {

const char* const kReportHeader =
    "schema_version,record,seed,strategy,task,round,client,metric,local_metric,delta,val_metric,"
    "mean_weight,proxy_batches,private_batches,private_forwards,private_backwards,proxy_forwards,"
    "proxy_backwards,uploaded_params,broadcast_params,avg_delta,worst_delta,tail_delta,avg_metric,"
    "worst_metric";

namespace {

constexpr std::size_t kColumns = 25;

enum Col : std::size_t {
  kSchema, kRecord, kSeed, kStrategy, kTask, kRound, kClient, kMetric, kLocal, kDelta, kVal, kWeight,
  kProxyBatches, kPrivateBatches, kPrivFwd, kPrivBwd, kProxyFwd, kProxyBwd, kUploaded, kBroadcast,
  kAvgDelta, kWorstDelta, kTailDelta, kAvgMetric, kWorstMetric,
};

using Row = std::vector<std::string>;

Row blank(const char* record, std::uint64_t seed, Strategy s, TaskKind task) {
  Row r(kColumns);
  r[kSchema] = std::to_string(kReportSchemaVersion);
  r[kRecord] = record;
  r[kSeed] = std::to_string(seed);
  r[kStrategy] = std::string(to_string(s));
  r[kTask] = std::string(to_string(task));
  return r;
}

void emit(std::ostream& out, const Row& r) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i) out << ',';
    out << r[i];
  }
  out << '\n';
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_report(std::ostream& out, std::uint64_t seed, const std::vector<StrategyRun>& runs) {
  out << kReportHeader << '\n';
  for (const auto& run : runs) {
    const auto& res = run.result;
    const TaskKind task = res.transfer.task;
    for (const auto& rr : res.rounds) {
      for (std::size_t k = 0; k < rr.clients.size(); ++k) {
        const auto& c = rr.clients[k];
        Row r = blank("round_client", seed, run.strategy, task);
        r[kRound] = std::to_string(rr.round);
        r[kClient] = std::to_string(k);
        r[kMetric] = format_double(c.test_metric);
        r[kVal] = format_double(c.val_metric);
        if (uses_proxy(run.strategy)) r[kWeight] = format_double(c.mean_weight);
        r[kProxyBatches] = std::to_string(c.proxy_batches);
        r[kPrivateBatches] = std::to_string(c.private_batches);
        emit(out, r);
      }
      Row r = blank("round_cost", seed, run.strategy, task);
      r[kRound] = std::to_string(rr.round);
      r[kPrivFwd] = std::to_string(rr.counters.private_forwards);
      r[kPrivBwd] = std::to_string(rr.counters.private_backwards);
      r[kProxyFwd] = std::to_string(rr.counters.proxy_forwards);
      r[kProxyBwd] = std::to_string(rr.counters.proxy_backwards);
      r[kUploaded] = std::to_string(rr.counters.uploaded_params);
      r[kBroadcast] = std::to_string(rr.counters.broadcast_params);
      emit(out, r);
    }
    const auto& t = res.transfer;
    for (std::size_t k = 0; k < t.delta.size(); ++k) {
      Row r = blank("client", seed, run.strategy, task);
      r[kClient] = std::to_string(k);
      r[kMetric] = format_double(t.per_client_metric[k]);
      r[kLocal] = format_double(t.per_client_local[k]);
      r[kDelta] = format_double(t.delta[k]);
      emit(out, r);
    }
    Row r = blank("summary", seed, run.strategy, task);
    r[kAvgDelta] = format_double(t.avg_delta);
    r[kWorstDelta] = format_double(t.worst_delta);
    r[kTailDelta] = format_double(t.tail_delta);
    r[kAvgMetric] = format_double(t.avg_metric);
    r[kWorstMetric] = format_double(t.worst_metric);
    emit(out, r);
  }
}

void write_report_file(const std::filesystem::path& path, std::uint64_t seed, const std::vector<StrategyRun>& runs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_report(out, seed, runs);
}

std::vector<SummaryRow> read_report_summaries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing report file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) {
    throw std::runtime_error("report file " + path.string() + " has an unexpected header");
  }
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    const auto cells = split_csv(line);
    if (cells.size() != kColumns) throw std::runtime_error("malformed report row in " + path.string());
    if (std::stoi(cells[kSchema]) != kReportSchemaVersion) {
      throw std::runtime_error("unsupported report schema in " + path.string());
    }
    if (cells[kRecord] != "summary") continue;
    SummaryRow r;
    r.seed = std::stoull(cells[kSeed]);
    r.strategy = cells[kStrategy];
    r.task = parse_task(cells[kTask]);
    r.avg_delta = std::stod(cells[kAvgDelta]);
    r.worst_delta = std::stod(cells[kWorstDelta]);
    r.tail_delta = std::stod(cells[kTailDelta]);
    r.avg_metric = std::stod(cells[kAvgMetric]);
    r.worst_metric = std::stod(cells[kWorstMetric]);
    rows.push_back(std::move(r));
  }
  return rows;
}

MeanStd mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

std::vector<StrategySummary> summarize(const std::vector<SummaryRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const SummaryRow*>> groups;
  for (const auto& r : rows) {
    if (!groups.count(r.strategy)) order.push_back(r.strategy);
    groups[r.strategy].push_back(&r);
  }
  std::vector<StrategySummary> out;
  for (const auto& name : order) {
    const auto& g = groups[name];
    StrategySummary s;
    s.strategy = name;
    s.task = g.front()->task;
    s.seeds = g.size();
    auto col = [&](double SummaryRow::*field) {
      std::vector<double> xs;
      for (const auto* r : g) xs.push_back(r->*field);
      return mean_std(xs);
    };
    s.avg_delta = col(&SummaryRow::avg_delta);
    s.worst_delta = col(&SummaryRow::worst_delta);
    s.tail_delta = col(&SummaryRow::tail_delta);
    s.avg_metric = col(&SummaryRow::avg_metric);
    s.worst_metric = col(&SummaryRow::worst_metric);
    out.push_back(s);
  }
  return out;
}

void print_summary_table(std::ostream& out, const std::vector<StrategySummary>& table) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-16s %-14s %5s  %-20s %-20s %-20s %-20s %-20s\n", "strategy", "task", "seeds",
                "avg_delta", "worst_delta", "tail_delta(P10/P90)", "avg_metric", "worst_metric");
  out << buf;
  auto cell = [](const MeanStd& m) {
    char c[64];
    std::snprintf(c, sizeof c, "%+.4f +- %.4f", m.mean, m.std);
    return std::string(c);
  };
  for (const auto& s : table) {
    std::snprintf(buf, sizeof buf, "%-16s %-14s %5zu  %-20s %-20s %-20s %-20s %-20s\n", s.strategy.c_str(),
                  std::string(to_string(s.task)).c_str(), s.seeds, cell(s.avg_delta).c_str(),
                  cell(s.worst_delta).c_str(), cell(s.tail_delta).c_str(), cell(s.avg_metric).c_str(),
                  cell(s.worst_metric).c_str());
    out << buf;
  }
}

void write_summary_csv(std::ostream& out, const std::vector<StrategySummary>& table) {
  out << "schema_version,strategy,task,seeds,avg_delta_mean,avg_delta_std,worst_delta_mean,worst_delta_std,"
         "tail_delta_mean,tail_delta_std,avg_metric_mean,avg_metric_std,worst_metric_mean,worst_metric_std\n";
  for (const auto& s : table) {
    out << kReportSchemaVersion << ',' << s.strategy << ',' << to_string(s.task) << ',' << s.seeds;
    for (const auto* m : {&s.avg_delta, &s.worst_delta, &s.tail_delta, &s.avg_metric, &s.worst_metric}) {
      out << ',' << format_double(m->mean) << ',' << format_double(m->std);
    }
    out << '\n';
  }
}

}  // namespace fedekd
