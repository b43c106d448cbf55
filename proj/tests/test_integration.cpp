#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fedekd/federation.hpp"
#include "fedekd/report.hpp"

using namespace fedekd;

namespace {

ExperimentSpec desk_spec(TaskKind task) {
  ExperimentSpec s;
  s.data.task = task;
  s.data.n = 1200;
  s.partition.num_clients = 4;
  s.partition.min_client_samples = 10;
  s.partition.mode = task == TaskKind::classification ? PartitionMode::label_skew : PartitionMode::covariate_shift;
  s.federation.rounds = 3;
  s.federation.private_hidden = {32, 32};
  s.federation.proxy_hidden = {8};
  s.federation.gate.energy_kind = task == TaskKind::classification ? EnergyKind::kd_symkl : EnergyKind::regression_sq;
  return s;
}

std::string report_bytes(const ExperimentSpec& spec, std::span<const Strategy> strategies, std::uint64_t seed) {
  auto results = run_strategies(spec, strategies);
  std::vector<StrategyRun> runs;
  for (std::size_t i = 0; i < results.size(); ++i) runs.push_back({strategies[i], std::move(results[i])});
  std::ostringstream out;
  write_report(out, seed, runs);
  return out.str();
}

}  // namespace

TEST(EndToEnd, ReportsAreReproducible) {
  const Strategy s[] = {Strategy::fedekd, Strategy::fedekd_ungated, Strategy::fedprox_direct};
  for (auto task : {TaskKind::classification, TaskKind::regression}) {
    const auto spec = with_run_seed(desk_spec(task), 21);
    auto threaded = spec;
    threaded.federation.workers = 4;
    const auto a = report_bytes(spec, s, 21);
    EXPECT_EQ(a, report_bytes(threaded, s, 21));
    EXPECT_NE(a, report_bytes(with_run_seed(desk_spec(task), 22), s, 22));
  }
}

TEST(EndToEnd, GatingDoesNotHurtOnHomogeneousData) {
  // With near-IID shards the proxy is reliable everywhere; the gate should
  // cost at most a small margin against full-trust distillation.
  const Strategy s[] = {Strategy::fedekd, Strategy::fedekd_ungated};
  double gated = 0.0, ungated = 0.0;
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    auto spec = desk_spec(TaskKind::classification);
    spec.partition.alpha = 1e6;
    const auto r = run_strategies(with_run_seed(spec, static_cast<std::uint64_t>(seed)), s);
    gated += r[0].transfer.avg_delta / seeds;
    ungated += r[1].transfer.avg_delta / seeds;
  }
  EXPECT_GE(gated, ungated - 0.01);
}

TEST(EndToEnd, CumulativeCountersAddUp) {
  auto spec = with_run_seed(desk_spec(TaskKind::classification), 3);
  spec.federation.strategy = Strategy::fedekd;
  const auto r = run_experiment(spec);
  CostCounters total;
  for (const auto& rr : r.rounds) {
    total += rr.counters;
    EXPECT_EQ(rr.cumulative, total);
  }
}

TEST(EndToEnd, MetricsStayInRange) {
  const Strategy s[] = {Strategy::fedekd, Strategy::local_only, Strategy::fedavg_direct};
  const auto cls = run_strategies(with_run_seed(desk_spec(TaskKind::classification), 5), s);
  for (const auto& r : cls) {
    for (double m : r.transfer.per_client_metric) {
      EXPECT_GE(m, 0.0);
      EXPECT_LE(m, 1.0);
    }
  }
  const auto reg = run_strategies(with_run_seed(desk_spec(TaskKind::regression), 5), s);
  for (const auto& r : reg) {
    for (double m : r.transfer.per_client_metric) {
      EXPECT_GE(m, 0.0);
      EXPECT_TRUE(std::isfinite(m));
    }
  }
}
