#pragma once

// One communication round: forward proxy distillation on every client,
// server-side proxy averaging, broadcast, then the energy-gated private
// update.  Baselines (local-only, FedAvg and FedProx on the private models,
// ungated distillation) share the same client loop.

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "fedekd/data.hpp"
#include "fedekd/gating.hpp"
#include "fedekd/metrics.hpp"
#include "fedekd/models.hpp"
#include "fedekd/numerics.hpp"

namespace fedekd {

enum class Strategy { fedekd, fedekd_ungated, local_only, fedavg_direct, fedprox_direct };
enum class Aggregation { uniform, sample_weighted };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);
std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view name);

bool uses_proxy(Strategy s);

struct FederationConfig {
  Strategy strategy = Strategy::fedekd;
  std::size_t rounds = 5;
  // Applied to each stage: proxy distillation and private update each run
  // this many epochs per round.
  std::size_t local_epochs = 2;
  std::size_t batch_size = 64;
  std::size_t eval_batch_size = 256;
  GateConfig gate;
  double fedprox_mu = 0.01;
  Aggregation aggregation = Aggregation::uniform;
  double learning_rate = 1e-4;
  std::vector<std::size_t> private_hidden{64, 64};
  std::vector<std::size_t> proxy_hidden{16};
  // Adds the supervised loss to proxy distillation.
  bool proxy_supervised = false;
  std::uint64_t seed = 0;
  // Worker threads for per-client stages; results do not depend on it.
  std::size_t workers = 1;

  void validate() const;
};

struct CostCounters {
  std::uint64_t private_forwards = 0;
  std::uint64_t private_backwards = 0;
  std::uint64_t proxy_forwards = 0;
  std::uint64_t proxy_backwards = 0;
  std::uint64_t uploaded_params = 0;
  std::uint64_t broadcast_params = 0;

  CostCounters& operator+=(const CostCounters& o);
  friend bool operator==(const CostCounters&, const CostCounters&) = default;
};

struct ClientDataset {
  Dataset train, val, test;
};

struct ClientState {
  std::size_t id = 0;
  ModelParams private_model;
  ModelParams proxy_model;
  AdamState private_opt;
  AdamState proxy_opt;
  ClientDataset data;
  std::uint64_t seed = 0;
  // Private-to-proxy feature map for the feat energy; fixed, never trained.
  Matrix feature_projection;
};

ModelSpec private_spec(const FederationConfig& cfg, TaskKind task, std::size_t dims, std::size_t num_classes);
ModelSpec proxy_spec(const FederationConfig& cfg, TaskKind task, std::size_t dims, std::size_t num_classes);

// All clients start from one private and one proxy initialization drawn
// from cfg.seed, as if broadcast by the server before round 0.
std::vector<ClientState> make_clients(std::vector<ClientDataset> shards, const FederationConfig& cfg);

// Shuffled minibatch row lists for one epoch of one stage.
enum class Stage : std::uint64_t { proxy_distill = 0, private_update = 1 };
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                    std::size_t client, std::size_t round, std::size_t epoch,
                                                    Stage stage);

struct StageResult {
  CostCounters counters;
  std::size_t batches = 0;
  double mean_loss = 0.0;
};

// Trains client.proxy_model to mimic the frozen private model.
StageResult forward_proxy_distill(ClientState& client, const FederationConfig& cfg, std::size_t round);

struct PrivateUpdateResult {
  StageResult stage;
  std::vector<EnergyBatch> energy_log;
  // Mean of the trust weights actually applied, over every sample seen.
  double mean_weight = 0.0;
};

// Gated backward distillation from the frozen global proxy.
PrivateUpdateResult backward_private_update(ClientState& client, const ModelParams& global_proxy,
                                            const FederationConfig& cfg, std::size_t round);

// Supervised-only private training; with `prox_anchor` the FedProx term
// mu/2 ||theta - anchor||^2 is added.
StageResult local_private_update(ClientState& client, const FederationConfig& cfg, std::size_t round,
                                 const ModelParams* prox_anchor = nullptr);

// Fixed ascending-index weighted sum.  Sample weights are normalized by
// their total.
ModelParams aggregate_models(const std::vector<const ModelParams*>& models, std::span<const double> weights);
ModelParams aggregate_proxies(const std::vector<ModelParams>& proxies, Aggregation mode,
                              std::span<const std::size_t> sample_counts = {});

enum class ModelRole { proxy, private_model };

struct UploadRecord {
  std::size_t client = 0;
  ModelRole role = ModelRole::proxy;
  std::uint64_t params = 0;
  std::uint64_t fingerprint = 0;
};

struct ClientRoundStats {
  double test_metric = 0.0;
  double val_metric = 0.0;
  std::size_t proxy_batches = 0;
  std::size_t private_batches = 0;
  double mean_weight = 0.0;
  double min_batch_mean_weight = 0.0;
  double max_batch_mean_weight = 0.0;
  double private_loss = 0.0;
  double proxy_loss = 0.0;
};

struct RoundReport {
  std::size_t round = 0;
  Strategy strategy = Strategy::fedekd;
  TaskKind task = TaskKind::classification;
  std::vector<ClientRoundStats> clients;
  CostCounters counters;    // this round only
  CostCounters cumulative;  // since the run started
  std::vector<UploadRecord> uploads;
};

struct Federation {
  std::vector<ClientState> clients;
  std::optional<ModelParams> global_proxy;
  std::optional<ModelParams> global_private;
  CostCounters totals;
};

RoundReport run_round(Federation& fed, const FederationConfig& cfg, std::size_t round);

// Evaluates every client's private model on its test split.
std::vector<double> evaluate_clients(const Federation& fed, const FederationConfig& cfg, bool use_val = false);

struct ExperimentSpec {
  FederationConfig federation;
  PartitionConfig partition;
  SyntheticConfig data;
};

// Sets every seed in the spec from one run seed.
ExperimentSpec with_run_seed(ExperimentSpec spec, std::uint64_t run_seed);

struct ExperimentResult {
  std::vector<RoundReport> rounds;
  std::vector<RoundReport> local_rounds;
  NegativeTransferReport transfer;
  std::vector<std::size_t> client_sizes;
};

// Generates and partitions the data, builds clients, trains the local-only
// baseline, then runs the configured strategy from the same initial state.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// run_experiment for several strategies sharing one data draw and one
// local-only baseline.
std::vector<ExperimentResult> run_strategies(const ExperimentSpec& spec, std::span<const Strategy> strategies);

// The shards run_experiment trains on, for inspection and dumping.
std::vector<ClientDataset> build_client_shards(const ExperimentSpec& spec, ClientIndices* parts = nullptr,
                                               std::vector<SplitIndices>* splits = nullptr);

}  // namespace fedekd
