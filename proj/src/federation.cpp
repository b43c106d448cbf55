#include "fedekd/federation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "fedekd/rng.hpp"

namespace fedekd {

namespace {

enum StreamTag : std::uint64_t {
  kTagBatches = 11,
  kTagPrivateInit = 12,
  kTagProxyInit = 13,
  kTagClient = 14,
  kTagProjection = 15,
  kTagData = 16,
  kTagPartition = 17,
  kTagSplit = 18,
};

// Runs fn(i) for i in [0, n) on up to `workers` threads.  Each index owns
// its output slot, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

BatchTargets targets_for(const Dataset& ds, std::span<const int> labels, std::span<const double> values) {
  return ds.task == TaskKind::classification ? BatchTargets{labels, {}} : BatchTargets{{}, values};
}

struct Minibatch {
  Matrix inputs;
  std::vector<int> labels;
  std::vector<double> values;
};

Minibatch gather(const Dataset& ds, std::span<const std::size_t> rows) {
  Minibatch b;
  b.inputs = ds.inputs.gather_rows(rows);
  if (ds.task == TaskKind::classification) {
    for (auto r : rows) b.labels.push_back(ds.labels[r]);
  } else {
    for (auto r : rows) b.values.push_back(ds.values[r]);
  }
  return b;
}

Matrix predict(const ModelParams& model, const Matrix& inputs, std::size_t batch_size) {
  Matrix out(inputs.rows(), model.spec.output_size());
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < inputs.rows(); start += batch_size) {
    rows.clear();
    for (std::size_t i = start; i < std::min(inputs.rows(), start + batch_size); ++i) rows.push_back(i);
    const auto trace = forward(model, inputs.gather_rows(rows));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::copy(trace.output().row(i).begin(), trace.output().row(i).end(), out.row(rows[i]).begin());
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::fedekd: return "fedekd";
    case Strategy::fedekd_ungated: return "fedekd_ungated";
    case Strategy::local_only: return "local_only";
    case Strategy::fedavg_direct: return "fedavg_direct";
    case Strategy::fedprox_direct: return "fedprox_direct";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::fedekd, Strategy::fedekd_ungated, Strategy::local_only, Strategy::fedavg_direct,
                 Strategy::fedprox_direct}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

std::string_view to_string(Aggregation a) { return a == Aggregation::uniform ? "uniform" : "sample_weighted"; }

Aggregation parse_aggregation(std::string_view name) {
  if (name == "uniform") return Aggregation::uniform;
  if (name == "sample_weighted") return Aggregation::sample_weighted;
  throw std::invalid_argument("unknown aggregation '" + std::string(name) + "'");
}

bool uses_proxy(Strategy s) { return s == Strategy::fedekd || s == Strategy::fedekd_ungated; }

void FederationConfig::validate() const {
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (local_epochs < 1) throw std::invalid_argument("local_epochs must be >= 1");
  if (batch_size < 1 || eval_batch_size < 1) throw std::invalid_argument("batch sizes must be >= 1");
  if (!(fedprox_mu >= 0.0)) throw std::invalid_argument("fedprox_mu must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  for (auto h : private_hidden) {
    if (h == 0) throw std::invalid_argument("private hidden widths must be positive");
  }
  for (auto h : proxy_hidden) {
    if (h == 0) throw std::invalid_argument("proxy hidden widths must be positive");
  }
  gate.validate();
}

CostCounters& CostCounters::operator+=(const CostCounters& o) {
  private_forwards += o.private_forwards;
  private_backwards += o.private_backwards;
  proxy_forwards += o.proxy_forwards;
  proxy_backwards += o.proxy_backwards;
  uploaded_params += o.uploaded_params;
  broadcast_params += o.broadcast_params;
  return *this;
}

namespace {

ModelSpec mlp_spec(const std::vector<std::size_t>& hidden, TaskKind task, std::size_t dims,
                   std::size_t num_classes) {
  ModelSpec spec;
  spec.layer_sizes.push_back(dims);
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.layer_sizes.push_back(task == TaskKind::classification ? num_classes : 1);
  spec.head = task == TaskKind::classification ? Head::logits : Head::scalar;
  spec.validate();
  return spec;
}

}  // namespace

ModelSpec private_spec(const FederationConfig& cfg, TaskKind task, std::size_t dims, std::size_t num_classes) {
  return mlp_spec(cfg.private_hidden, task, dims, num_classes);
}

ModelSpec proxy_spec(const FederationConfig& cfg, TaskKind task, std::size_t dims, std::size_t num_classes) {
  return mlp_spec(cfg.proxy_hidden, task, dims, num_classes);
}

std::vector<ClientState> make_clients(std::vector<ClientDataset> shards, const FederationConfig& cfg) {
  cfg.validate();
  if (shards.empty()) throw std::invalid_argument("federation needs at least one client");
  const Dataset& first = shards.front().train;
  const auto pspec = private_spec(cfg, first.task, first.dims(), first.num_classes);
  const auto gspec = proxy_spec(cfg, first.task, first.dims(), first.num_classes);
  const auto private_init = init_model(pspec, derive_seed(cfg.seed, {kTagPrivateInit}));
  const auto proxy_init = init_model(gspec, derive_seed(cfg.seed, {kTagProxyInit}));
  std::vector<ClientState> clients;
  clients.reserve(shards.size());
  for (std::size_t k = 0; k < shards.size(); ++k) {
    ClientState c;
    c.id = k;
    c.seed = derive_seed(cfg.seed, {kTagClient, k});
    c.private_model = private_init;
    c.proxy_model = proxy_init;
    c.private_opt = AdamState::zeros(pspec.param_count(), cfg.learning_rate);
    c.proxy_opt = AdamState::zeros(gspec.param_count(), cfg.learning_rate);
    c.data = std::move(shards[k]);
    if (c.data.train.dims() != pspec.input_size() || c.data.train.task != first.task) {
      throw std::invalid_argument("client " + std::to_string(k) + " data does not match the shared model spec");
    }
    if (c.data.train.size() == 0) throw std::invalid_argument("client " + std::to_string(k) + " has no training data");
    c.feature_projection =
        make_feature_projection(pspec.feature_size(), gspec.feature_size(), derive_seed(c.seed, {kTagProjection}));
    clients.push_back(std::move(c));
  }
  return clients;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                    std::size_t client, std::size_t round, std::size_t epoch,
                                                    Stage stage) {
  auto rng = make_stream(seed, {kTagBatches, client, round, epoch, static_cast<std::uint64_t>(stage)});
  const auto perm = permutation(rng, n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch_size)));
  }
  return batches;
}

StageResult forward_proxy_distill(ClientState& client, const FederationConfig& cfg, std::size_t round) {
  const Dataset& train = client.data.train;
  if (train.size() == 0) throw std::invalid_argument("forward_proxy_distill: empty train split");
  const Head head = client.proxy_model.spec.head;
  StageResult res;
  double loss_sum = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    for (const auto& rows : epoch_batches(train.size(), cfg.batch_size, cfg.seed, client.id, round, epoch,
                                          Stage::proxy_distill)) {
      const auto batch = gather(train, rows);
      const auto teacher = forward(client.private_model, batch.inputs);
      const auto student = forward(client.proxy_model, batch.inputs);
      const Matrix& f = teacher.output();
      const Matrix& g = student.output();
      const std::size_t n = rows.size();
      const double inv_n = 1.0 / static_cast<double>(n);
      Matrix grad(n, g.cols());
      double loss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        auto gi = grad.row(i);
        if (head == Head::logits) {
          const auto p = softmax_row(f.row(i));
          const auto q = softmax_row(g.row(i));
          loss += kl_divergence(p, q);
          for (std::size_t c = 0; c < gi.size(); ++c) gi[c] = (q[c] - p[c]) * inv_n;
        } else {
          const double r = g(i, 0) - f(i, 0);
          loss += 0.5 * r * r;
          gi[0] = r * inv_n;
        }
      }
      loss *= inv_n;
      if (cfg.proxy_supervised) {
        const auto sup = supervised_loss(head, g, targets_for(train, batch.labels, batch.values));
        loss += sup.loss;
        for (std::size_t j = 0; j < grad.size(); ++j) grad.data()[j] += sup.grad_wrt_output.data()[j];
      }
      const auto theta_grad = backward(client.proxy_model, student, grad);
      adam_step(client.proxy_opt, client.proxy_model.theta, theta_grad);
      loss_sum += loss;
      ++res.batches;
      res.counters.private_forwards += 1;
      res.counters.proxy_forwards += 1;
      res.counters.proxy_backwards += 1;
    }
  }
  res.mean_loss = res.batches ? loss_sum / static_cast<double>(res.batches) : 0.0;
  return res;
}

PrivateUpdateResult backward_private_update(ClientState& client, const ModelParams& global_proxy,
                                            const FederationConfig& cfg, std::size_t round) {
  if (!(global_proxy.spec == client.proxy_model.spec)) {
    throw std::invalid_argument("backward_private_update: global proxy spec does not match client proxy");
  }
  const Dataset& train = client.data.train;
  if (train.size() == 0) throw std::invalid_argument("backward_private_update: empty train split");
  GateConfig gate = cfg.gate;
  if (cfg.strategy == Strategy::fedekd_ungated) gate.forced_weight = 1.0;

  PrivateUpdateResult res;
  double loss_sum = 0.0;
  double weight_sum = 0.0;
  std::size_t samples = 0;
  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    for (const auto& rows : epoch_batches(train.size(), cfg.batch_size, cfg.seed, client.id, round, epoch,
                                          Stage::private_update)) {
      const auto batch = gather(train, rows);
      const auto proxy_trace = forward(global_proxy, batch.inputs);
      const auto private_trace = forward(client.private_model, batch.inputs);
      const GateInputs in{batch.inputs, targets_for(train, batch.labels, batch.values), &client.feature_projection};
      auto step = gated_private_loss(in, client.private_model, private_trace, proxy_trace, gate);
      adam_step(client.private_opt, client.private_model.theta, step.grad);
      loss_sum += step.loss;
      for (double w : step.applied_weights) weight_sum += w;
      samples += rows.size();
      res.energy_log.push_back(std::move(step.energies));
      ++res.stage.batches;
      res.stage.counters.proxy_forwards += 1;
      res.stage.counters.private_forwards += 1;
      res.stage.counters.private_backwards += 1;
    }
  }
  res.stage.mean_loss = res.stage.batches ? loss_sum / static_cast<double>(res.stage.batches) : 0.0;
  res.mean_weight = samples ? weight_sum / static_cast<double>(samples) : 0.0;
  return res;
}

StageResult local_private_update(ClientState& client, const FederationConfig& cfg, std::size_t round,
                                 const ModelParams* prox_anchor) {
  const Dataset& train = client.data.train;
  if (train.size() == 0) throw std::invalid_argument("local_private_update: empty train split");
  if (prox_anchor && !(prox_anchor->spec == client.private_model.spec)) {
    throw std::invalid_argument("local_private_update: proximal anchor spec mismatch");
  }
  StageResult res;
  double loss_sum = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    for (const auto& rows : epoch_batches(train.size(), cfg.batch_size, cfg.seed, client.id, round, epoch,
                                          Stage::private_update)) {
      const auto batch = gather(train, rows);
      const auto trace = forward(client.private_model, batch.inputs);
      const auto sup =
          supervised_loss(client.private_model.spec.head, trace.output(), targets_for(train, batch.labels, batch.values));
      auto grad = backward(client.private_model, trace, sup.grad_wrt_output);
      double loss = sup.loss;
      if (prox_anchor) {
        double sq = 0.0;
        for (std::size_t j = 0; j < grad.size(); ++j) {
          const double diff = client.private_model.theta[j] - prox_anchor->theta[j];
          sq += diff * diff;
          grad[j] += cfg.fedprox_mu * diff;
        }
        loss += 0.5 * cfg.fedprox_mu * sq;
      }
      adam_step(client.private_opt, client.private_model.theta, grad);
      loss_sum += loss;
      ++res.batches;
      res.counters.private_forwards += 1;
      res.counters.private_backwards += 1;
    }
  }
  res.mean_loss = res.batches ? loss_sum / static_cast<double>(res.batches) : 0.0;
  return res;
}

ModelParams aggregate_models(const std::vector<const ModelParams*>& models, std::span<const double> weights) {
  if (models.empty()) throw std::invalid_argument("aggregate: no models");
  if (weights.size() != models.size()) throw std::invalid_argument("aggregate: weight count mismatch");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("aggregate: weights must sum to a positive value");
  ModelParams out{models.front()->spec, std::vector<double>(models.front()->theta.size(), 0.0)};
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (!(models[k]->spec == out.spec)) throw std::invalid_argument("aggregate: model spec mismatch");
    out = param_axpy(out, *models[k], weights[k] / total);
  }
  return out;
}

ModelParams aggregate_proxies(const std::vector<ModelParams>& proxies, Aggregation mode,
                              std::span<const std::size_t> sample_counts) {
  std::vector<const ModelParams*> ptrs;
  for (const auto& p : proxies) ptrs.push_back(&p);
  std::vector<double> w(proxies.size(), 1.0);
  if (mode == Aggregation::sample_weighted) {
    if (sample_counts.size() != proxies.size()) throw std::invalid_argument("aggregate: sample counts required");
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = static_cast<double>(sample_counts[k]);
  }
  return aggregate_models(ptrs, w);
}

std::vector<double> evaluate_clients(const Federation& fed, const FederationConfig& cfg, bool use_val) {
  std::vector<double> out(fed.clients.size());
  parallel_for(fed.clients.size(), cfg.workers, [&](std::size_t k) {
    const auto& c = fed.clients[k];
    const Dataset& ds = use_val ? c.data.val : c.data.test;
    out[k] = client_metric(ds.task, predict(c.private_model, ds.inputs, cfg.eval_batch_size), ds);
  });
  return out;
}

RoundReport run_round(Federation& fed, const FederationConfig& cfg, std::size_t round) {
  if (fed.clients.empty()) throw std::invalid_argument("run_round: no clients");
  const std::size_t k_clients = fed.clients.size();
  RoundReport report;
  report.round = round;
  report.strategy = cfg.strategy;
  report.task = fed.clients.front().data.train.task;
  report.clients.resize(k_clients);

  std::vector<std::size_t> train_sizes(k_clients);
  for (std::size_t k = 0; k < k_clients; ++k) train_sizes[k] = fed.clients[k].data.train.size();

  auto aggregate_role = [&](ModelRole role) {
    std::vector<const ModelParams*> uploads;
    for (auto& c : fed.clients) {
      const ModelParams& m = role == ModelRole::proxy ? c.proxy_model : c.private_model;
      uploads.push_back(&m);
      report.uploads.push_back({c.id, role, m.theta.size(), theta_fingerprint(m.theta)});
      report.counters.uploaded_params += m.theta.size();
    }
    std::vector<double> w(k_clients, 1.0);
    if (cfg.aggregation == Aggregation::sample_weighted) {
      for (std::size_t k = 0; k < k_clients; ++k) w[k] = static_cast<double>(train_sizes[k]);
    }
    auto global = aggregate_models(uploads, w);
    report.counters.broadcast_params += k_clients * global.theta.size();
    return global;
  };

  switch (cfg.strategy) {
    case Strategy::fedekd:
    case Strategy::fedekd_ungated: {
      std::vector<StageResult> fwd(k_clients);
      parallel_for(k_clients, cfg.workers,
                   [&](std::size_t k) { fwd[k] = forward_proxy_distill(fed.clients[k], cfg, round); });
      fed.global_proxy = aggregate_role(ModelRole::proxy);
      for (auto& c : fed.clients) c.proxy_model = *fed.global_proxy;
      std::vector<PrivateUpdateResult> bwd(k_clients);
      parallel_for(k_clients, cfg.workers, [&](std::size_t k) {
        bwd[k] = backward_private_update(fed.clients[k], *fed.global_proxy, cfg, round);
      });
      for (std::size_t k = 0; k < k_clients; ++k) {
        auto& s = report.clients[k];
        s.proxy_batches = fwd[k].batches;
        s.proxy_loss = fwd[k].mean_loss;
        s.private_batches = bwd[k].stage.batches;
        s.private_loss = bwd[k].stage.mean_loss;
        s.mean_weight = bwd[k].mean_weight;
        s.min_batch_mean_weight = std::numeric_limits<double>::infinity();
        s.max_batch_mean_weight = -std::numeric_limits<double>::infinity();
        for (const auto& eb : bwd[k].energy_log) {
          double m = 0.0;
          for (double w : eb.weights) m += w;
          m /= static_cast<double>(eb.weights.size());
          s.min_batch_mean_weight = std::min(s.min_batch_mean_weight, m);
          s.max_batch_mean_weight = std::max(s.max_batch_mean_weight, m);
        }
        report.counters += fwd[k].counters;
        report.counters += bwd[k].stage.counters;
      }
      break;
    }
    case Strategy::local_only: {
      std::vector<StageResult> res(k_clients);
      parallel_for(k_clients, cfg.workers,
                   [&](std::size_t k) { res[k] = local_private_update(fed.clients[k], cfg, round); });
      for (std::size_t k = 0; k < k_clients; ++k) {
        report.clients[k].private_batches = res[k].batches;
        report.clients[k].private_loss = res[k].mean_loss;
        report.counters += res[k].counters;
      }
      break;
    }
    case Strategy::fedavg_direct:
    case Strategy::fedprox_direct: {
      if (!fed.global_private) fed.global_private = fed.clients.front().private_model;
      const ModelParams anchor = *fed.global_private;
      const bool prox = cfg.strategy == Strategy::fedprox_direct;
      std::vector<StageResult> res(k_clients);
      parallel_for(k_clients, cfg.workers, [&](std::size_t k) {
        res[k] = local_private_update(fed.clients[k], cfg, round, prox ? &anchor : nullptr);
      });
      fed.global_private = aggregate_role(ModelRole::private_model);
      for (auto& c : fed.clients) c.private_model = *fed.global_private;
      for (std::size_t k = 0; k < k_clients; ++k) {
        report.clients[k].private_batches = res[k].batches;
        report.clients[k].private_loss = res[k].mean_loss;
        report.counters += res[k].counters;
      }
      break;
    }
  }

  const auto test = evaluate_clients(fed, cfg, false);
  const auto val = evaluate_clients(fed, cfg, true);
  for (std::size_t k = 0; k < k_clients; ++k) {
    report.clients[k].test_metric = test[k];
    report.clients[k].val_metric = val[k];
  }
  fed.totals += report.counters;
  report.cumulative = fed.totals;
  return report;
}

ExperimentSpec with_run_seed(ExperimentSpec spec, std::uint64_t run_seed) {
  spec.federation.seed = run_seed;
  spec.data.seed = derive_seed(run_seed, {kTagData});
  spec.partition.seed = derive_seed(run_seed, {kTagPartition});
  return spec;
}

std::vector<ClientDataset> build_client_shards(const ExperimentSpec& spec, ClientIndices* parts_out,
                                               std::vector<SplitIndices>* splits_out) {
  const Dataset full = gen_synthetic(spec.data);
  const auto parts = partition_dataset(full, spec.partition);
  std::vector<ClientDataset> shards;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Dataset shard = full.subset(parts[k]);
    const auto idx = split_indices(shard.size(), spec.partition.split, derive_seed(spec.partition.seed, {kTagSplit, k}));
    shards.push_back({shard.subset(idx.train), shard.subset(idx.val), shard.subset(idx.test)});
    if (splits_out) splits_out->push_back(idx);
  }
  if (parts_out) *parts_out = parts;
  return shards;
}

namespace {

void check_energy_task(EnergyKind kind, TaskKind task) {
  const bool cls = task == TaskKind::classification;
  switch (kind) {
    case EnergyKind::regression_sq:
      if (cls) throw std::invalid_argument("regression_sq energy needs a regression task");
      break;
    case EnergyKind::kd_symkl:
    case EnergyKind::entropy:
    case EnergyKind::margin:
    case EnergyKind::lse:
      if (!cls) {
        throw std::invalid_argument(std::string(to_string(kind)) + " energy needs a classification task");
      }
      break;
    case EnergyKind::feat: break;
  }
}

std::vector<RoundReport> run_strategy(std::vector<ClientState> clients, const FederationConfig& cfg) {
  Federation fed;
  fed.clients = std::move(clients);
  std::vector<RoundReport> reports;
  for (std::size_t r = 0; r < cfg.rounds; ++r) reports.push_back(run_round(fed, cfg, r));
  return reports;
}

}  // namespace

std::vector<ExperimentResult> run_strategies(const ExperimentSpec& spec, std::span<const Strategy> strategies) {
  spec.federation.validate();
  spec.partition.validate();
  check_energy_task(spec.federation.gate.energy_kind, spec.data.task);
  if (spec.data.task == TaskKind::regression && spec.partition.mode == PartitionMode::label_skew) {
    throw std::invalid_argument("label_skew partitioning needs a classification task");
  }

  auto shards = build_client_shards(spec, nullptr, nullptr);
  std::vector<std::size_t> sizes;
  for (const auto& s : shards) sizes.push_back(s.train.size() + s.val.size() + s.test.size());
  const auto clients = make_clients(std::move(shards), spec.federation);

  FederationConfig local_cfg = spec.federation;
  local_cfg.strategy = Strategy::local_only;
  const auto local_rounds = run_strategy(clients, local_cfg);
  std::vector<double> local;
  for (const auto& c : local_rounds.back().clients) local.push_back(c.test_metric);

  std::vector<ExperimentResult> results;
  for (Strategy s : strategies) {
    FederationConfig cfg = spec.federation;
    cfg.strategy = s;
    ExperimentResult r;
    r.client_sizes = sizes;
    r.local_rounds = local_rounds;
    r.rounds = s == Strategy::local_only ? local_rounds : run_strategy(clients, cfg);
    std::vector<double> method;
    for (const auto& c : r.rounds.back().clients) method.push_back(c.test_metric);
    r.transfer = negative_transfer(method, local, spec.data.task);
    results.push_back(std::move(r));
  }
  return results;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const Strategy s[] = {spec.federation.strategy};
  return std::move(run_strategies(spec, s).front());
}

}  // namespace fedekd
