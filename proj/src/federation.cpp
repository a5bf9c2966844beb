#include "fedad/federation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <iostream>
#include <numeric>

#include "fedad/error.hpp"

namespace fedad {

namespace {

template <typename F>
void zip_tensors(ModelParams& out, const ModelParams& in, F&& f) {
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    f(out.layers[l].weight.data(), in.layers[l].weight.data());
    f(std::span<double>(out.layers[l].bias), std::span<const double>(in.layers[l].bias));
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string to_string(Aggregator a) { return a == Aggregator::fedavg ? "fedavg" : "fedavgm"; }
std::string to_string(ClientWeighting w) {
  return w == ClientWeighting::by_sample_count ? "by_sample_count" : "uniform";
}
std::string to_string(RetrainSchedule s) {
  return s == RetrainSchedule::per_round ? "per_round" : "final";
}

Aggregator parse_aggregator(const std::string& s) {
  if (s == "fedavg") return Aggregator::fedavg;
  if (s == "fedavgm") return Aggregator::fedavgm;
  throw ConfigError("unknown aggregator '" + s + "' (expected fedavg or fedavgm)");
}

ClientWeighting parse_client_weighting(const std::string& s) {
  if (s == "by_sample_count") return ClientWeighting::by_sample_count;
  if (s == "uniform") return ClientWeighting::uniform;
  throw ConfigError("unknown client_weighting '" + s + "'");
}

RetrainSchedule parse_retrain_schedule(const std::string& s) {
  if (s == "per_round") return RetrainSchedule::per_round;
  if (s == "final") return RetrainSchedule::final;
  throw ConfigError("unknown retrain_schedule '" + s + "'");
}

void FederatedConfig::validate() const {
  if (num_clients == 0 || num_selected == 0 || batch_size == 0 || baseline_num == 0) {
    throw ConfigError("num_clients, num_selected, batch_size and baseline_num must be >= 1");
  }
  if (num_selected > num_clients) {
    throw ConfigError("num_selected (" + std::to_string(num_selected) + ") exceeds num_clients (" +
                      std::to_string(num_clients) + ")");
  }
  std::string opt = optimizer;
  std::transform(opt.begin(), opt.end(), opt.begin(), ::toupper);
  if (opt != "SGD") throw ConfigError("optimizer '" + optimizer + "' not supported (SGD only)");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(server_momentum_beta >= 0.0 && server_momentum_beta < 1.0)) {
    throw ConfigError("server_momentum_beta must lie in [0, 1)");
  }
}

std::vector<std::size_t> select_clients(std::size_t num_clients, std::size_t num_selected,
                                        const RngStream& stream) {
  if (num_selected > num_clients) {
    throw ConfigError("select_clients: cannot select " + std::to_string(num_selected) + " of " +
                      std::to_string(num_clients));
  }
  auto perm = rng_shuffle(stream, num_clients);
  perm.resize(num_selected);
  std::sort(perm.begin(), perm.end());
  return perm;
}

LocalUpdate local_train(ClientState& client, const ModelParams& global,
                        const FederatedConfig& cfg, const RngStream& stream) {
  if (client.data == nullptr || client.data->train_benign.rows() == 0) {
    throw ConfigError("local_train: client " + std::to_string(client.device_id) +
                      " has no training data");
  }
  client.local = global;
  client.optimizer = make_optimizer(client.local, cfg.sgd());
  const LossTrace trace = train_epochs(client.local, client.data->train_benign, cfg.epochs,
                                       cfg.batch_size, client.optimizer, stream);
  return {client.local, client.data->train_benign.rows(), trace.empty() ? 0.0 : trace.back()};
}

ModelParams fedavg(std::span<const ModelParams> params, std::span<const std::size_t> sample_counts,
                   ClientWeighting weighting) {
  if (params.empty()) throw ConfigError("fedavg: no client parameters");
  if (sample_counts.size() != params.size()) {
    throw ConfigError("fedavg: sample_counts length differs from params");
  }
  for (const auto& p : params) {
    if (!p.same_shape(params.front())) throw ConfigError("fedavg: client shapes differ");
  }
  std::vector<double> weights(params.size());
  if (weighting == ClientWeighting::uniform) {
    std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(params.size()));
  } else {
    const double total = static_cast<double>(
        std::accumulate(sample_counts.begin(), sample_counts.end(), std::size_t{0}));
    if (total <= 0.0) throw ConfigError("fedavg: total sample count is zero");
    for (std::size_t i = 0; i < params.size(); ++i) {
      weights[i] = static_cast<double>(sample_counts[i]) / total;
    }
  }

  ModelParams out = zeros_like(params.front());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double w = weights[i];
    zip_tensors(out, params[i], [w](std::span<double> acc, std::span<const double> p) {
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += w * p[j];
    });
  }
  return out;
}

ModelParams fedavgm(ServerState& server, const ModelParams& round_mean, double beta) {
  if (!server.momentum) throw ConfigError("fedavgm: server momentum buffer missing");
  if (!round_mean.same_shape(server.global) || !round_mean.same_shape(*server.momentum)) {
    throw ConfigError("fedavgm: shape mismatch");
  }
  // global - (beta*v + global - mean) is evaluated as mean - beta*v, so beta = 0
  // reproduces the round mean exactly.
  ModelParams next = round_mean;
  ModelParams& v = *server.momentum;
  for (std::size_t l = 0; l < next.layers.size(); ++l) {
    auto update = [beta](std::span<double> out, std::span<double> vel, std::span<const double> g) {
      for (std::size_t j = 0; j < out.size(); ++j) {
        const double mean = out[j];
        out[j] = mean - beta * vel[j];
        vel[j] = beta * vel[j] + (g[j] - mean);
      }
    };
    update(next.layers[l].weight.data(), v.layers[l].weight.data(),
           server.global.layers[l].weight.data());
    update(next.layers[l].bias, v.layers[l].bias, server.global.layers[l].bias);
  }
  return next;
}

Matrix build_baseline_buffer(std::span<const DeviceDataset> datasets, std::size_t baseline_num,
                             const RngStream& stream) {
  if (datasets.empty()) return {};
  const std::size_t per_device = (baseline_num + datasets.size() - 1) / datasets.size();
  Matrix buffer;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const Matrix& train = datasets[d].train_benign;
    const auto perm = rng_shuffle(stream.child(d), train.rows());
    const std::size_t take = std::min(per_device, train.rows());
    for (std::size_t i = 0; i < take && buffer.rows() < baseline_num; ++i) {
      buffer.append_row(train.row(perm[i]));
    }
  }
  return buffer;
}

RetrainResult retrain(ServerState& server, const FederatedConfig& cfg, const RngStream& stream) {
  RetrainResult res{server.global, {}, 0.0};
  if (server.baseline_buffer.rows() == 0) {
    std::cerr << "warning: baseline buffer is empty, skipping retraining\n";
    server.retrain_error_log.push_back(0.0);
    return res;
  }
  OptimizerState opt = make_optimizer(res.params, cfg.sgd());
  res.trace = train_epochs(res.params, server.baseline_buffer, cfg.retrain_epochs, cfg.batch_size,
                           opt, stream);
  res.avg_error = std::accumulate(res.trace.begin(), res.trace.end(), 0.0) /
                  static_cast<double>(cfg.num_selected);
  server.retrain_error_log.push_back(res.avg_error);
  return res;
}

FederationResult run_federation(const FederatedConfig& cfg, const ModelParams& initial,
                                std::span<const DeviceDataset> datasets) {
  cfg.validate();
  if (datasets.size() != cfg.num_clients) {
    throw ConfigError("run_federation: " + std::to_string(datasets.size()) +
                      " datasets for num_clients = " + std::to_string(cfg.num_clients));
  }
  for (const auto& ds : datasets) {
    if (ds.train_benign.cols() != initial.input_dim()) {
      throw ConfigError("run_federation: device " + std::to_string(ds.device_id) +
                        " feature count does not match the model input");
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = cfg.master_seed;

  std::vector<ClientState> clients(datasets.size());
  for (std::size_t c = 0; c < clients.size(); ++c) {
    clients[c].device_id = datasets[c].device_id;
    clients[c].data = &datasets[c];
    clients[c].local = initial;
  }

  ServerState server;
  server.global = initial;
  if (cfg.aggregator == Aggregator::fedavgm) server.momentum = zeros_like(initial);
  server.baseline_buffer = build_baseline_buffer(datasets, cfg.baseline_num,
                                                 RngStream(seed, "baseline"));

  FederationResult result;
  for (std::size_t r = 1; r <= cfg.num_rounds; ++r) {
    const auto tr = std::chrono::steady_clock::now();
    const auto round = static_cast<std::int64_t>(r);
    RoundLog log;
    log.round = r;
    log.selected = select_clients(cfg.num_clients, cfg.num_selected,
                                  RngStream(seed, "select", -1, round));

    auto train_one = [&](std::size_t c) {
      const auto stream_client = cfg.shared_client_streams ? 0 : static_cast<std::int64_t>(c);
      return local_train(clients[c], server.global, cfg,
                         RngStream(seed, "local", stream_client, round));
    };
    std::vector<LocalUpdate> updates;
    if (cfg.parallel_clients) {
      std::vector<std::future<LocalUpdate>> jobs;
      for (std::size_t c : log.selected) jobs.push_back(std::async(std::launch::async, train_one, c));
      for (auto& j : jobs) updates.push_back(j.get());
    } else {
      for (std::size_t c : log.selected) updates.push_back(train_one(c));
    }

    std::vector<ModelParams> params;
    std::vector<std::size_t> counts;
    for (auto& u : updates) {
      params.push_back(std::move(u.params));
      counts.push_back(u.sample_count);
      log.client_losses.push_back(u.final_loss);
    }
    ModelParams mean = fedavg(params, counts, cfg.client_weighting);
    server.global = cfg.aggregator == Aggregator::fedavgm
                        ? fedavgm(server, mean, cfg.server_momentum_beta)
                        : std::move(mean);

    const bool retrain_now =
        cfg.retrain_schedule == RetrainSchedule::per_round || r == cfg.num_rounds;
    if (retrain_now) {
      auto rt = retrain(server, cfg, RngStream(seed, "retrain", -1, round));
      server.global = std::move(rt.params);
      log.retrain_trace = std::move(rt.trace);
      log.retrain_avg_error = rt.avg_error;
    }

    for (auto& c : clients) c.local = server.global;
    log.wall_seconds = seconds_since(tr);
    result.rounds.push_back(std::move(log));
  }

  result.final_params = std::move(server.global);
  result.retrain_error_log = std::move(server.retrain_error_log);
  result.wall_seconds = seconds_since(t0);
  return result;
}

FederationResult run_federation(const FederatedConfig& cfg, const ArchitectureSpec& arch,
                                std::span<const DeviceDataset> datasets) {
  return run_federation(cfg, init_params(arch, RngStream(cfg.master_seed, "init")), datasets);
}

}  // namespace fedad
