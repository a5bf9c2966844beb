#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedad/autoencoder.hpp"
#include "fedad/data_pipeline.hpp"
#include "fedad/rng.hpp"

namespace fedad {

// New aggregation rules (FedProx, FedMA, ...) slot in next to these two.
enum class Aggregator { fedavg, fedavgm };
enum class ClientWeighting { by_sample_count, uniform };
// per_round: retrain after every aggregation. final: once after the last round.
enum class RetrainSchedule { per_round, final };

std::string to_string(Aggregator a);
std::string to_string(ClientWeighting w);
std::string to_string(RetrainSchedule s);
Aggregator parse_aggregator(const std::string& s);
ClientWeighting parse_client_weighting(const std::string& s);
RetrainSchedule parse_retrain_schedule(const std::string& s);

struct FederatedConfig {
  std::size_t num_clients = 9;
  std::size_t num_selected = 4;
  std::size_t batch_size = 128;
  std::size_t baseline_num = 1000;
  std::size_t num_rounds = 4;
  std::size_t epochs = 10;
  std::size_t retrain_epochs = 10;
  std::string optimizer = "SGD";
  double learning_rate = 0.012;
  double weight_decay = 1e-5;
  double momentum = 0.9;
  Aggregator aggregator = Aggregator::fedavg;
  double server_momentum_beta = 0.9;
  ClientWeighting client_weighting = ClientWeighting::by_sample_count;
  std::uint64_t master_seed = 0;
  RetrainSchedule retrain_schedule = RetrainSchedule::per_round;
  bool parallel_clients = true;
  // Every client trains from the same local stream; only for symmetry tests.
  bool shared_client_streams = false;

  void validate() const;
  SgdHyperparams sgd() const { return {learning_rate, momentum, weight_decay}; }

  bool operator==(const FederatedConfig&) const = default;
};

struct ClientState {
  std::size_t device_id = 0;
  const DeviceDataset* data = nullptr;
  ModelParams local;
  OptimizerState optimizer;
};

struct ServerState {
  ModelParams global;
  std::optional<ModelParams> momentum;  // present iff aggregator == fedavgm
  Matrix baseline_buffer;
  std::vector<double> retrain_error_log;
};

struct RoundLog {
  std::size_t round = 0;  // 1-based
  std::vector<std::size_t> selected;
  std::vector<double> client_losses;  // final local epoch loss, per selected client
  LossTrace retrain_trace;
  double retrain_avg_error = 0.0;
  double wall_seconds = 0.0;
};

// Sorted, distinct, uniform without replacement.
std::vector<std::size_t> select_clients(std::size_t num_clients, std::size_t num_selected,
                                        const RngStream& stream);

struct LocalUpdate {
  ModelParams params;
  std::size_t sample_count = 0;
  double final_loss = 0.0;  // 0 when epochs == 0
};

// Copies `global` into the client, resets its momentum buffers and trains
// cfg.epochs epochs on its benign training partition.
LocalUpdate local_train(ClientState& client, const ModelParams& global,
                        const FederatedConfig& cfg, const RngStream& stream);

ModelParams fedavg(std::span<const ModelParams> params, std::span<const std::size_t> sample_counts,
                   ClientWeighting weighting);

// Server momentum over the pseudo-gradient delta = global - round_mean:
// v = beta*v + delta, new global = global - v. Updates server.momentum and
// returns the new global without assigning it.
ModelParams fedavgm(ServerState& server, const ModelParams& round_mean, double beta);

// ceil(baseline_num / devices) rows per device (capped by availability),
// concatenated in device order, truncated to baseline_num.
Matrix build_baseline_buffer(std::span<const DeviceDataset> datasets, std::size_t baseline_num,
                             const RngStream& stream);

struct RetrainResult {
  ModelParams params;
  LossTrace trace;
  double avg_error = 0.0;  // sum(trace) / num_selected
};

// Trains server.global on the baseline buffer with a fresh optimizer and
// appends avg_error to server.retrain_error_log.
RetrainResult retrain(ServerState& server, const FederatedConfig& cfg, const RngStream& stream);

struct FederationResult {
  ModelParams final_params;
  std::vector<RoundLog> rounds;
  std::vector<double> retrain_error_log;
  double wall_seconds = 0.0;
};

FederationResult run_federation(const FederatedConfig& cfg, const ModelParams& initial,
                                std::span<const DeviceDataset> datasets);
// Initializes from RngStream(master_seed, "init").
FederationResult run_federation(const FederatedConfig& cfg, const ArchitectureSpec& arch,
                                std::span<const DeviceDataset> datasets);

}  // namespace fedad
