#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fedad/config.hpp"
#include "fedad/detection.hpp"
#include "fedad/federation.hpp"

namespace fedad {

// Loads (or generates) every device table, cleans it and splits it.
std::vector<DeviceDataset> prepare_datasets(const ExperimentConfig& resolved_cfg);

// FNV-1a digest over all prepared partitions, labels and device ids.
std::string dataset_digest(const std::vector<DeviceDataset>& datasets);

struct RunOutcome {
  ExperimentConfig config;  // resolved
  std::string data_hash;
  FederationResult federation;
  MetricsReport report;
};

RunOutcome run_experiment(const ExperimentConfig& cfg);
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::vector<DeviceDataset>& datasets);

// device,accuracy,precision,recall,f1,tpr,fpr,specificity,npv,auc ... then "avg".
std::string metrics_csv(const MetricsReport& report);
// One JSON object per round.
std::string round_log_jsonl(const FederationResult& fed, const std::vector<DeviceDataset>& datasets);
std::string config_echo(const ExperimentConfig& resolved_cfg, const std::string& data_hash,
                        std::size_t feature_dim);

inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kRoundLogFile = "rounds.jsonl";
inline constexpr const char* kConfigEcho = "config.resolved";
inline constexpr const char* kComparisonFile = "comparison.csv";

// CLI entry points. Each returns what it wrote under cfg.out_dir.
std::vector<std::filesystem::path> cmd_synth(const ExperimentConfig& cfg);
RunOutcome cmd_run(const ExperimentConfig& cfg);

struct CompareOutcome {
  RunOutcome fedavg;
  RunOutcome fedavgm;
  std::string table;  // comparison CSV text
};
CompareOutcome cmd_compare(const ExperimentConfig& cfg);

}  // namespace fedad
