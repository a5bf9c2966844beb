#pragma once

#include <filesystem>
#include <string>

#include "fedad/autoencoder.hpp"
#include "fedad/federation.hpp"
#include "fedad/synth.hpp"

namespace fedad {

enum class DataSource { synth, csv };

// Everything one experiment needs. Read from a flat `key = value` file
// (num_clients, num_selected, ..., learning_rate, weight_decay, momentum,
// then aggregation, model and data.* keys).
struct ExperimentConfig {
  FederatedConfig fed;
  ArchitectureSpec arch;  // input_dim is taken from the data
  DataSource source = DataSource::synth;
  SynthConfig synth;
  bool synth_seed_set = false;         // otherwise follows `seed`
  bool synth_devices_set = false;      // otherwise follows `num_clients`
  std::string csv_pattern;             // "{id}" is replaced by 1..num_clients
  bool drop_id_column = false;
  double anomaly_mix_ratio = 5.0;
  std::filesystem::path out_dir;

  // Applies the follow-the-master defaults and validates.
  ExperimentConfig resolved() const;
  void set_seed(std::uint64_t seed);

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Every key with its effective value; parse_config(to_config_text(c)) == c.
std::string to_config_text(const ExperimentConfig& cfg);

std::string format_number(double v);

}  // namespace fedad
