#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedad/data_pipeline.hpp"

namespace fedad {

// Non-IID stand-in for per-device traffic feature tables. Each device has its
// own low-rank linear manifold, a perturbation of a basis shared by all devices
// (device_spread = 0 gives identical subspaces). Anomalies are manifold rows
// shifted on a device-specific feature subset (families "scan" and "combo").
struct SynthConfig {
  std::size_t num_devices = 9;
  std::size_t feature_dim = 115;
  // Per-device counts; empty means the default ladder (see resolved()).
  std::vector<std::size_t> benign_rows;
  std::vector<std::size_t> anomaly_rows;
  std::size_t manifold_rank = 2;
  double device_spread = 0.3;
  double noise_scale = 0.1;
  double anomaly_shift_scale = 1.5;
  double anomaly_feature_fraction = 0.2;
  std::uint64_t seed = 0;

  // Default ladder: benign 1800 + 450*d rows (3x spread over 9 devices),
  // anomalies 3x benign.
  SynthConfig resolved() const;
  void validate() const;

  bool operator==(const SynthConfig&) const = default;
};

struct SynthDeviceModel {
  Matrix basis;   // feature_dim x manifold_rank
  Vector offset;  // feature_dim
  Vector scale;   // feature_dim, > 0
  // Additive shift (in unscaled units) for each anomaly family.
  std::vector<Vector> family_shifts;
};

inline constexpr const char* kSynthFamilies[] = {"scan", "combo"};

SynthDeviceModel synth_device_model(const SynthConfig& cfg, std::size_t device);
std::vector<RawTable> synth_generate(const SynthConfig& cfg);

}  // namespace fedad
