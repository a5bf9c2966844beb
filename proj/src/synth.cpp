#include "fedad/synth.hpp"

#include <cmath>
#include <numeric>

#include "fedad/error.hpp"

namespace fedad {

SynthConfig SynthConfig::resolved() const {
  SynthConfig c = *this;
  if (c.benign_rows.empty()) {
    for (std::size_t d = 0; d < c.num_devices; ++d) c.benign_rows.push_back(1800 + 450 * d);
  }
  if (c.anomaly_rows.empty()) {
    for (std::size_t b : c.benign_rows) c.anomaly_rows.push_back(3 * b);
  }
  return c;
}

void SynthConfig::validate() const {
  if (num_devices == 0 || feature_dim == 0 || manifold_rank == 0) {
    throw ConfigError("synth: num_devices, feature_dim and manifold_rank must be >= 1");
  }
  if (manifold_rank > feature_dim) throw ConfigError("synth: manifold_rank exceeds feature_dim");
  if (benign_rows.size() != num_devices || anomaly_rows.size() != num_devices) {
    throw ConfigError("synth: benign_rows/anomaly_rows must list one count per device");
  }
  for (std::size_t d = 0; d < num_devices; ++d) {
    if (benign_rows[d] == 0 || anomaly_rows[d] == 0) {
      throw ConfigError("synth: row counts must be >= 1");
    }
  }
  if (!(device_spread >= 0.0)) throw ConfigError("synth: device_spread must be >= 0");
  if (!(noise_scale >= 0.0)) throw ConfigError("synth: noise_scale must be >= 0");
  if (!(anomaly_shift_scale > noise_scale)) {
    throw ConfigError("synth: anomaly_shift_scale must exceed noise_scale");
  }
  if (!(anomaly_feature_fraction > 0.0 && anomaly_feature_fraction <= 1.0)) {
    throw ConfigError("synth: anomaly_feature_fraction must lie in (0, 1]");
  }
}

SynthDeviceModel synth_device_model(const SynthConfig& cfg, std::size_t device) {
  const std::size_t dim = cfg.feature_dim;
  const std::size_t rank = cfg.manifold_rank;
  Rng shared = RngStream(cfg.seed, "synth_shared_basis").generator();
  Rng rng = RngStream(cfg.seed, "synth_model", static_cast<std::int64_t>(device)).generator();

  SynthDeviceModel m;
  m.basis = Matrix(dim, rank);
  // Unit expected squared row norm, so every feature has variance ~1 before noise.
  const double norm =
      1.0 / std::sqrt(static_cast<double>(rank) * (1.0 + cfg.device_spread * cfg.device_spread));
  for (double& v : m.basis.data()) v = (shared.normal() + cfg.device_spread * rng.normal()) * norm;
  m.offset.resize(dim);
  m.scale.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    m.offset[j] = 5.0 * rng.normal();
    m.scale[j] = std::exp(rng.uniform(-1.0, 1.0));
  }

  const auto subset = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::round(cfg.anomaly_feature_fraction * static_cast<double>(dim))));
  for (std::size_t f = 0; f < std::size(kSynthFamilies); ++f) {
    std::vector<std::size_t> features(dim);
    std::iota(features.begin(), features.end(), std::size_t{0});
    shuffle_in_place(features, rng);
    Vector shift(dim, 0.0);
    for (std::size_t k = 0; k < subset; ++k) {
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      shift[features[k]] = sign * cfg.anomaly_shift_scale;
    }
    m.family_shifts.push_back(std::move(shift));
  }
  return m;
}

std::vector<RawTable> synth_generate(const SynthConfig& input) {
  const SynthConfig cfg = input.resolved();
  cfg.validate();
  const std::size_t dim = cfg.feature_dim;
  const std::size_t rank = cfg.manifold_rank;

  std::vector<std::string> header;
  for (std::size_t j = 0; j < dim; ++j) {
    char name[32];
    std::snprintf(name, sizeof name, "f%03zu", j);
    header.emplace_back(name);
  }

  std::vector<RawTable> tables;
  for (std::size_t d = 0; d < cfg.num_devices; ++d) {
    const SynthDeviceModel model = synth_device_model(cfg, d);
    Rng rng = RngStream(cfg.seed, "synth_rows", static_cast<std::int64_t>(d)).generator();
    RawTable t;
    t.header = header;
    const std::size_t total = cfg.benign_rows[d] + cfg.anomaly_rows[d];
    t.rows = Matrix(total, dim);
    Vector z(rank);
    for (std::size_t r = 0; r < total; ++r) {
      const bool anomalous = r >= cfg.benign_rows[d];
      const std::size_t family = anomalous ? rng.below(std::size(kSynthFamilies)) : 0;
      for (double& v : z) v = rng.normal();
      auto row = t.rows.row(r);
      for (std::size_t j = 0; j < dim; ++j) {
        double v = 0.0;
        for (std::size_t k = 0; k < rank; ++k) v += model.basis(j, k) * z[k];
        v += cfg.noise_scale * rng.normal();
        if (anomalous) v += model.family_shifts[family][j];
        row[j] = model.scale[j] * v + model.offset[j];
      }
      t.type_tags.emplace_back(anomalous ? kSynthFamilies[family] : "benign");
    }
    tables.push_back(std::move(t));
  }
  return tables;
}

}  // namespace fedad
