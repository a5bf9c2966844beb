#include "fedad/data_pipeline.hpp"

#include <cmath>
#include <cstring>
#include <unordered_set>

#include "fedad/error.hpp"

namespace fedad {

namespace {

constexpr double kMinStd = 1e-12;

struct RowKey {
  std::span<const double> values;

  bool operator==(const RowKey& o) const {
    return values.size() == o.values.size() &&
           std::memcmp(values.data(), o.values.data(), values.size() * sizeof(double)) == 0;
  }
};

struct RowKeyHash {
  std::size_t operator()(const RowKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : k.values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h ^= bits;
      h *= 0x100000001b3ULL;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

RawTable clean(const RawTable& raw, const CleanOptions& options) {
  const std::size_t width = raw.rows.cols();
  std::unordered_set<RowKey, RowKeyHash> seen;
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < raw.row_count(); ++r) {
    auto row = raw.rows.row(r);
    if (!all_finite(row)) continue;
    if (seen.insert(RowKey{row}).second) keep.push_back(r);
  }

  RawTable out;
  const std::size_t skip = (options.drop_id_column && width > 0) ? 1 : 0;
  out.header.assign(raw.header.begin() + static_cast<std::ptrdiff_t>(skip), raw.header.end());
  std::vector<double> data;
  data.reserve(keep.size() * (width - skip));
  for (std::size_t r : keep) {
    auto row = raw.rows.row(r);
    data.insert(data.end(), row.begin() + static_cast<std::ptrdiff_t>(skip), row.end());
    out.type_tags.push_back(raw.type_tags[r]);
  }
  out.rows = Matrix(keep.size(), width - skip, std::move(data));
  return out;
}

ScalerStats ScalerStats::fit(const Matrix& m) {
  auto s = col_mean_std(m);
  return {std::move(s.means), std::move(s.stds)};
}

Matrix ScalerStats::transform(const Matrix& m) const {
  if (m.cols() != means.size()) throw ConfigError("scaler: feature count mismatch");
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double div = stds[c] < kMinStd ? 1.0 : stds[c];
      row[c] = (row[c] - means[c]) / div;
    }
  }
  return out;
}

DeviceDataset split_and_scale(const RawTable& raw, const RngStream& stream,
                              const SplitOptions& options, std::size_t device_id) {
  if (!(options.anomaly_mix_ratio >= 0.0)) {
    throw ConfigError("anomaly_mix_ratio must be >= 0");
  }
  std::vector<std::size_t> benign;
  std::vector<std::size_t> anomalous;
  for (std::size_t r = 0; r < raw.row_count(); ++r) {
    (is_benign_tag(raw.type_tags[r]) ? benign : anomalous).push_back(r);
  }
  if (benign.size() < 3) {
    throw ConfigError("device " + std::to_string(device_id) + ": need >= 3 benign rows, have " +
                      std::to_string(benign.size()));
  }
  if (anomalous.empty()) {
    throw ConfigError("device " + std::to_string(device_id) + ": no anomalous rows");
  }

  const auto bperm = rng_shuffle(stream.child(0), benign.size());
  const std::size_t third = benign.size() / 3;
  const std::size_t n_train = benign.size() - 2 * third;
  std::vector<std::size_t> train_idx, thr_idx, test_idx;
  for (std::size_t i = 0; i < bperm.size(); ++i) {
    const std::size_t r = benign[bperm[i]];
    if (i < n_train) {
      train_idx.push_back(r);
    } else if (i < n_train + third) {
      thr_idx.push_back(r);
    } else {
      test_idx.push_back(r);
    }
  }

  const auto wanted =
      static_cast<std::size_t>(std::floor(options.anomaly_mix_ratio * static_cast<double>(third)));
  const std::size_t n_anom = std::min(anomalous.size(), wanted);
  const auto aperm = rng_shuffle(stream.child(1), anomalous.size());

  DeviceDataset ds;
  ds.device_id = device_id;
  const Matrix train_raw = raw.rows.select_rows(train_idx);
  ds.scaler = ScalerStats::fit(train_raw);
  ds.train_benign = ds.scaler.transform(train_raw);
  ds.threshold_benign = ds.scaler.transform(raw.rows.select_rows(thr_idx));

  std::vector<std::size_t> test_rows = test_idx;
  for (std::size_t i = 0; i < n_anom; ++i) test_rows.push_back(anomalous[aperm[i]]);
  ds.test_features = ds.scaler.transform(raw.rows.select_rows(test_rows));
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    ds.test_labels.push_back(i < test_idx.size() ? 0 : 1);
    ds.test_tags.push_back(raw.type_tags[test_rows[i]]);
  }
  return ds;
}

}  // namespace fedad
