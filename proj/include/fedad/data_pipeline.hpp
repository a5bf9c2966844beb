#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedad/matrix.hpp"
#include "fedad/rng.hpp"

namespace fedad {

// Feature rows as read from disk. Unparseable cells are stored as NaN.
struct RawTable {
  std::vector<std::string> header;  // feature names, "type" excluded
  Matrix rows;
  std::vector<std::string> type_tags;

  std::size_t row_count() const { return type_tags.size(); }
  bool operator==(const RawTable&) const = default;
};

// True for tags spelled "benign" in any case.
bool is_benign_tag(const std::string& tag);

RawTable parse_csv(std::istream& in);
RawTable ingest_csv(const std::filesystem::path& path);
// Feature columns in header order followed by a trailing "type" column.
// Numbers use the shortest round-trip representation.
void write_csv(const RawTable& table, std::ostream& out);
void write_csv(const RawTable& table, const std::filesystem::path& path);

struct CleanOptions {
  bool drop_id_column = false;  // drop the first feature column after dedupe
};

// Removes rows with non-finite cells, then bitwise-duplicate feature rows
// (first occurrence kept), then optionally the leading ID column.
RawTable clean(const RawTable& raw, const CleanOptions& options = {});

struct ScalerStats {
  Vector means;
  Vector stds;  // population

  static ScalerStats fit(const Matrix& m);
  // (x - mean) / std, with divisor 1 where std < 1e-12.
  Matrix transform(const Matrix& m) const;
};

struct DeviceDataset {
  std::size_t device_id = 0;
  Matrix train_benign;
  Matrix threshold_benign;
  Matrix test_features;
  std::vector<int> test_labels;  // 0 benign, 1 anomalous
  std::vector<std::string> test_tags;
  ScalerStats scaler;
};

struct SplitOptions {
  double anomaly_mix_ratio = 5.0;
};

// Benign rows are shuffled (stream.child(0)) and cut into train/threshold/test
// thirds with the remainder going to train. floor(ratio * |test benign|) anomalous
// rows, capped by availability, are sampled with stream.child(1) and appended
// to the test partition. The scaler is fit on the train third only.
DeviceDataset split_and_scale(const RawTable& raw, const RngStream& stream,
                              const SplitOptions& options = {}, std::size_t device_id = 0);

}  // namespace fedad
