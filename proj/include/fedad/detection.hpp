#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedad/autoencoder.hpp"
#include "fedad/data_pipeline.hpp"

namespace fedad {

// tr = mean + population std of benign reconstruction MSE.
struct Threshold {
  std::size_t device_id = 0;
  double tr = 0.0;
  double mse_mean = 0.0;
  double mse_std = 0.0;
};

Threshold threshold_from_scores(std::span<const double> scores, std::size_t device_id = 0);
Threshold compute_threshold(const ModelParams& params, const Matrix& threshold_benign,
                            std::size_t device_id = 0);

// 1 iff score > tr.
std::vector<int> classify_scores(std::span<const double> scores, double tr);
std::vector<int> classify(const ModelParams& params, double tr, const Matrix& samples);

// Positive class is 1 (anomalous).
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> actual);

struct MetricValues {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double specificity = 0.0;
  double npv = 0.0;
  // Names of metrics whose denominator was zero; those are reported as 0.
  std::vector<std::string> degenerate;
};

MetricValues metrics(const ConfusionCounts& counts);

// Mann-Whitney AUC with half credit for ties. Empty when only one class is present.
std::optional<double> auc(std::span<const double> scores, std::span<const int> labels);

struct DeviceReport {
  std::size_t device_id = 0;
  Threshold threshold;
  ConfusionCounts counts;
  MetricValues values;
  std::optional<double> auc;
};

DeviceReport evaluate_device(const ModelParams& params, const DeviceDataset& dataset);

struct MetricsReport {
  std::vector<DeviceReport> devices;
  MetricValues average;             // unweighted over devices
  std::optional<double> auc_average;  // over devices with a defined AUC
  double wall_seconds = 0.0;
};

MetricsReport summarize(std::vector<DeviceReport> devices);
MetricsReport evaluate_all(const ModelParams& params, std::span<const DeviceDataset> datasets);

}  // namespace fedad
