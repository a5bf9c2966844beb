#include "fedad/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedad/error.hpp"

namespace fedad {

Threshold threshold_from_scores(std::span<const double> scores, std::size_t device_id) {
  if (scores.empty()) throw ConfigError("threshold: empty benign threshold partition");
  const MeanStd ms = mean_std(scores);
  return {device_id, ms.mean + ms.std, ms.mean, ms.std};
}

Threshold compute_threshold(const ModelParams& params, const Matrix& threshold_benign,
                            std::size_t device_id) {
  if (threshold_benign.rows() == 0) {
    throw ConfigError("threshold: empty benign threshold partition");
  }
  return threshold_from_scores(reconstruction_errors(params, threshold_benign), device_id);
}

std::vector<int> classify_scores(std::span<const double> scores, double tr) {
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > tr ? 1 : 0;
  return out;
}

std::vector<int> classify(const ModelParams& params, double tr, const Matrix& samples) {
  return classify_scores(reconstruction_errors(params, samples), tr);
}

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) throw ConfigError("confusion: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] != 0;
    const bool a = actual[i] != 0;
    if (p && a) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (a) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

MetricValues metrics(const ConfusionCounts& c) {
  const std::size_t n = c.total();
  if (n == 0) throw ConfigError("metrics: no evaluated samples");
  MetricValues m;
  auto ratio = [&m](const char* name, double num, double den) {
    if (den == 0.0) {
      m.degenerate.emplace_back(name);
      return 0.0;
    }
    return num / den;
  };
  const auto tp = static_cast<double>(c.tp);
  const auto fp = static_cast<double>(c.fp);
  const auto tn = static_cast<double>(c.tn);
  const auto fn = static_cast<double>(c.fn);
  m.accuracy = (tp + tn) / static_cast<double>(n);
  m.precision = ratio("precision", tp, tp + fp);
  m.recall = ratio("recall", tp, tp + fn);
  m.tpr = m.recall;
  m.fpr = ratio("fpr", fp, fp + tn);
  m.specificity = ratio("specificity", tn, tn + fp);
  m.npv = ratio("npv", tn, tn + fn);
  m.f1 = ratio("f1", 2.0 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

std::optional<double> auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ConfigError("auc: length mismatch");
  if (!all_finite(scores)) throw ConfigError("auc: non-finite score");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l != 0 ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of 1-based midranks of positives; tied groups share their average rank.
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0) pos_rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

DeviceReport evaluate_device(const ModelParams& params, const DeviceDataset& dataset) {
  DeviceReport r;
  r.device_id = dataset.device_id;
  r.threshold = compute_threshold(params, dataset.threshold_benign, dataset.device_id);
  const Vector scores = reconstruction_errors(params, dataset.test_features);
  const auto predicted = classify_scores(scores, r.threshold.tr);
  r.counts = confusion(predicted, dataset.test_labels);
  r.values = metrics(r.counts);
  r.auc = auc(scores, dataset.test_labels);
  return r;
}

MetricsReport summarize(std::vector<DeviceReport> devices) {
  MetricsReport rep;
  rep.devices = std::move(devices);
  if (rep.devices.empty()) return rep;
  const double k = static_cast<double>(rep.devices.size());
  double auc_sum = 0.0;
  std::size_t auc_n = 0;
  for (const auto& d : rep.devices) {
    const auto& v = d.values;
    rep.average.accuracy += v.accuracy;
    rep.average.precision += v.precision;
    rep.average.recall += v.recall;
    rep.average.f1 += v.f1;
    rep.average.tpr += v.tpr;
    rep.average.fpr += v.fpr;
    rep.average.specificity += v.specificity;
    rep.average.npv += v.npv;
    if (d.auc) {
      auc_sum += *d.auc;
      ++auc_n;
    }
  }
  for (double* f : {&rep.average.accuracy, &rep.average.precision, &rep.average.recall,
                    &rep.average.f1, &rep.average.tpr, &rep.average.fpr,
                    &rep.average.specificity, &rep.average.npv}) {
    *f /= k;
  }
  if (auc_n > 0) rep.auc_average = auc_sum / static_cast<double>(auc_n);
  return rep;
}

MetricsReport evaluate_all(const ModelParams& params, std::span<const DeviceDataset> datasets) {
  std::vector<DeviceReport> devices;
  for (const auto& ds : datasets) devices.push_back(evaluate_device(params, ds));
  return summarize(std::move(devices));
}

}  // namespace fedad
