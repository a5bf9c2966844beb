#include "fedad/experiment.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fedad/error.hpp"
#include "fedad/synth.hpp"

namespace fedad {

namespace {

std::filesystem::path csv_path(const std::string& pattern, std::size_t id) {
  std::string p = pattern;
  const std::string token = "{id}";
  const auto pos = p.find(token);
  if (pos == std::string::npos) {
    throw ConfigError("data.csv.pattern must contain {id}: " + pattern);
  }
  p.replace(pos, token.size(), std::to_string(id));
  return p;
}

void ensure_dir(const std::filesystem::path& dir) {
  if (dir.empty()) throw ConfigError("no output directory configured (use --out or out_dir)");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

// Writes all files only after every payload has been rendered.
void write_files(const std::filesystem::path& dir,
                 const std::vector<std::pair<std::string, std::string>>& files) {
  ensure_dir(dir);
  for (const auto& [name, body] : files) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) throw IoError("write failed for " + path.string());
  }
}

struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 0x100000001b3ULL;
    }
  }
  void matrix(const Matrix& m) {
    const std::uint64_t shape[2] = {m.rows(), m.cols()};
    bytes(shape, sizeof shape);
    bytes(m.data().data(), m.size() * sizeof(double));
  }
};

std::string auc_cell(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

void bundle(const RunOutcome& run, const std::vector<DeviceDataset>& datasets) {
  write_files(run.config.out_dir,
              {{kMetricsFile, metrics_csv(run.report)},
               {kRoundLogFile, round_log_jsonl(run.federation, datasets)},
               {kConfigEcho, config_echo(run.config, run.data_hash,
                                         datasets.front().train_benign.cols())}});
}

}  // namespace

std::vector<DeviceDataset> prepare_datasets(const ExperimentConfig& cfg) {
  std::vector<RawTable> tables;
  if (cfg.source == DataSource::synth) {
    tables = synth_generate(cfg.synth);
  } else {
    for (std::size_t d = 1; d <= cfg.fed.num_clients; ++d) {
      tables.push_back(ingest_csv(csv_path(cfg.csv_pattern, d)));
    }
  }
  std::vector<DeviceDataset> out;
  for (std::size_t d = 0; d < tables.size(); ++d) {
    const RawTable cleaned = clean(tables[d], {cfg.drop_id_column});
    out.push_back(split_and_scale(cleaned,
                                  RngStream(cfg.fed.master_seed, "split", static_cast<std::int64_t>(d)),
                                  {cfg.anomaly_mix_ratio}, d + 1));
    if (out.back().train_benign.cols() != out.front().train_benign.cols()) {
      throw FormatError("device " + std::to_string(d + 1) + " has " +
                        std::to_string(out.back().train_benign.cols()) +
                        " features, device 1 has " +
                        std::to_string(out.front().train_benign.cols()));
    }
  }
  return out;
}

std::string dataset_digest(const std::vector<DeviceDataset>& datasets) {
  Fnv f;
  for (const auto& ds : datasets) {
    const std::uint64_t id = ds.device_id;
    f.bytes(&id, sizeof id);
    f.matrix(ds.train_benign);
    f.matrix(ds.threshold_benign);
    f.matrix(ds.test_features);
    f.bytes(ds.test_labels.data(), ds.test_labels.size() * sizeof(int));
  }
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(f.h));
  return buf;
}

RunOutcome run_experiment(const ExperimentConfig& cfg, const std::vector<DeviceDataset>& datasets) {
  RunOutcome run;
  run.config = cfg.resolved();
  if (datasets.empty()) throw ConfigError("no device datasets");
  run.data_hash = dataset_digest(datasets);
  ArchitectureSpec arch = run.config.arch;
  arch.input_dim = datasets.front().train_benign.cols();
  run.federation = run_federation(run.config.fed, arch, datasets);
  run.report = evaluate_all(run.federation.final_params, datasets);
  run.report.wall_seconds = run.federation.wall_seconds;
  return run;
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  const ExperimentConfig r = cfg.resolved();
  return run_experiment(r, prepare_datasets(r));
}

std::string metrics_csv(const MetricsReport& report) {
  std::ostringstream o;
  o << "device,accuracy,precision,recall,f1,tpr,fpr,specificity,npv,auc\n";
  auto row = [&o](const std::string& name, const MetricValues& v, const std::optional<double>& a) {
    o << name;
    for (double x : {v.accuracy, v.precision, v.recall, v.f1, v.tpr, v.fpr, v.specificity, v.npv}) {
      o << ',' << format_number(x);
    }
    o << ',' << auc_cell(a) << '\n';
  };
  for (const auto& d : report.devices) row(std::to_string(d.device_id), d.values, d.auc);
  row("avg", report.average, report.auc_average);
  return o.str();
}

std::string round_log_jsonl(const FederationResult& fed, const std::vector<DeviceDataset>& datasets) {
  std::string out;
  for (const auto& r : fed.rounds) {
    nlohmann::json j;
    j["round"] = r.round;
    std::vector<std::size_t> ids;
    for (std::size_t c : r.selected) ids.push_back(datasets.at(c).device_id);
    j["selected"] = ids;
    j["client_losses"] = r.client_losses;
    j["retrain_trace"] = r.retrain_trace;
    j["retrain_avg_error"] = r.retrain_avg_error;
    j["wall_seconds"] = r.wall_seconds;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string config_echo(const ExperimentConfig& cfg, const std::string& data_hash,
                        std::size_t feature_dim) {
  std::string out = "# resolved configuration\n# data_hash = " + data_hash +
                    "\n# feature_dim = " + std::to_string(feature_dim) + "\n";
  return out + to_config_text(cfg);
}

std::vector<std::filesystem::path> cmd_synth(const ExperimentConfig& input) {
  ExperimentConfig cfg = input.resolved();
  const auto tables = synth_generate(cfg.synth);
  std::vector<std::pair<std::string, std::string>> files;
  std::vector<std::filesystem::path> written;
  for (std::size_t d = 0; d < tables.size(); ++d) {
    std::ostringstream o;
    write_csv(tables[d], o);
    const std::string name = "device_" + std::to_string(d + 1) + ".csv";
    files.emplace_back(name, o.str());
    written.push_back(cfg.out_dir / name);
  }
  files.emplace_back(kConfigEcho, "# resolved configuration\n" + to_config_text(cfg));
  write_files(cfg.out_dir, files);
  return written;
}

RunOutcome cmd_run(const ExperimentConfig& input) {
  const ExperimentConfig cfg = input.resolved();
  ensure_dir(cfg.out_dir);
  const auto datasets = prepare_datasets(cfg);
  RunOutcome run = run_experiment(cfg, datasets);
  bundle(run, datasets);
  return run;
}

CompareOutcome cmd_compare(const ExperimentConfig& input) {
  const ExperimentConfig cfg = input.resolved();
  ensure_dir(cfg.out_dir);
  const auto datasets = prepare_datasets(cfg);

  CompareOutcome out;
  auto one = [&](Aggregator agg) {
    ExperimentConfig c = cfg;
    c.fed.aggregator = agg;
    c.out_dir = cfg.out_dir / to_string(agg);
    RunOutcome run = run_experiment(c, datasets);
    bundle(run, datasets);
    return run;
  };
  out.fedavg = one(Aggregator::fedavg);
  out.fedavgm = one(Aggregator::fedavgm);

  std::ostringstream t;
  t << "model,precision_avg,tpr_avg,fpr_avg,f1_avg,auc_avg,time_sec\n";
  for (const RunOutcome* r : {&out.fedavg, &out.fedavgm}) {
    const auto& a = r->report.average;
    t << to_string(r->config.fed.aggregator) << ',' << format_number(a.precision) << ','
      << format_number(a.tpr) << ',' << format_number(a.fpr) << ',' << format_number(a.f1) << ','
      << auc_cell(r->report.auc_average) << ',' << format_number(r->report.wall_seconds) << '\n';
  }
  out.table = t.str();
  write_files(cfg.out_dir, {{kComparisonFile, out.table}});
  return out;
}

}  // namespace fedad
