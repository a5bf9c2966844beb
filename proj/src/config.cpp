#include "fedad/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fedad/error.hpp"

namespace fedad {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw FormatError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw FormatError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FormatError("config: '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += fmt(xs[i]);
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"num_clients", [](auto& c, auto& k, auto& v) { c.fed.num_clients = to_size(k, v); }},
      {"num_selected", [](auto& c, auto& k, auto& v) { c.fed.num_selected = to_size(k, v); }},
      {"batch_size", [](auto& c, auto& k, auto& v) { c.fed.batch_size = to_size(k, v); }},
      {"baseline_num", [](auto& c, auto& k, auto& v) { c.fed.baseline_num = to_size(k, v); }},
      {"num_rounds", [](auto& c, auto& k, auto& v) { c.fed.num_rounds = to_size(k, v); }},
      {"epochs", [](auto& c, auto& k, auto& v) { c.fed.epochs = to_size(k, v); }},
      {"retrain_epochs", [](auto& c, auto& k, auto& v) { c.fed.retrain_epochs = to_size(k, v); }},
      {"optimizer", [](auto& c, auto&, auto& v) { c.fed.optimizer = v; }},
      {"learning_rate", [](auto& c, auto& k, auto& v) { c.fed.learning_rate = to_double(k, v); }},
      {"weight_decay", [](auto& c, auto& k, auto& v) { c.fed.weight_decay = to_double(k, v); }},
      {"momentum", [](auto& c, auto& k, auto& v) { c.fed.momentum = to_double(k, v); }},
      {"aggregator", [](auto& c, auto&, auto& v) { c.fed.aggregator = parse_aggregator(v); }},
      {"server_momentum_beta",
       [](auto& c, auto& k, auto& v) { c.fed.server_momentum_beta = to_double(k, v); }},
      {"client_weighting",
       [](auto& c, auto&, auto& v) { c.fed.client_weighting = parse_client_weighting(v); }},
      {"retrain_schedule",
       [](auto& c, auto&, auto& v) { c.fed.retrain_schedule = parse_retrain_schedule(v); }},
      {"parallel_clients",
       [](auto& c, auto& k, auto& v) { c.fed.parallel_clients = to_bool(k, v); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.fed.master_seed = to_u64(k, v); }},
      {"anomaly_mix_ratio",
       [](auto& c, auto& k, auto& v) { c.anomaly_mix_ratio = to_double(k, v); }},
      {"encoder_ratios",
       [](auto& c, auto& k, auto& v) {
         c.arch.encoder_ratios.clear();
         for (const auto& item : split_list(v)) c.arch.encoder_ratios.push_back(to_double(k, item));
       }},
      {"hidden_activation",
       [](auto& c, auto&, auto& v) { c.arch.hidden_activation = parse_activation(v); }},
      {"out_dir", [](auto& c, auto&, auto& v) { c.out_dir = v; }},
      {"data.source",
       [](auto& c, auto& k, auto& v) {
         if (v == "synth") {
           c.source = DataSource::synth;
         } else if (v == "csv") {
           c.source = DataSource::csv;
         } else {
           throw FormatError("config: '" + k + "' must be synth or csv");
         }
       }},
      {"data.csv.pattern", [](auto& c, auto&, auto& v) { c.csv_pattern = v; }},
      {"data.drop_id_column", [](auto& c, auto& k, auto& v) { c.drop_id_column = to_bool(k, v); }},
      {"data.synth.num_devices",
       [](auto& c, auto& k, auto& v) {
         c.synth.num_devices = to_size(k, v);
         c.synth_devices_set = true;
       }},
      {"data.synth.feature_dim",
       [](auto& c, auto& k, auto& v) { c.synth.feature_dim = to_size(k, v); }},
      {"data.synth.benign_rows",
       [](auto& c, auto& k, auto& v) {
         c.synth.benign_rows.clear();
         for (const auto& item : split_list(v)) c.synth.benign_rows.push_back(to_size(k, item));
       }},
      {"data.synth.anomaly_rows",
       [](auto& c, auto& k, auto& v) {
         c.synth.anomaly_rows.clear();
         for (const auto& item : split_list(v)) c.synth.anomaly_rows.push_back(to_size(k, item));
       }},
      {"data.synth.manifold_rank",
       [](auto& c, auto& k, auto& v) { c.synth.manifold_rank = to_size(k, v); }},
      {"data.synth.device_spread",
       [](auto& c, auto& k, auto& v) { c.synth.device_spread = to_double(k, v); }},
      {"data.synth.noise_scale",
       [](auto& c, auto& k, auto& v) { c.synth.noise_scale = to_double(k, v); }},
      {"data.synth.anomaly_shift_scale",
       [](auto& c, auto& k, auto& v) { c.synth.anomaly_shift_scale = to_double(k, v); }},
      {"data.synth.anomaly_feature_fraction",
       [](auto& c, auto& k, auto& v) { c.synth.anomaly_feature_fraction = to_double(k, v); }},
      {"data.synth.seed",
       [](auto& c, auto& k, auto& v) {
         c.synth.seed = to_u64(k, v);
         c.synth_seed_set = true;
       }},
  };
  return table;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void ExperimentConfig::set_seed(std::uint64_t seed) { fed.master_seed = seed; }

ExperimentConfig ExperimentConfig::resolved() const {
  ExperimentConfig c = *this;
  if (!c.synth_seed_set) c.synth.seed = c.fed.master_seed;
  if (!c.synth_devices_set) c.synth.num_devices = c.fed.num_clients;
  c.synth_seed_set = true;
  c.synth_devices_set = true;
  c.synth = c.synth.resolved();
  c.fed.validate();
  if (!(c.anomaly_mix_ratio >= 0.0)) throw ConfigError("anomaly_mix_ratio must be >= 0");
  if (c.source == DataSource::synth) {
    c.synth.validate();
    if (c.synth.num_devices != c.fed.num_clients) {
      throw ConfigError("data.synth.num_devices must equal num_clients");
    }
  } else if (c.csv_pattern.empty()) {
    throw ConfigError("data.source = csv requires data.csv.pattern");
  }
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw FormatError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    it->second(cfg, key, value);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const ExperimentConfig& cfg) {
  const auto& f = cfg.fed;
  const auto& s = cfg.synth;
  auto sz = [](std::size_t v) { return std::to_string(v); };
  std::ostringstream o;
  o << "num_clients = " << f.num_clients << '\n'
    << "num_selected = " << f.num_selected << '\n'
    << "batch_size = " << f.batch_size << '\n'
    << "baseline_num = " << f.baseline_num << '\n'
    << "num_rounds = " << f.num_rounds << '\n'
    << "epochs = " << f.epochs << '\n'
    << "retrain_epochs = " << f.retrain_epochs << '\n'
    << "optimizer = " << f.optimizer << '\n'
    << "learning_rate = " << format_number(f.learning_rate) << '\n'
    << "weight_decay = " << format_number(f.weight_decay) << '\n'
    << "momentum = " << format_number(f.momentum) << '\n'
    << "aggregator = " << to_string(f.aggregator) << '\n'
    << "server_momentum_beta = " << format_number(f.server_momentum_beta) << '\n'
    << "client_weighting = " << to_string(f.client_weighting) << '\n'
    << "retrain_schedule = " << to_string(f.retrain_schedule) << '\n'
    << "parallel_clients = " << (f.parallel_clients ? "true" : "false") << '\n'
    << "seed = " << f.master_seed << '\n'
    << "anomaly_mix_ratio = " << format_number(cfg.anomaly_mix_ratio) << '\n'
    << "encoder_ratios = " << join(cfg.arch.encoder_ratios, format_number) << '\n'
    << "hidden_activation = " << to_string(cfg.arch.hidden_activation) << '\n'
    << "data.source = " << (cfg.source == DataSource::synth ? "synth" : "csv") << '\n'
    << "data.csv.pattern = " << cfg.csv_pattern << '\n'
    << "data.drop_id_column = " << (cfg.drop_id_column ? "true" : "false") << '\n'
    << (cfg.synth_devices_set ? "" : "# ") << "data.synth.num_devices = " << s.num_devices << '\n'
    << "data.synth.feature_dim = " << s.feature_dim << '\n'
    << "data.synth.benign_rows = " << join(s.benign_rows, sz) << '\n'
    << "data.synth.anomaly_rows = " << join(s.anomaly_rows, sz) << '\n'
    << "data.synth.manifold_rank = " << s.manifold_rank << '\n'
    << "data.synth.device_spread = " << format_number(s.device_spread) << '\n'
    << "data.synth.noise_scale = " << format_number(s.noise_scale) << '\n'
    << "data.synth.anomaly_shift_scale = " << format_number(s.anomaly_shift_scale) << '\n'
    << "data.synth.anomaly_feature_fraction = " << format_number(s.anomaly_feature_fraction)
    << '\n'
    << (cfg.synth_seed_set ? "" : "# ") << "data.synth.seed = " << s.seed << '\n'
    << "out_dir = " << cfg.out_dir.string() << '\n';
  return o.str();
}

}  // namespace fedad
