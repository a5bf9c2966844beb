// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance --config configs/default.conf --work <scratch dir>
// FEDAD_NBAIOT_CSV=<file> enables the real-data check (criterion 8).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fedad/config.hpp"
#include "fedad/detection.hpp"
#include "fedad/experiment.hpp"
#include "fedad/federation.hpp"
#include "fedad/synth.hpp"
#include "oracles.hpp"

using namespace fedad;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  bool skipped = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(4);
  o << v;
  return o.str();
}

bool thresholds_exact(const MetricsReport& r) {
  for (const auto& d : r.devices)
    if (d.threshold.tr != d.threshold.mse_mean + d.threshold.mse_std) return false;
  return true;
}

std::vector<DeviceDataset> small_datasets(std::size_t devices, std::uint64_t seed) {
  SynthConfig sc;
  sc.num_devices = devices;
  sc.feature_dim = 12;
  sc.seed = seed;
  for (std::size_t d = 0; d < devices; ++d) {
    sc.benign_rows.push_back(90 + 30 * d);
    sc.anomaly_rows.push_back(300);
  }
  const auto tables = synth_generate(sc);
  std::vector<DeviceDataset> out;
  for (std::size_t d = 0; d < devices; ++d)
    out.push_back(split_and_scale(tables[d], RngStream(seed, "split", static_cast<std::int64_t>(d)),
                                  {}, d + 1));
  return out;
}

FederatedConfig small_fed(std::size_t clients) {
  FederatedConfig c;
  c.num_clients = clients;
  c.num_selected = 3;
  c.batch_size = 32;
  c.baseline_num = 90;
  c.num_rounds = 4;
  c.epochs = 2;
  c.retrain_epochs = 2;
  c.master_seed = 3;
  return c;
}

const ArchitectureSpec kSmallArch{12, {0.75, 0.5, 0.25}, Activation::relu};

// 1
Verdict gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  const int trials = 24;
  for (int t = 0; t < trials; ++t) {
    Rng rng = RngStream(2024, "accept_arch", -1, t).generator();
    const std::size_t input = 4 + rng.below(17);
    const std::size_t depth = 2 + rng.below(3);
    std::vector<double> ratios;
    double r = 0.85;
    for (std::size_t d = 0; d < depth; ++d) {
      ratios.push_back(r);
      r *= 0.7;
    }
    const ArchitectureSpec spec{input, ratios, t % 3 == 2 ? Activation::tanh : Activation::relu};
    ModelParams p = init_params(spec, RngStream(2024, "accept_init", -1, t));
    for (auto& l : p.layers)
      for (double& b : l.bias) b = 0.1 * rng.normal();
    const Matrix x = oracle::random_matrix(1 + rng.below(8), input, rng);
    const auto a = flatten(backward(p, x));
    const auto n = oracle::fd_gradient(p, x, 1e-6);
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, oracle::rel_err(a[i], n[i]));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-5 && secs < 10.0, false,
          std::to_string(trials) + " architectures, worst rel err " + fmt(worst) + ", " +
              fmt(secs) + " s"};
}

// 2
Verdict aggregation_check() {
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Rng rng = RngStream(7, "accept_avg", -1, t).generator();
    std::vector<ModelParams> ps;
    std::vector<std::size_t> counts;
    for (int i = 0; i < 3; ++i) {
      ps.push_back(init_params(kSmallArch, RngStream(7, "accept_p", i, t)));
      counts.push_back(1 + rng.below(5000));
    }
    const auto got = flatten(fedavg(ps, counts, ClientWeighting::by_sample_count));
    const double total = static_cast<double>(counts[0] + counts[1] + counts[2]);
    std::vector<std::vector<double>> flat;
    for (const auto& p : ps) flat.push_back(flatten(p));
    for (std::size_t j = 0; j < got.size(); ++j) {
      long double s = 0;
      for (int i = 0; i < 3; ++i) s += static_cast<long double>(counts[i]) * flat[i][j];
      worst = std::max(worst, std::abs(got[j] - static_cast<double>(s / total)));
    }
  }
  const auto ds = small_datasets(5, 3);
  FederatedConfig cfg = small_fed(5);
  const auto plain = run_federation(cfg, kSmallArch, ds);
  cfg.aggregator = Aggregator::fedavgm;
  cfg.server_momentum_beta = 0.0;
  const auto m = run_federation(cfg, kSmallArch, ds);
  bool same = m.final_params == plain.final_params && m.rounds.size() == 4;
  for (std::size_t r = 0; r < m.rounds.size(); ++r)
    same = same && m.rounds[r].retrain_trace == plain.rounds[r].retrain_trace &&
           m.rounds[r].client_losses == plain.rounds[r].client_losses;
  return {worst < 1e-12 && same, false,
          "100 weighted means, worst abs err " + fmt(worst) +
              (same ? "; beta=0 trajectory identical over 4 rounds" : "; beta=0 trajectory differs")};
}

// 3 (the per-report identity is re-checked on every report produced later)
Verdict threshold_check() {
  double worst = 0.0;
  bool exact = true;
  for (int t = 0; t < 200; ++t) {
    Rng rng = RngStream(11, "accept_thr", -1, t).generator();
    std::vector<double> s(1 + rng.below(2000));
    for (double& v : s) v = std::exp(2.0 * rng.normal());
    const Threshold th = threshold_from_scores(s);
    const auto o = oracle::mean_std(s);
    worst = std::max(worst, std::abs(th.tr - (o.mean + o.std)) / std::max(1.0, o.mean + o.std));
    exact = exact && th.tr == th.mse_mean + th.mse_std;
  }
  return {worst < 1e-12 && exact, false, "200 score vectors, worst rel err " + fmt(worst)};
}

// 4
Verdict metric_check() {
  double worst_metric = 0.0, worst_auc = 0.0;
  bool ok = true;
  for (int t = 0; t < 1000; ++t) {
    Rng rng = RngStream(13, "accept_metric", -1, t).generator();
    const std::size_t n = 1 + rng.below(500);
    const double pos_rate = rng.uniform();
    std::vector<int> y(n), pred(n);
    std::vector<double> score(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform() < pos_rate ? 1 : 0;
      // coarse scores so ties occur
      score[i] = std::round((y[i] + rng.normal()) * 8.0) / 8.0;
    }
    const double tr = rng.normal();
    for (std::size_t i = 0; i < n; ++i) pred[i] = score[i] > tr ? 1 : 0;

    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pred[i] == 1 && y[i] == 1) ++tp;
      if (pred[i] == 1 && y[i] == 0) ++fp;
      if (pred[i] == 0 && y[i] == 0) ++tn;
      if (pred[i] == 0 && y[i] == 1) ++fn;
    }
    auto div = [](double a, double b) { return b == 0 ? 0.0 : a / b; };
    const double prec = div(tp, tp + fp), rec = div(tp, tp + fn);
    const std::vector<double> expect{div(tp + tn, static_cast<double>(n)), prec, rec,
                                     div(2 * prec * rec, prec + rec), rec, div(fp, fp + tn),
                                     div(tn, tn + fp), div(tn, tn + fn)};
    const ConfusionCounts c = confusion(classify_scores(score, tr), y);
    const MetricValues m = metrics(c);
    const std::vector<double> got{m.accuracy, m.precision, m.recall,
                                  m.f1, m.tpr, m.fpr, m.specificity, m.npv};
    ok = ok && c.tp == tp && c.fp == fp && c.tn == tn && c.fn == fn;
    for (std::size_t k = 0; k < expect.size(); ++k)
      worst_metric = std::max(worst_metric, std::abs(expect[k] - got[k]));

    const auto a = auc(score, y);
    const bool both = tp + fn > 0 && fp + tn > 0;
    if (both != a.has_value()) ok = false;
    if (a) worst_auc = std::max(worst_auc, std::abs(*a - oracle::pair_auc(score, y)));
  }
  return {ok && worst_metric < 1e-12 && worst_auc < 1e-12, false,
          "1000 sets, worst metric err " + fmt(worst_metric) + ", worst auc err " + fmt(worst_auc)};
}

// 5
Verdict determinism_check(const ExperimentConfig& base, const fs::path& work) {
  ExperimentConfig a = base, b = base, seq = base;
  a.out_dir = work / "det_a";
  b.out_dir = work / "det_b";
  seq.out_dir = work / "det_seq";
  a.fed.parallel_clients = b.fed.parallel_clients = true;
  seq.fed.parallel_clients = false;
  const RunOutcome ra = cmd_run(a);
  cmd_run(b);
  const RunOutcome rs = cmd_run(seq);
  const bool bytes = slurp(a.out_dir / kMetricsFile) == slurp(b.out_dir / kMetricsFile) &&
                     !slurp(a.out_dir / kMetricsFile).empty();
  const bool params = ra.federation.final_params == rs.federation.final_params;
  const bool thr = thresholds_exact(ra.report) && thresholds_exact(rs.report);
  return {bytes && params && thr, false,
          std::string("metrics CSV ") + (bytes ? "byte-identical" : "differs") +
              ", parallel vs sequential params " + (params ? "identical" : "differ")};
}

struct CompareStats {
  double fpr_fedavg = 0, fpr_fedavgm = 0;
  int good_fedavg = 0, good_fedavgm = 0;
  double seconds = 0;
  bool thresholds = true;
};

CompareStats compare_seed(const ExperimentConfig& base, const fs::path& work, std::uint64_t seed) {
  ExperimentConfig c = base;
  c.set_seed(seed);
  c.out_dir = work / ("compare_seed" + std::to_string(seed));
  const auto t0 = std::chrono::steady_clock::now();
  const CompareOutcome out = cmd_compare(c);
  CompareStats s;
  s.seconds = seconds_since(t0);
  s.fpr_fedavg = out.fedavg.report.average.fpr;
  s.fpr_fedavgm = out.fedavgm.report.average.fpr;
  for (const auto& d : out.fedavg.report.devices) s.good_fedavg += d.values.f1 >= 0.95;
  for (const auto& d : out.fedavgm.report.devices) s.good_fedavgm += d.values.f1 >= 0.95;
  s.thresholds = thresholds_exact(out.fedavg.report) && thresholds_exact(out.fedavgm.report);
  return s;
}

// 6
Verdict benchmark_check(const ExperimentConfig& base, const CompareStats& s) {
  const ExperimentConfig r = base.resolved();
  const auto& b = r.synth.benign_rows;
  const auto [lo, hi] = std::minmax_element(b.begin(), b.end());
  bool shape = r.synth.num_devices == 9 && r.synth.feature_dim == 115 && *hi >= 3 * *lo &&
               r.fed.num_rounds == 4;
  for (std::size_t d = 0; d < b.size(); ++d) shape = shape && r.synth.anomaly_rows[d] >= 3 * b[d];
  const bool pass = shape && s.good_fedavg >= 7 && s.good_fedavgm >= 7 && s.seconds <= 120.0;
  return {pass, false,
          "devices with F1>=0.95: fedavg " + std::to_string(s.good_fedavg) + "/9, fedavgm " +
              std::to_string(s.good_fedavgm) + "/9, both runs " + fmt(s.seconds) + " s" +
              (shape ? "" : ", benchmark shape violated")};
}

// 7
Verdict trend_check(const std::vector<CompareStats>& runs) {
  std::vector<double> a, m;
  std::string per;
  for (const auto& r : runs) {
    a.push_back(r.fpr_fedavg);
    m.push_back(r.fpr_fedavgm);
    per += " " + fmt(r.fpr_fedavg) + "/" + fmt(r.fpr_fedavgm);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
  };
  const double ma = median(a), mm = median(m);
  return {runs.size() >= 5 && mm <= ma, false,
          "median fpr_avg fedavg " + fmt(ma) + " vs fedavgm " + fmt(mm) + " over " +
              std::to_string(runs.size()) + " seeds (fedavg/fedavgm:" + per + ")"};
}

// 8
Verdict real_data_check(const ExperimentConfig& base, const fs::path& work) {
  const char* path = std::getenv("FEDAD_NBAIOT_CSV");
  if (!path || !*path) return {true, true, "FEDAD_NBAIOT_CSV not set"};
  const RawTable raw = ingest_csv(path);
  if (raw.row_count() < 50000)
    return {false, false, "dataset has " + std::to_string(raw.row_count()) + " rows, need 50000"};
  ExperimentConfig c = base;
  c.source = DataSource::csv;
  c.csv_pattern = path;
  c.fed.num_clients = 1;
  c.fed.num_selected = 1;
  c.synth_devices_set = false;
  c.out_dir = work / "real_data";
  const char* drop = std::getenv("FEDAD_NBAIOT_DROP_ID");
  c.drop_id_column = drop && std::string(drop) == "1";
  const RunOutcome r = cmd_run(c);
  const auto& v = r.report.devices.at(0).values;
  return {v.f1 >= 0.97 && v.fpr <= 0.05 && thresholds_exact(r.report), false,
          "f1 " + fmt(v.f1) + ", fpr " + fmt(v.fpr)};
}

// 9
Verdict invariant_check() {
  std::vector<std::string> failed;
  auto expect = [&failed](bool ok, const char* name) {
    if (!ok) failed.push_back(name);
  };

  // partitions: disjoint, exhaustive, label-pure; scaler from train only
  {
    RawTable t;
    t.header = {"id", "b"};
    const std::size_t nb = 97, na = 300;
    t.rows = Matrix(nb + na, 2);
    for (std::size_t i = 0; i < nb + na; ++i) {
      t.rows(i, 0) = static_cast<double>(i);
      t.rows(i, 1) = std::sin(static_cast<double>(i));
      t.type_tags.push_back(i < nb ? "benign" : "scan");
    }
    const RngStream st(5, "accept_split");
    const DeviceDataset d = split_and_scale(t, st);
    auto ids = [&d](const Matrix& m) {
      std::vector<long> out;
      for (std::size_t r = 0; r < m.rows(); ++r)
        out.push_back(std::lround(m(r, 0) * d.scaler.stds[0] + d.scaler.means[0]));
      return out;
    };
    std::vector<long> benign = ids(d.train_benign);
    const auto thr = ids(d.threshold_benign);
    benign.insert(benign.end(), thr.begin(), thr.end());
    const auto test = ids(d.test_features);
    bool pure = true;
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (d.test_labels[i] == 0) benign.push_back(test[i]);
      pure = pure && ((d.test_labels[i] == 0) == (test[i] < static_cast<long>(nb)));
    }
    std::sort(benign.begin(), benign.end());
    bool exhaustive = benign.size() == nb;
    for (std::size_t i = 0; exhaustive && i < nb; ++i) exhaustive = benign[i] == static_cast<long>(i);
    expect(exhaustive, "partition disjointness");
    expect(pure, "label purity");

    const auto train_ids = ids(d.train_benign);
    const std::set<long> train(train_ids.begin(), train_ids.end());
    RawTable changed = t;
    for (std::size_t i = 0; i < nb + na; ++i)
      if (!train.count(static_cast<long>(i))) changed.rows(i, 1) = 1e4 + static_cast<double>(i);
    const DeviceDataset e = split_and_scale(changed, st);
    expect(e.scaler.means == d.scaler.means && e.scaler.stds == d.scaler.stds, "scaler leakage guard");
    expect(clean(clean(t)) == clean(t), "clean idempotence");
  }

  // fedavg permutation invariance and convexity
  {
    Rng rng = RngStream(17, "accept_perm").generator();
    bool perm = true, convex = true;
    for (int t = 0; t < 20; ++t) {
      std::vector<ModelParams> ps;
      std::vector<std::size_t> counts;
      for (int i = 0; i < 5; ++i) {
        ps.push_back(init_params(kSmallArch, RngStream(17, "accept_perm_p", i, t)));
        counts.push_back(1 + rng.below(100));
      }
      const auto ref = flatten(fedavg(ps, counts, ClientWeighting::by_sample_count));
      std::vector<std::size_t> order{0, 1, 2, 3, 4};
      shuffle_in_place(order, rng);
      std::vector<ModelParams> ps2;
      std::vector<std::size_t> c2;
      for (std::size_t i : order) {
        ps2.push_back(ps[i]);
        c2.push_back(counts[i]);
      }
      const auto got = flatten(fedavg(ps2, c2, ClientWeighting::by_sample_count));
      for (std::size_t j = 0; j < ref.size(); ++j) {
        perm = perm && std::abs(ref[j] - got[j]) < 1e-12;
        double lo = 1e300, hi = -1e300;
        for (const auto& p : ps) {
          const double v = flatten(p)[j];
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        convex = convex && ref[j] >= lo - 1e-15 && ref[j] <= hi + 1e-15;
      }
    }
    expect(perm, "fedavg permutation invariance");
    expect(convex, "fedavg convex bounds");
  }

  // threshold monotonicity, AUC monotone-transform invariance, classify at +-inf
  {
    bool mono = true, transform = true, inf = true, identities = true;
    for (int t = 0; t < 50; ++t) {
      Rng rng = RngStream(19, "accept_mono", -1, t).generator();
      const std::size_t n = 50 + rng.below(300);
      std::vector<double> s(n), g(n);
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = rng.uniform() < 0.5;
        s[i] = std::exp(rng.normal() + y[i]);
        g[i] = 5.0 * std::sqrt(s[i]) - 2.0;
      }
      double pt = 2, pf = 2;
      for (double tr = 0; tr < 10; tr += 0.1) {
        const MetricValues m = metrics(confusion(classify_scores(s, tr), y));
        mono = mono && m.tpr <= pt && m.fpr <= pf;
        identities = identities && m.recall == m.tpr &&
                     (m.fpr + m.specificity == 0 || std::abs(m.fpr + m.specificity - 1) < 1e-15);
        pt = m.tpr;
        pf = m.fpr;
      }
      const auto a = auc(s, y), b = auc(g, y);
      transform = transform && a && b && std::abs(*a - *b) < 1e-12;
      const auto all1 = classify_scores(s, -INFINITY), all0 = classify_scores(s, INFINITY);
      inf = inf && std::count(all1.begin(), all1.end(), 1) == static_cast<long>(n) &&
            std::count(all0.begin(), all0.end(), 0) == static_cast<long>(n);
    }
    expect(mono, "threshold monotonicity");
    expect(transform, "AUC monotone-transform invariance");
    expect(inf, "classify at infinite thresholds");
    expect(identities, "recall/tpr and fpr/specificity identities");
  }

  // non-selected client ablation, symmetry oracle, parallel vs sequential
  {
    auto ds = small_datasets(5, 4);
    FederatedConfig cfg = small_fed(5);
    cfg.num_rounds = 1;
    cfg.retrain_epochs = 0;
    const auto base = run_federation(cfg, kSmallArch, ds);
    const auto& sel = base.rounds.at(0).selected;
    std::size_t outsider = 0;
    while (std::find(sel.begin(), sel.end(), outsider) != sel.end()) ++outsider;
    for (double& v : ds[outsider].train_benign.data()) v = -3.0 * v + 1.0;
    expect(run_federation(cfg, kSmallArch, ds).final_params == base.final_params,
           "non-selected client ablation");

    const auto one = small_datasets(1, 8);
    const std::vector<DeviceDataset> same(3, one[0]);
    FederatedConfig sym = small_fed(3);
    sym.num_selected = 3;
    sym.retrain_epochs = 0;
    sym.shared_client_streams = true;
    const ModelParams init = init_params(kSmallArch, RngStream(sym.master_seed, "init"));
    const auto fed = run_federation(sym, init, same);
    ModelParams g = init;
    for (std::int64_t r = 1; r <= static_cast<std::int64_t>(sym.num_rounds); ++r) {
      ClientState c;
      c.data = &same[0];
      g = local_train(c, g, sym, RngStream(sym.master_seed, "local", 0, r)).params;
    }
    const auto fa = flatten(fed.final_params), fb = flatten(g);
    double worst = 0;
    for (std::size_t i = 0; i < fa.size(); ++i) worst = std::max(worst, std::abs(fa[i] - fb[i]));
    expect(worst < 1e-12, "symmetric-client oracle");

    FederatedConfig p = small_fed(5);
    p.parallel_clients = true;
    const auto par = run_federation(p, kSmallArch, ds);
    p.parallel_clients = false;
    expect(run_federation(p, kSmallArch, ds).final_params == par.final_params,
           "parallel vs sequential equivalence");
  }

  std::string detail = failed.empty() ? "all property suites hold" : "failed:";
  for (const auto& f : failed) detail += " [" + f + "]";
  return {failed.empty(), false, detail};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path config_path = "configs/default.conf";
  fs::path work = fs::temp_directory_path() / "fedad_acceptance";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string k = argv[i];
    if (k == "--config") config_path = argv[i + 1];
    else if (k == "--work") work = argv[i + 1];
    else {
      std::cerr << "usage: acceptance [--config FILE] [--work DIR]\n";
      return 2;
    }
  }
  fs::remove_all(work);
  fs::create_directories(work);
  const ExperimentConfig base = load_config(config_path);

  int failures = 0;
  auto report = [&failures](int id, const std::function<Verdict()>& f) {
    Verdict v;
    try {
      v = f();
    } catch (const std::exception& e) {
      v = {false, false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::cout << "criterion " << id << ": " << (v.skipped ? "SKIP" : v.pass ? "PASS" : "FAIL")
              << " - " << v.detail << std::endl;
  };

  report(1, gradient_check);
  report(2, aggregation_check);
  report(3, threshold_check);
  report(4, metric_check);
  report(5, [&] { return determinism_check(base, work); });

  std::vector<CompareStats> seeds;
  bool compare_ok = true;
  std::string compare_error;
  try {
    for (std::uint64_t s = 1; s <= 5; ++s) seeds.push_back(compare_seed(base, work, s));
  } catch (const std::exception& e) {
    compare_ok = false;
    compare_error = e.what();
  }
  auto require_runs = [&](const std::function<Verdict()>& f) {
    return [&, f] {
      if (!compare_ok) return Verdict{false, false, "exception: " + compare_error};
      return f();
    };
  };
  report(6, require_runs([&] {
           Verdict v = benchmark_check(base, seeds.front());
           if (!seeds.front().thresholds) v = {false, false, v.detail + ", threshold identity broken"};
           return v;
         }));
  report(7, require_runs([&] {
           Verdict v = trend_check(seeds);
           for (const auto& s : seeds)
             if (!s.thresholds) v = {false, false, v.detail + ", threshold identity broken"};
           return v;
         }));
  report(8, [&] { return real_data_check(base, work); });
  report(9, invariant_check);

  std::cout << (failures == 0 ? "acceptance: all criteria met" : "acceptance: some criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
