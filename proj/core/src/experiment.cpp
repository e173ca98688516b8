#include "antidote/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "antidote/inner_solver.hpp"
#include "antidote/primal_oracle.hpp"
#include "antidote/rng.hpp"
#include "json.hpp"

namespace antidote {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kTrainStream = 0;
constexpr std::uint64_t kTestStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kInitStream = 4;

NoisyDataset apply_noise(const DataRecipe& data, const NoisyDataset& clean, std::uint64_t seed) {
  if (data.noise == "none") return clean;
  if (data.noise == "symmetric") return inject_symmetric(clean, data.noise_rate, seed);
  if (data.noise == "asymmetric") {
    return inject_asymmetric(clean, data.flip_map, data.noise_rate, seed);
  }
  if (data.noise == "transition") return inject_transition(clean, TransitionMatrix(data.transition), seed);
  throw std::invalid_argument("unknown noise type: " + data.noise);
}

json optional_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json record_to_json(const EpochRecord& r, Method arm, std::uint64_t seed) {
  return json{{"arm", to_string(arm)},
              {"seed", seed},
              {"epoch", r.epoch},
              {"learning_rate", r.learning_rate},
              {"train_loss", r.train_loss},
              {"weighted_loss", r.weighted_loss},
              {"train_clean_accuracy", r.train_clean_accuracy},
              {"test_accuracy", optional_number(r.test_accuracy)},
              {"clean_median", finite_or_null(r.clean_median)},
              {"noisy_median", finite_or_null(r.noisy_median)},
              {"forgotten_fraction", optional_number(r.forgotten_fraction)},
              {"lambda_mean", r.lambda_mean},
              {"rho_mean", r.rho_mean},
              {"r_max_mean", optional_number(r.r_max_mean)}};
}

std::vector<json> read_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log: " + path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

void ensure_writable(const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  const fs::path probe = root / ".write_probe";
  {
    std::ofstream out(probe);
    if (ec || !out) throw std::runtime_error("output directory is not writable: " + root.string());
  }
  fs::remove(probe, ec);
}

ArmSummary summarize_values(const std::string& arm, const std::vector<double>& values) {
  ArmSummary s;
  s.arm = arm;
  s.n_seeds = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

void write_summary_rows(std::ostream& out, const std::vector<ArmSummary>& rows,
                        const std::string& prefix) {
  out.precision(17);
  for (const auto& r : rows) {
    out << prefix << r.arm << ',' << r.mean << ',' << r.std << ',' << r.n_seeds << '\n';
  }
}

}  // namespace

DatasetPair build_datasets(const ExperimentSpec& spec, std::uint64_t seed) {
  const DataRecipe& d = spec.data;
  if (d.source == "blobs") {
    BlobSpec blobs{d.classes, d.samples, d.dims, d.separation, d.spread,
                   derive_seed(seed, kTrainStream)};
    NoisyDataset clean = make_gaussian_blobs(blobs);
    blobs.samples = d.test_samples;
    blobs.seed = derive_seed(seed, kTestStream);
    NoisyDataset test = make_gaussian_blobs(blobs);
    return {apply_noise(d, clean, derive_seed(seed, kNoiseStream)), std::move(test)};
  }
  if (d.source == "csv") {
    const NoisyDataset all = load_csv(d.csv_path, d.label_column, d.classes);
    if (!(d.test_fraction > 0.0 && d.test_fraction < 1.0)) {
      throw std::invalid_argument("data.test_fraction must be in (0, 1)");
    }
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, kTrainStream));
    rng.shuffle(order);
    const auto n_test = static_cast<std::size_t>(std::lround(d.test_fraction * all.size()));
    if (n_test == 0 || n_test >= all.size()) {
      throw std::invalid_argument("csv split leaves an empty train or test set");
    }
    const std::size_t dims = all.dims();
    auto gather = [&](std::size_t begin, std::size_t end) {
      std::vector<double> x;
      std::vector<int> y;
      x.reserve((end - begin) * dims);
      for (std::size_t k = begin; k < end; ++k) {
        const auto row = all.features().row(order[k]);
        x.insert(x.end(), row.begin(), row.end());
        y.push_back(all.observed_labels()[order[k]]);
      }
      return NoisyDataset(FeatureMatrix(end - begin, dims, std::move(x)), std::move(y), d.classes);
    };
    NoisyDataset test = gather(0, n_test);
    NoisyDataset train = gather(n_test, all.size());
    return {apply_noise(d, train, derive_seed(seed, kNoiseStream)), std::move(test)};
  }
  throw std::invalid_argument("unknown data source: " + d.source);
}

fs::path output_root(const ExperimentSpec& spec) {
  if (const char* env = std::getenv("ANTIDOTE_OUT"); env != nullptr && *env != '\0') return env;
  return spec.output_dir;
}

fs::path run_directory(const fs::path& root, Method arm, std::uint64_t seed) {
  return root / to_string(arm) / ("seed_" + std::to_string(seed));
}

RunOutcome run_single(const ExperimentSpec& spec, Method arm, std::uint64_t seed,
                      const fs::path& root) {
  const TrainConfig config = config_for(spec, arm, seed);
  config.validate();
  const DatasetPair data = build_datasets(spec, seed);

  const fs::path dir = run_directory(root, arm, seed);
  fs::create_directories(dir);

  ExperimentSpec snapshot = spec;
  snapshot.arms = {arm};
  snapshot.seeds = {seed};
  {
    std::ofstream cfg(dir / "config.txt");
    cfg << serialize_config(snapshot);
    if (!cfg) throw std::runtime_error("cannot write " + (dir / "config.txt").string());
  }

  std::ofstream log(dir / "log.jsonl", std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + (dir / "log.jsonl").string());

  std::vector<int> saves = spec.checkpoint_epochs;
  saves.push_back(config.epochs);

  TrainMonitor monitor;
  monitor.test_set = &data.test;
  monitor.on_epoch = [&](const EpochRecord& rec, const MlpModel& model) {
    log << record_to_json(rec, arm, seed).dump() << '\n';
    if (std::find(saves.begin(), saves.end(), rec.epoch) != saves.end()) {
      save_checkpoint(model, dir / ("checkpoint_epoch_" + std::to_string(rec.epoch) + ".bin"));
    }
  };

  const MlpModel init =
      MlpModel::initialized(layer_sizes_for(spec, data.train.dims(), data.train.class_count()),
                            spec.model.activation, derive_seed(seed, kInitStream));
  TrainResult result = train(data.train, init, config, monitor);
  log.flush();
  if (!log) throw std::runtime_error("failed writing " + (dir / "log.jsonl").string());
  return {arm, seed, dir, std::move(result)};
}

std::vector<ArmSummary> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const fs::path root = output_root(spec);
  ensure_writable(root);
  for (Method arm : spec.arms) {
    for (std::uint64_t seed : spec.seeds) run_single(spec, arm, seed, root);
  }
  return summarize(root);
}

std::vector<ArmSummary> summarize(const fs::path& root) {
  // Arm order follows the method enumeration so the CSV is stable.
  std::map<Method, std::vector<double>> accuracies;
  if (!fs::is_directory(root)) throw std::runtime_error("not a directory: " + root.string());
  for (const auto& arm_dir : fs::directory_iterator(root)) {
    if (!arm_dir.is_directory()) continue;
    Method arm;
    try {
      arm = parse_method(arm_dir.path().filename().string());
    } catch (const std::invalid_argument&) {
      continue;
    }
    std::vector<fs::path> logs;
    for (const auto& seed_dir : fs::directory_iterator(arm_dir.path())) {
      const fs::path log = seed_dir.path() / "log.jsonl";
      if (seed_dir.is_directory() && fs::exists(log)) logs.push_back(log);
    }
    std::sort(logs.begin(), logs.end());
    for (const auto& log : logs) {
      const auto rows = read_log(log);
      if (rows.empty()) throw std::runtime_error("empty log: " + log.string());
      const json& last = rows.back();
      if (!last.contains("test_accuracy") || last["test_accuracy"].is_null()) {
        throw std::runtime_error("log has no test accuracy: " + log.string());
      }
      accuracies[arm].push_back(last["test_accuracy"].get<double>());
    }
  }
  if (accuracies.empty()) throw std::runtime_error("no run logs found under " + root.string());

  std::vector<ArmSummary> rows;
  for (const auto& [arm, values] : accuracies) rows.push_back(summarize_values(to_string(arm), values));
  std::ofstream out(root / "summary.csv");
  out << "arm,mean,std,n_seeds\n";
  write_summary_rows(out, rows, "");
  if (!out) throw std::runtime_error("cannot write " + (root / "summary.csv").string());
  return rows;
}

std::vector<SweepPoint> run_sweep(const ExperimentSpec& spec, const std::string& key,
                                  const std::vector<std::string>& values) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  const fs::path root = output_root(spec);
  std::vector<ExperimentSpec> specs;
  for (const auto& v : values) {
    ExperimentSpec s = spec;
    apply_override(s, key, v);
    s.output_dir = (root / (key + "=" + v)).string();
    s.validate();
    specs.push_back(std::move(s));
  }
  ensure_writable(root);

  std::vector<SweepPoint> points;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const fs::path dir = specs[i].output_dir;
    ensure_writable(dir);
    for (Method arm : specs[i].arms) {
      for (std::uint64_t seed : specs[i].seeds) run_single(specs[i], arm, seed, dir);
    }
    points.push_back({values[i], summarize(dir)});
  }
  std::ofstream out(root / "sweep.csv");
  out << "key,value,arm,mean,std,n_seeds\n";
  for (const auto& p : points) write_summary_rows(out, p.summary, key + ',' + p.value + ',');
  if (!out) throw std::runtime_error("cannot write " + (root / "sweep.csv").string());
  return points;
}

DualityReport verify_duality(std::size_t n, std::size_t trials, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("verify_duality: n must be >= 1");
  if (n > 64) throw std::invalid_argument("verify_duality: n must be <= 64");
  const FFamily families[] = {FFamily::kl(), FFamily::alpha(2.0), FFamily::alpha(3.0)};
  const double kappas[] = {0.0, 0.05};
  const double deltas[] = {0.1, std::numbers::ln2, 1.0};

  DualityReport report;
  Rng rng(seed);
  std::vector<double> losses(n);
  for (const auto& family : families) {
    for (double kappa : kappas) {
      for (double delta : deltas) {
        const DivergenceSpec spec{family, delta, kappa, std::nullopt};
        for (std::size_t t = 0; t < trials; ++t) {
          for (double& l : losses) l = rng.uniform(0.0, 5.0);
          const double primal = solve_primal(losses, spec).objective;
          const double dual = solve_dual(losses, spec).value;
          const double gap = std::abs(primal - dual);
          report.max_weak_violation = std::max(report.max_weak_violation, dual - primal);
          if (gap > report.max_gap || report.instances == 0) {
            report.max_gap = std::max(report.max_gap, gap);
            std::ostringstream where;
            where << family.name() << " kappa=" << kappa << " delta=" << delta << " trial=" << t;
            report.worst = where.str();
          }
          ++report.instances;
        }
      }
    }
  }
  report.passed = report.max_gap <= kDualityTolerance && report.max_weak_violation <= 1e-9;
  return report;
}

std::vector<HistogramSummary> emit_histograms(const fs::path& run_dir,
                                              const std::vector<int>& epochs) {
  if (epochs.empty()) throw std::invalid_argument("emit_histograms: no epochs requested");
  const ExperimentSpec spec = load_config(run_dir / "config.txt");
  if (spec.arms.size() != 1 || spec.seeds.size() != 1) {
    throw std::runtime_error("config.txt of a run must name one arm and one seed");
  }
  const Method arm = spec.arms.front();
  const std::uint64_t seed = spec.seeds.front();
  const TrainConfig config = config_for(spec, arm, seed);
  const FamilyKind kind =
      arm == Method::cross_entropy ? FamilyKind::kl : config.divergence.family.kind();

  for (int e : epochs) {
    const fs::path ckpt = run_dir / ("checkpoint_epoch_" + std::to_string(e) + ".bin");
    if (!fs::exists(ckpt)) {
      throw std::runtime_error("no checkpoint for epoch " + std::to_string(e) + " in " +
                               run_dir.string());
    }
  }

  std::map<int, double> rho_at;
  for (const auto& row : read_log(run_dir / "log.jsonl")) {
    rho_at[row.at("epoch").get<int>()] = row.at("rho_mean").get<double>();
  }

  const DatasetPair data = build_datasets(spec, seed);
  std::vector<HistogramSummary> out;
  std::ofstream summary(run_dir / "histogram_summary.txt");
  summary.precision(10);
  for (int e : epochs) {
    const MlpModel model =
        load_checkpoint(run_dir / ("checkpoint_epoch_" + std::to_string(e) + ".bin"));
    const auto rho = rho_at.find(e);
    if (rho == rho_at.end()) {
      throw std::runtime_error("log.jsonl has no record for epoch " + std::to_string(e));
    }
    const Histogram h = histogram_snapshot(model, data.train, {0.0, rho->second}, kind);

    HistogramSummary s{e, run_dir / ("histogram_epoch_" + std::to_string(e) + ".csv"),
                       h.clean_median, h.noisy_median};
    std::ofstream csv(s.csv);
    csv.precision(17);
    csv << "bin_left,clean_count,noisy_count\n";
    for (std::size_t b = 0; b < Histogram::kBins; ++b) {
      csv << h.bin_left[b] << ',' << h.clean_counts[b] << ',' << h.noisy_counts[b] << '\n';
    }
    if (!csv) throw std::runtime_error("cannot write " + s.csv.string());
    summary << "epoch " << e << ": clean_median " << h.clean_median << " noisy_median "
            << h.noisy_median << " difference " << h.clean_median - h.noisy_median << '\n';
    out.push_back(std::move(s));
  }
  if (!summary) throw std::runtime_error("cannot write histogram_summary.txt");
  return out;
}

}  // namespace antidote
