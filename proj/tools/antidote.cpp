// antidote: train and compare noisy-label reweighting runs from the shell.
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "antidote/config.hpp"
#include "antidote/data.hpp"
#include "antidote/experiment.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kVerificationFailure = 2;

struct SpecOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> arms;
  std::string output;
};

void add_spec_options(CLI::App* cmd, SpecOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "key = value configuration file");
  cmd->add_option("-s,--set", o.overrides, "override a config key, e.g. train.epochs=5");
  cmd->add_option("--seed", o.seeds, "seed(s) to run, replacing experiment.seeds")->delimiter(',');
  cmd->add_option("--arm", o.arms, "arm(s) to run, replacing experiment.arms")->delimiter(',');
  cmd->add_option("-o,--output", o.output, "output root (ANTIDOTE_OUT still wins)");
}

antidote::ExperimentSpec build_spec(const SpecOptions& o) {
  antidote::ExperimentSpec spec =
      o.config_path.empty() ? antidote::ExperimentSpec{} : antidote::load_config(o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + kv);
    antidote::apply_override(spec, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.seeds.empty()) spec.seeds = o.seeds;
  if (!o.arms.empty()) {
    spec.arms.clear();
    for (const auto& a : o.arms) spec.arms.push_back(antidote::parse_method(a));
  }
  if (!o.output.empty()) spec.output_dir = o.output;
  spec.validate();
  return spec;
}

void print_summary(const std::vector<antidote::ArmSummary>& rows) {
  std::printf("%-20s %10s %10s %8s\n", "arm", "mean", "std", "n_seeds");
  for (const auto& r : rows) {
    std::printf("%-20s %10.4f %10.4f %8zu\n", r.arm.c_str(), r.mean, r.std, r.n_seeds);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ANTIDOTE noisy-label training and verification"};
  app.require_subcommand(1);

  SpecOptions train_opts;
  auto* train = app.add_subcommand("train", "run every (arm, seed) pair and summarize");
  add_spec_options(train, train_opts);

  SpecOptions sweep_opts;
  std::string sweep_key;
  std::vector<std::string> sweep_values;
  auto* sweep = app.add_subcommand("sweep", "repeat an experiment over values of one key");
  add_spec_options(sweep, sweep_opts);
  sweep->add_option("--key", sweep_key, "config key to vary")->required();
  sweep->add_option("--values", sweep_values, "values to try")->required()->delimiter(',');

  std::vector<std::size_t> duality_sizes{8};
  std::size_t duality_trials = 100;
  std::uint64_t duality_seed = 0;
  auto* duality = app.add_subcommand("verify-duality", "compare primal and dual optima");
  duality->add_option("-n,--size", duality_sizes, "instance size(s)")->delimiter(',');
  duality->add_option("--trials", duality_trials, "instances per configuration");
  duality->add_option("--seed", duality_seed, "random seed");

  std::string noise_in;
  std::string noise_out;
  int noise_classes = 0;
  int noise_label_column = -1;
  std::string noise_type = "symmetric";
  double noise_rate = 0.0;
  std::string noise_map;
  std::string noise_matrix;
  std::uint64_t noise_seed = 0;
  auto* inject = app.add_subcommand("inject-noise", "corrupt the labels of a CSV dataset");
  inject->add_option("-i,--input", noise_in, "input CSV")->required();
  inject->add_option("-o,--output", noise_out, "output CSV (a .truth.csv sidecar is written too)")
      ->required();
  inject->add_option("-k,--classes", noise_classes, "number of classes")->required();
  inject->add_option("--label-column", noise_label_column, "label column (negative from end)");
  inject->add_option("--type", noise_type, "symmetric | asymmetric | transition")
      ->check(CLI::IsMember({"symmetric", "asymmetric", "transition"}));
  inject->add_option("--rate", noise_rate, "corruption rate");
  inject->add_option("--map", noise_map, "asymmetric map, e.g. 0:1,1:0");
  inject->add_option("--matrix", noise_matrix, "transition rows, ';' between rows");
  inject->add_option("--seed", noise_seed, "random seed");

  std::string hist_run;
  std::vector<int> hist_epochs;
  auto* histogram = app.add_subcommand("histogram", "loss histograms from saved checkpoints");
  histogram->add_option("-r,--run", hist_run, "run directory <root>/<arm>/seed_<s>")->required();
  histogram->add_option("-e,--epochs", hist_epochs, "checkpoint epochs")->required()->delimiter(',');

  std::string summary_root;
  auto* summarize = app.add_subcommand("summarize", "rebuild summary.csv from run logs");
  summarize->add_option("-r,--root", summary_root, "experiment output root")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*train) {
      print_summary(antidote::run_experiment(build_spec(train_opts)));
    } else if (*sweep) {
      for (const auto& p : antidote::run_sweep(build_spec(sweep_opts), sweep_key, sweep_values)) {
        std::printf("%s = %s\n", sweep_key.c_str(), p.value.c_str());
        print_summary(p.summary);
      }
    } else if (*duality) {
      bool ok = true;
      for (std::size_t n : duality_sizes) {
        const auto r = antidote::verify_duality(n, duality_trials, duality_seed);
        std::printf("n=%zu instances=%zu max_gap=%.3e weak_violation=%.3e worst=[%s] %s\n", n,
                    r.instances, r.max_gap, r.max_weak_violation, r.worst.c_str(),
                    r.passed ? "ok" : "FAILED");
        ok = ok && r.passed;
      }
      return ok ? 0 : kVerificationFailure;
    } else if (*inject) {
      // Reuse the config parser for the map and matrix syntax.
      antidote::ExperimentSpec scratch;
      if (!noise_map.empty()) antidote::apply_override(scratch, "noise.map", noise_map);
      if (!noise_matrix.empty()) antidote::apply_override(scratch, "noise.matrix", noise_matrix);
      const auto clean = antidote::load_csv(noise_in, noise_label_column, noise_classes);
      antidote::NoisyDataset noisy = clean;
      if (noise_type == "symmetric") {
        noisy = antidote::inject_symmetric(clean, noise_rate, noise_seed);
      } else if (noise_type == "asymmetric") {
        noisy = antidote::inject_asymmetric(clean, scratch.data.flip_map, noise_rate, noise_seed);
      } else {
        noisy = antidote::inject_transition(
            clean, antidote::TransitionMatrix(scratch.data.transition), noise_seed);
      }
      antidote::save_csv(noisy, noise_out);
      std::printf("%zu of %zu labels corrupted\n", noisy.corrupted_count(), noisy.size());
    } else if (*histogram) {
      for (const auto& h : antidote::emit_histograms(hist_run, hist_epochs)) {
        std::printf("epoch %d: clean_median %.6f noisy_median %.6f difference %.6f -> %s\n",
                    h.epoch, h.clean_median, h.noisy_median, h.clean_median - h.noisy_median,
                    h.csv.string().c_str());
      }
    } else if (*summarize) {
      print_summary(antidote::summarize(summary_root));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return 0;
}
