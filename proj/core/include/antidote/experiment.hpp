#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "antidote/config.hpp"
#include "antidote/data.hpp"
#include "antidote/trainer.hpp"

namespace antidote {

struct DatasetPair {
  NoisyDataset train;  // carries the injected label noise
  NoisyDataset test;   // clean
};

/// Train and test sets of one seed. Blob draws use streams 0 (train) and 1
/// (test) of the seed, noise uses stream 2. A CSV source is shuffled with
/// stream 0 and split by data.test_fraction.
DatasetPair build_datasets(const ExperimentSpec& spec, std::uint64_t seed);

/// spec.output_dir, unless the ANTIDOTE_OUT environment variable is set.
std::filesystem::path output_root(const ExperimentSpec& spec);

/// <root>/<arm>/seed_<seed>
std::filesystem::path run_directory(const std::filesystem::path& root, Method arm,
                                    std::uint64_t seed);

struct RunOutcome {
  Method arm;
  std::uint64_t seed;
  std::filesystem::path directory;
  TrainResult result;
};

/// Trains one (arm, seed) pair and writes config.txt, log.jsonl and
/// checkpoint_epoch_<e>.bin (configured epochs plus the last one).
RunOutcome run_single(const ExperimentSpec& spec, Method arm, std::uint64_t seed,
                      const std::filesystem::path& root);

struct ArmSummary {
  std::string arm;
  double mean = 0.0;  // last-epoch clean test accuracy over seeds
  double std = 0.0;   // population standard deviation
  std::size_t n_seeds = 0;

  friend bool operator==(const ArmSummary&, const ArmSummary&) = default;
};

/// Runs every (arm, seed) pair, then summarizes. Fails before any training
/// when the output root cannot be written.
std::vector<ArmSummary> run_experiment(const ExperimentSpec& spec);

/// Rebuilds summary.csv (arm,mean,std,n_seeds) from the log.jsonl files
/// found under root and returns its rows.
std::vector<ArmSummary> summarize(const std::filesystem::path& root);

struct SweepPoint {
  std::string value;
  std::vector<ArmSummary> summary;
};

/// One experiment per value of key, each under <root>/<key>=<value>; writes
/// <root>/sweep.csv (key,value,arm,mean,std,n_seeds).
std::vector<SweepPoint> run_sweep(const ExperimentSpec& spec, const std::string& key,
                                  const std::vector<std::string>& values);

struct DualityReport {
  std::size_t instances = 0;
  double max_gap = 0.0;            // max |primal - dual|
  double max_weak_violation = 0.0;  // max (dual - primal), clipped at 0
  std::string worst;                // configuration of the largest gap
  bool passed = false;
};

inline constexpr double kDualityTolerance = 1e-4;

/// For n random losses uniform in [0, 5], compares primal and dual optima over
/// families {kl, alpha:2, alpha:3}, kappa {0, 0.05} and delta {0.1, ln 2, 1},
/// with `trials` instances per configuration.
DualityReport verify_duality(std::size_t n, std::size_t trials, std::uint64_t seed);

struct HistogramSummary {
  int epoch = 0;
  std::filesystem::path csv;
  double clean_median = 0.0;
  double noisy_median = 0.0;
};

/// For each epoch, reloads checkpoint_epoch_<e>.bin of a run directory and
/// writes histogram_epoch_<e>.csv (bin_left,clean_count,noisy_count) over the
/// training set, plus histogram_summary.txt with both medians and their
/// difference. rho is the epoch's batch mean from log.jsonl.
std::vector<HistogramSummary> emit_histograms(const std::filesystem::path& run_dir,
                                              const std::vector<int>& epochs);

}  // namespace antidote
