#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "antidote/data.hpp"
#include "antidote/divergences.hpp"
#include "antidote/dual_objective.hpp"
#include "antidote/inner_solver.hpp"
#include "antidote/model.hpp"

namespace antidote {

enum class Method {
  cross_entropy,       // plain minibatch cross-entropy, all weights one
  antidote_kl,         // KL neighborhood, lambda by bisection
  antidote_alpha,      // alpha neighborhood, (lambda, rho) by nested bisection
  antidote_penalized,  // radius chosen per batch by the r_max penalty
};

std::string to_string(Method method);
Method parse_method(const std::string& name);

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 128;
  double learning_rate = 0.05;
  double lr_decay = 0.1;
  // Epochs after which the rate is multiplied by lr_decay. Empty means a
  // single milestone at 5/6 of the run.
  std::vector<int> lr_milestones;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double clip_norm = 5.0;
  Method method = Method::antidote_kl;
  // Family, radius and kappa of the neighborhood. The penalized method reads
  // its strength C from divergence.penalty_strength and ignores delta.
  DivergenceSpec divergence;
  SolverSettings solver;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
  double learning_rate_at(int epoch) const;  // 1-based epoch

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;     // mean per-sample loss over the epoch's batches
  double weighted_loss = 0.0;  // mean of (1/B) sum_i w_i L_i over batches
  double train_clean_accuracy = 0.0;
  std::optional<double> test_accuracy;
  // Medians over the training set of -(L + rho) (alpha) or L (otherwise),
  // split by corruption mask; NaN for an empty group.
  double clean_median = 0.0;
  double noisy_median = 0.0;
  std::optional<double> forgotten_fraction;  // alpha family only
  double lambda_mean = 0.0;
  double rho_mean = 0.0;
  std::optional<double> r_max_mean;  // penalized method only
};

struct TrainMonitor {
  const NoisyDataset* test_set = nullptr;
  // Called after every epoch with the record and the current model.
  std::function<void(const EpochRecord&, const MlpModel&)> on_epoch;
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochRecord> history;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reweighting produced by the inner problem for one minibatch.
struct BatchReweighting {
  std::vector<double> weights;
  DualParams dual;
  std::optional<double> r_max;
};

/// Inner step of one minibatch for the configured method.
BatchReweighting reweight_batch(std::span<const double> losses, const TrainConfig& config);

/// Minibatch training: per batch, losses -> inner solve -> weighted gradient,
/// then clipping, momentum and weight decay. Only the observed labels of ds
/// reach the optimizer; ground truth is used for the monitoring fields of
/// EpochRecord. Deterministic for a fixed config.seed.
TrainResult train(const NoisyDataset& ds, MlpModel model, const TrainConfig& config,
                  const TrainMonitor& monitor = {});

struct Evaluation {
  double accuracy = 0.0;       // argmax (ties to the lowest class) vs clean labels
  std::vector<double> losses;  // per-sample loss against observed labels
};

Evaluation evaluate(const MlpModel& model, const NoisyDataset& ds);

struct Histogram {
  static constexpr std::size_t kBins = 64;
  std::vector<double> bin_left;
  double bin_width = 0.0;
  std::vector<std::size_t> clean_counts;
  std::vector<std::size_t> noisy_counts;
  double clean_median = 0.0;
  double noisy_median = 0.0;  // NaN when no sample is corrupted
};

/// Histograms of -(L + rho) (alpha family) or L (KL) over the dataset, split by
/// the corruption mask, on 64 equal bins spanning the observed range.
Histogram histogram_snapshot(const MlpModel& model, const NoisyDataset& ds,
                             const DualParams& dual, FamilyKind kind);

double median(std::vector<double> values);

}  // namespace antidote
