#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace antidote {

// Dense row-major feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * cols_, cols_);
  }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// What a training algorithm may see: features and observed labels only.
struct TrainingView {
  const FeatureMatrix* features;
  std::span<const int> labels;
  int class_count;

  std::size_t size() const { return labels.size(); }
};

// Ground truth, for evaluation and diagnostics only.
struct EvaluationView {
  std::span<const int> clean_labels;
  std::span<const std::uint8_t> corruption_mask;  // 1 where observed != clean
};

class NoisyDataset {
 public:
  // A clean dataset: observed labels equal the clean labels.
  NoisyDataset(FeatureMatrix features, std::vector<int> labels, int class_count);

  std::size_t size() const { return observed_.size(); }
  std::size_t dims() const { return features_.cols(); }
  int class_count() const { return classes_; }

  const FeatureMatrix& features() const { return features_; }
  std::span<const int> observed_labels() const { return observed_; }

  TrainingView training_view() const { return {&features_, observed_, classes_}; }
  EvaluationView evaluation() const { return {clean_, mask_}; }

  std::size_t corrupted_count() const;

  // Same features and clean labels with a new set of observed labels.
  NoisyDataset relabeled(std::vector<int> observed) const;

  // Rows [begin, end) as a dataset of their own.
  NoisyDataset slice(std::size_t begin, std::size_t end) const;

  friend bool operator==(const NoisyDataset&, const NoisyDataset&) = default;

 private:
  NoisyDataset(FeatureMatrix features, std::vector<int> observed, std::vector<int> clean,
               int class_count);

  FeatureMatrix features_;
  std::vector<int> observed_;
  std::vector<int> clean_;
  std::vector<std::uint8_t> mask_;
  int classes_;
};

struct BlobSpec {
  int classes = 4;
  std::size_t samples = 2000;
  std::size_t dims = 2;
  double separation = 4.0;  // distance of each class center from the origin
  double spread = 1.0;      // per-coordinate standard deviation
  std::uint64_t seed = 0;
};

/// Isotropic Gaussian clusters, one per class, with centers evenly spaced on
/// a circle in the first two coordinates (on a line when dims == 1). Labels
/// are assigned round-robin, so classes are balanced to within one sample.
NoisyDataset make_gaussian_blobs(const BlobSpec& spec);

/// Flips each label with probability rate to a uniformly chosen different class.
NoisyDataset inject_symmetric(const NoisyDataset& ds, double rate, std::uint64_t seed);

/// Pairs (from, to): each sample whose observed class is `from` moves to `to`
/// with probability rate. Listing both (a, b) and (b, a) gives a swap.
NoisyDataset inject_asymmetric(const NoisyDataset& ds,
                               const std::vector<std::pair<int, int>>& flip_map, double rate,
                               std::uint64_t seed);

// Row-stochastic K x K matrix of corruption probabilities T[clean][observed].
class TransitionMatrix {
 public:
  explicit TransitionMatrix(std::vector<std::vector<double>> rows);

  static TransitionMatrix identity(int classes);
  // Diagonal 1 - rate, off-diagonal rate / (K - 1).
  static TransitionMatrix symmetric(int classes, double rate);

  int classes() const { return static_cast<int>(rows_.size()); }
  std::span<const double> row(int clean) const { return rows_[static_cast<std::size_t>(clean)]; }

 private:
  std::vector<std::vector<double>> rows_;
};

/// Draws each observed label from the row of T indexed by the clean label.
NoisyDataset inject_transition(const NoisyDataset& ds, const TransitionMatrix& transition,
                               std::uint64_t seed);

/// Sample-dependent variant: the matrix may depend on the features.
NoisyDataset inject_transition(
    const NoisyDataset& ds,
    const std::function<TransitionMatrix(std::span<const double>)>& transition_at,
    std::uint64_t seed);

/// Reads a comma-separated file of numeric features plus an integer label
/// column (negative index counts from the end). A first row that does not
/// parse as numbers is treated as a header. Parse errors name the line.
NoisyDataset load_csv(const std::filesystem::path& path, int label_column, int class_count);

/// Writes features and observed labels (label last) with a header row, and a
/// sidecar "<path>.truth.csv" holding clean_label,corrupted per row.
void save_csv(const NoisyDataset& ds, const std::filesystem::path& path);

/// Inverse of save_csv, restoring clean labels and the mask from the sidecar.
NoisyDataset load_csv_with_truth(const std::filesystem::path& path, int class_count);

std::filesystem::path truth_sidecar_path(const std::filesystem::path& path);

}  // namespace antidote
