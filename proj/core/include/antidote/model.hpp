#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace antidote {

enum class Activation { relu, tanh };

std::string to_string(Activation activation);
Activation parse_activation(const std::string& name);

// Fully connected network with a softmax head. Parameters are stored flat,
// layer by layer: the n_out x n_in weight matrix (row-major) followed by the
// n_out biases.
class MlpModel {
 public:
  // All parameters zero.
  MlpModel(std::vector<std::size_t> layer_sizes, Activation activation);

  // Weights uniform in (-a, a), a = sqrt(6 / (n_in + n_out)); biases zero.
  static MlpModel initialized(std::vector<std::size_t> layer_sizes, Activation activation,
                              std::uint64_t seed);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t layer_count() const { return sizes_.size() - 1; }

  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }

  // Offset of layer l's weight block in parameters().
  std::size_t layer_offset(std::size_t layer) const { return offsets_[layer]; }

  static std::size_t parameter_count(const std::vector<std::size_t>& layer_sizes);

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  std::vector<std::size_t> sizes_;
  Activation activation_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct Prediction {
  std::vector<double> logits;
  std::vector<double> probabilities;
};

// Row-major features (rows x input_size) with one label per row.
struct LabeledBatch {
  std::span<const double> features;
  std::span<const int> labels;

  std::size_t size() const { return labels.size(); }
};

// Probabilities below this are clamped before taking the log.
inline constexpr double kProbabilityFloor = 1e-8;

/// Throws std::invalid_argument when features.size() != input_size().
Prediction forward(const MlpModel& model, std::span<const double> features);

/// Cross-entropy per sample, -log(max(p_y, 1e-8)).
std::vector<double> per_sample_losses(const MlpModel& model, const LabeledBatch& batch);

/// Gradient of (1/B) sum_i w_i L_i with respect to the flat parameters, by
/// hand-written backpropagation. Samples are accumulated in order, so the
/// result is bit-reproducible.
std::vector<double> weighted_gradient(const MlpModel& model, const LabeledBatch& batch,
                                      std::span<const double> weights);

// Checkpoint: text header "mlp <sizes...> <activation>\n" followed by the
// parameters as little-endian IEEE-754 doubles.
void save_checkpoint(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_checkpoint(const std::filesystem::path& path);

}  // namespace antidote
