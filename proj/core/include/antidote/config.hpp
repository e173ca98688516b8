#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "antidote/model.hpp"
#include "antidote/trainer.hpp"

namespace antidote {

struct DataRecipe {
  std::string source = "blobs";  // "blobs" or "csv"
  int classes = 4;
  std::size_t samples = 2000;
  std::size_t test_samples = 1000;  // blobs only
  std::size_t dims = 2;
  double separation = 4.0;
  double spread = 1.0;
  std::string csv_path;
  int label_column = -1;
  double test_fraction = 0.2;  // csv only

  std::string noise = "symmetric";  // none | symmetric | asymmetric | transition
  double noise_rate = 0.4;
  std::vector<std::pair<int, int>> flip_map;    // asymmetric
  std::vector<std::vector<double>> transition;  // transition

  friend bool operator==(const DataRecipe&, const DataRecipe&) = default;
};

struct ModelRecipe {
  std::vector<std::size_t> hidden{16, 16};
  Activation activation = Activation::relu;

  friend bool operator==(const ModelRecipe&, const ModelRecipe&) = default;
};

// Neighborhood settings shared by the ANTIDOTE arms. The radius is either
// given directly or derived per family from r_max.
struct NeighborhoodRecipe {
  std::optional<double> delta;
  std::optional<double> r_max = 0.45;
  double kappa = 0.05;
  double alpha = 2.0;                  // exponent used by the alpha arm
  std::string penalized_family = "kl";  // family used by the penalized arm
  double penalty_c = 1.0;

  friend bool operator==(const NeighborhoodRecipe&, const NeighborhoodRecipe&) = default;
};

struct ExperimentSpec {
  DataRecipe data;
  ModelRecipe model;
  TrainConfig train;  // method, divergence and seed are filled in per arm
  NeighborhoodRecipe neighborhood;
  std::vector<Method> arms{Method::cross_entropy, Method::antidote_kl};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::string output_dir = "runs";
  std::vector<int> checkpoint_epochs;  // the final epoch is always saved

  // At least one arm, distinct non-empty seeds, valid per-arm configs.
  void validate() const;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

// Flat "key = value" text, one entry per line, '#' starts a comment. Keys are
// dotted: data.*, noise.*, model.*, train.*, divergence.*, solver.*,
// experiment.*. Unknown keys are errors.
ExperimentSpec parse_config(std::string_view text);
ExperimentSpec load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentSpec& spec);

/// Sets one key; throws std::invalid_argument naming the key on bad input.
void apply_override(ExperimentSpec& spec, std::string_view key, std::string_view value);

/// Training configuration of one (arm, seed) run.
TrainConfig config_for(const ExperimentSpec& spec, Method arm, std::uint64_t seed);

std::vector<std::size_t> layer_sizes_for(const ExperimentSpec& spec, std::size_t input_dims,
                                         int classes);

}  // namespace antidote
