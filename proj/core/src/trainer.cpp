#include "antidote/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "antidote/rng.hpp"

namespace antidote {

namespace {

constexpr std::uint64_t kShuffleStream = 3;

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::cross_entropy: return "ce";
    case Method::antidote_kl: return "antidote-kl";
    case Method::antidote_alpha: return "antidote-alpha";
    case Method::antidote_penalized: return "antidote-penalized";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "ce") return Method::cross_entropy;
  if (name == "antidote-kl") return Method::antidote_kl;
  if (name == "antidote-alpha") return Method::antidote_alpha;
  if (name == "antidote-penalized") return Method::antidote_penalized;
  throw std::invalid_argument("unknown method: " + name);
}

void TrainConfig::validate() const {
  if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip norm must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be >= 0");
  if (!(divergence.kappa >= 0.0)) throw std::invalid_argument("kappa must be >= 0");
  switch (method) {
    case Method::cross_entropy: break;
    case Method::antidote_kl:
      if (!divergence.family.is_kl()) throw std::invalid_argument("antidote-kl needs the KL family");
      if (!(divergence.delta > 0.0)) throw std::invalid_argument("delta must be > 0");
      break;
    case Method::antidote_alpha:
      if (divergence.family.is_kl()) throw std::invalid_argument("antidote-alpha needs an alpha family");
      if (!(divergence.delta > 0.0)) throw std::invalid_argument("delta must be > 0");
      break;
    case Method::antidote_penalized:
      if (!divergence.penalty_strength || !(*divergence.penalty_strength > 0.0)) {
        throw std::invalid_argument("penalized method needs penalty strength C > 0");
      }
      break;
  }
}

double TrainConfig::learning_rate_at(int epoch) const {
  std::vector<int> milestones = lr_milestones;
  if (milestones.empty()) milestones.push_back(static_cast<int>(std::lround(5.0 * epochs / 6.0)));
  double lr = learning_rate;
  for (int m : milestones) {
    if (epoch > m) lr *= lr_decay;
  }
  return lr;
}

BatchReweighting reweight_batch(std::span<const double> losses, const TrainConfig& config) {
  BatchReweighting out;
  switch (config.method) {
    case Method::cross_entropy:
      out.weights.assign(losses.size(), 1.0);
      return out;
    case Method::antidote_kl:
    case Method::antidote_alpha: {
      const InnerSolution sol = solve_dual(losses, config.divergence, config.solver);
      out.dual = sol.params;
      out.weights = dual_weights(sol.params, losses, config.divergence);
      return out;
    }
    case Method::antidote_penalized: {
      const PenaltySpec penalty{*config.divergence.penalty_strength};
      const PenalizedSolution sol =
          solve_penalized(losses, config.divergence, penalty, config.solver);
      DivergenceSpec at = config.divergence;
      at.delta = sol.delta;
      out.dual = sol.inner.params;
      out.weights = dual_weights(sol.inner.params, losses, at);
      out.r_max = sol.r_max;
      return out;
    }
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

Evaluation evaluate(const MlpModel& model, const NoisyDataset& ds) {
  if (ds.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  const auto view = ds.training_view();
  Evaluation out;
  out.losses = per_sample_losses(model, {view.features->values(), view.labels});
  const auto clean = ds.evaluation().clean_labels;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Prediction p = forward(model, ds.features().row(i));
    // max_element returns the first maximum: ties go to the lowest class.
    const auto best = std::max_element(p.logits.begin(), p.logits.end()) - p.logits.begin();
    if (best == clean[i]) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
  return out;
}

namespace {

std::vector<double> snapshot_statistic(std::span<const double> losses, const DualParams& dual,
                                       FamilyKind kind) {
  std::vector<double> x(losses.begin(), losses.end());
  if (kind == FamilyKind::alpha) {
    for (double& v : x) v = -(v + dual.rho);
  }
  return x;
}

std::pair<double, double> split_medians(std::span<const double> stat,
                                        std::span<const std::uint8_t> mask) {
  std::vector<double> clean;
  std::vector<double> noisy;
  for (std::size_t i = 0; i < stat.size(); ++i) (mask[i] ? noisy : clean).push_back(stat[i]);
  return {median(std::move(clean)), median(std::move(noisy))};
}

}  // namespace

Histogram histogram_snapshot(const MlpModel& model, const NoisyDataset& ds,
                             const DualParams& dual, FamilyKind kind) {
  const Evaluation eval = evaluate(model, ds);
  const auto stat = snapshot_statistic(eval.losses, dual, kind);
  const auto mask = ds.evaluation().corruption_mask;

  Histogram h;
  const auto [lo_it, hi_it] = std::minmax_element(stat.begin(), stat.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  h.bin_width = span > 0.0 ? span / Histogram::kBins : 1.0;
  h.bin_left.resize(Histogram::kBins);
  for (std::size_t b = 0; b < Histogram::kBins; ++b) h.bin_left[b] = lo + h.bin_width * b;
  h.clean_counts.assign(Histogram::kBins, 0);
  h.noisy_counts.assign(Histogram::kBins, 0);
  for (std::size_t i = 0; i < stat.size(); ++i) {
    auto bin = static_cast<std::size_t>((stat[i] - lo) / h.bin_width);
    bin = std::min(bin, Histogram::kBins - 1);
    (mask[i] ? h.noisy_counts : h.clean_counts)[bin]++;
  }
  std::tie(h.clean_median, h.noisy_median) = split_medians(stat, mask);
  return h;
}

TrainResult train(const NoisyDataset& ds, MlpModel model, const TrainConfig& config,
                  const TrainMonitor& monitor) {
  config.validate();
  if (ds.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (ds.dims() != model.input_size()) {
    throw std::invalid_argument("train: feature dimension does not match the model input");
  }
  if (static_cast<std::size_t>(ds.class_count()) != model.output_size()) {
    throw std::invalid_argument("train: class count does not match the model output");
  }

  const TrainingView view = ds.training_view();
  const std::size_t n = view.size();
  const std::size_t d = view.features->cols();
  const bool alpha_family =
      config.method != Method::cross_entropy && !config.divergence.family.is_kl();

  Rng rng(derive_seed(config.seed, kShuffleStream));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> velocity(model.parameters().size(), 0.0);
  std::vector<double> batch_x;
  std::vector<int> batch_y;

  TrainResult result{model, {}};
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = config.learning_rate_at(epoch);
    rng.shuffle(order);

    double loss_sum = 0.0;
    double weighted_sum = 0.0;
    double lambda_sum = 0.0;
    double rho_sum = 0.0;
    double r_max_sum = 0.0;
    std::size_t forgotten = 0;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const std::size_t b = end - start;
      batch_x.resize(b * d);
      batch_y.resize(b);
      for (std::size_t i = 0; i < b; ++i) {
        const auto row = view.features->row(order[start + i]);
        std::copy(row.begin(), row.end(), batch_x.begin() + static_cast<std::ptrdiff_t>(i * d));
        batch_y[i] = view.labels[order[start + i]];
      }
      const LabeledBatch batch{batch_x, batch_y};
      const auto losses = per_sample_losses(result.model, batch);

      BatchReweighting rw;
      try {
        rw = reweight_batch(losses, config);
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "inner solve failed at epoch " << epoch << ", batch " << batches << ": "
            << e.what() << "; losses[0.." << std::min<std::size_t>(b, 8) << ") =";
        for (std::size_t i = 0; i < std::min<std::size_t>(b, 8); ++i) msg << ' ' << losses[i];
        throw TrainingError(msg.str());
      }

      auto grad = weighted_gradient(result.model, batch, rw.weights);
      double norm_sq = 0.0;
      for (double g : grad) norm_sq += g * g;
      const double norm = std::sqrt(norm_sq);
      if (norm > config.clip_norm) {
        const double shrink = config.clip_norm / norm;
        for (double& g : grad) g *= shrink;
      }
      auto params = result.model.parameters();
      for (std::size_t k = 0; k < params.size(); ++k) {
        const double g = grad[k] + config.weight_decay * params[k];
        velocity[k] = config.momentum * velocity[k] + g;
        params[k] -= lr * velocity[k];
      }

      double batch_loss = 0.0;
      double batch_weighted = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        batch_loss += losses[i];
        batch_weighted += rw.weights[i] * losses[i];
        if (rw.weights[i] == 0.0) ++forgotten;
      }
      loss_sum += batch_loss / static_cast<double>(b);
      weighted_sum += batch_weighted / static_cast<double>(b);
      lambda_sum += rw.dual.lambda;
      rho_sum += rw.dual.rho;
      if (rw.r_max) r_max_sum += *rw.r_max;
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = lr;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.weighted_loss = weighted_sum / static_cast<double>(batches);
    rec.lambda_mean = lambda_sum / static_cast<double>(batches);
    rec.rho_mean = rho_sum / static_cast<double>(batches);
    if (config.method == Method::antidote_penalized) {
      rec.r_max_mean = r_max_sum / static_cast<double>(batches);
    }
    if (alpha_family) {
      rec.forgotten_fraction = static_cast<double>(forgotten) / static_cast<double>(n);
    }

    // Monitoring only: ground truth is read here, after the epoch's updates.
    const Evaluation train_eval = evaluate(result.model, ds);
    rec.train_clean_accuracy = train_eval.accuracy;
    const auto stat = snapshot_statistic(train_eval.losses, {rec.lambda_mean, rec.rho_mean},
                                         alpha_family ? FamilyKind::alpha : FamilyKind::kl);
    std::tie(rec.clean_median, rec.noisy_median) =
        split_medians(stat, ds.evaluation().corruption_mask);
    if (monitor.test_set != nullptr) {
      rec.test_accuracy = evaluate(result.model, *monitor.test_set).accuracy;
    }

    result.history.push_back(rec);
    if (monitor.on_epoch) monitor.on_epoch(rec, result.model);
  }
  return result;
}

}  // namespace antidote
