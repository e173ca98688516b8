#include "antidote/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "antidote/rng.hpp"

namespace antidote {

std::string to_string(Activation activation) {
  return activation == Activation::relu ? "relu" : "tanh";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation: " + name);
}

std::size_t MlpModel::parameter_count(const std::vector<std::size_t>& layer_sizes) {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    total += (layer_sizes[l] + 1) * layer_sizes[l + 1];
  }
  return total;
}

MlpModel::MlpModel(std::vector<std::size_t> layer_sizes, Activation activation)
    : sizes_(std::move(layer_sizes)), activation_(activation) {
  if (sizes_.size() < 2) throw std::invalid_argument("MLP needs at least two layer sizes");
  if (std::find(sizes_.begin(), sizes_.end(), std::size_t{0}) != sizes_.end()) {
    throw std::invalid_argument("MLP layer sizes must be positive");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(offset);
    offset += (sizes_[l] + 1) * sizes_[l + 1];
  }
  params_.assign(offset, 0.0);
}

MlpModel MlpModel::initialized(std::vector<std::size_t> layer_sizes, Activation activation,
                               std::uint64_t seed) {
  MlpModel model(std::move(layer_sizes), activation);
  Rng rng(seed);
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const std::size_t n_in = model.sizes_[l];
    const std::size_t n_out = model.sizes_[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
    double* w = model.params_.data() + model.offsets_[l];
    for (std::size_t k = 0; k < n_in * n_out; ++k) w[k] = rng.uniform(-a, a);
  }
  return model;
}

namespace {

double activate(Activation act, double x) {
  return act == Activation::relu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

// Derivative expressed through the activation output y.
double activate_grad(Activation act, double pre, double y) {
  return act == Activation::relu ? (pre > 0.0 ? 1.0 : 0.0) : 1.0 - y * y;
}

// Per-layer pre-activations and outputs of one forward pass. outputs[0] is the
// input; the last entry of pre holds the logits.
struct Trace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> outputs;
};

void run(const MlpModel& model, std::span<const double> x, Trace& trace) {
  const auto& sizes = model.layer_sizes();
  const std::size_t layers = model.layer_count();
  trace.pre.resize(layers);
  trace.outputs.resize(layers + 1);
  trace.outputs[0].assign(x.begin(), x.end());
  const auto params = model.parameters();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t n_in = sizes[l];
    const std::size_t n_out = sizes[l + 1];
    const double* w = params.data() + model.layer_offset(l);
    const double* b = w + n_in * n_out;
    const auto& in = trace.outputs[l];
    auto& pre = trace.pre[l];
    auto& out = trace.outputs[l + 1];
    pre.resize(n_out);
    out.resize(n_out);
    const bool hidden = l + 1 < layers;
    for (std::size_t j = 0; j < n_out; ++j) {
      double z = b[j];
      const double* row = w + j * n_in;
      for (std::size_t k = 0; k < n_in; ++k) z += row[k] * in[k];
      pre[j] = z;
      out[j] = hidden ? activate(model.activation(), z) : z;
    }
  }
}

void check_input(const MlpModel& model, std::size_t length) {
  if (length != model.input_size()) {
    std::ostringstream msg;
    msg << "feature length " << length << " does not match input size " << model.input_size();
    throw std::invalid_argument(msg.str());
  }
}

// log-softmax of the logits, shifted by the max logit.
std::vector<double> log_softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double lse = m + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] - lse;
  return out;
}

void check_batch(const MlpModel& model, const LabeledBatch& batch) {
  if (batch.features.size() != batch.size() * model.input_size()) {
    throw std::invalid_argument("batch features do not match labels x input size");
  }
  const auto classes = static_cast<int>(model.output_size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.labels[i] < 0 || batch.labels[i] >= classes) {
      std::ostringstream msg;
      msg << "label " << batch.labels[i] << " at row " << i << " outside [0, " << classes << ")";
      throw std::invalid_argument(msg.str());
    }
  }
}

double clamped_loss(double log_p) {
  return -std::max(log_p, std::log(kProbabilityFloor));
}

}  // namespace

Prediction forward(const MlpModel& model, std::span<const double> features) {
  check_input(model, features.size());
  Trace trace;
  run(model, features, trace);
  Prediction p;
  p.logits = trace.pre.back();
  const auto logp = log_softmax(p.logits);
  p.probabilities.resize(logp.size());
  for (std::size_t k = 0; k < logp.size(); ++k) p.probabilities[k] = std::exp(logp[k]);
  return p;
}

std::vector<double> per_sample_losses(const MlpModel& model, const LabeledBatch& batch) {
  check_batch(model, batch);
  const std::size_t d = model.input_size();
  std::vector<double> losses(batch.size());
  Trace trace;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    run(model, batch.features.subspan(i * d, d), trace);
    const auto logp = log_softmax(trace.pre.back());
    losses[i] = clamped_loss(logp[static_cast<std::size_t>(batch.labels[i])]);
  }
  return losses;
}

std::vector<double> weighted_gradient(const MlpModel& model, const LabeledBatch& batch,
                                      std::span<const double> weights) {
  check_batch(model, batch);
  if (weights.size() != batch.size()) {
    throw std::invalid_argument("weights length does not match batch size");
  }
  const auto& sizes = model.layer_sizes();
  const std::size_t layers = model.layer_count();
  const std::size_t d = model.input_size();
  const auto params = model.parameters();
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  std::vector<double> grad(params.size(), 0.0);
  std::vector<double> delta;
  std::vector<double> delta_prev;
  Trace trace;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double scale = weights[i] * inv_b;
    if (scale == 0.0) continue;
    run(model, batch.features.subspan(i * d, d), trace);
    const auto logp = log_softmax(trace.pre.back());
    const auto label = static_cast<std::size_t>(batch.labels[i]);
    // The floor makes the loss locally constant.
    if (logp[label] < std::log(kProbabilityFloor)) continue;

    delta.resize(logp.size());
    for (std::size_t k = 0; k < logp.size(); ++k) {
      delta[k] = scale * (std::exp(logp[k]) - (k == label ? 1.0 : 0.0));
    }
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t n_in = sizes[l];
      const std::size_t n_out = sizes[l + 1];
      const std::size_t off = model.layer_offset(l);
      const auto& in = trace.outputs[l];
      double* gw = grad.data() + off;
      double* gb = gw + n_in * n_out;
      for (std::size_t j = 0; j < n_out; ++j) {
        double* row = gw + j * n_in;
        for (std::size_t k = 0; k < n_in; ++k) row[k] += delta[j] * in[k];
        gb[j] += delta[j];
      }
      if (l == 0) break;
      const double* w = params.data() + off;
      delta_prev.assign(n_in, 0.0);
      for (std::size_t j = 0; j < n_out; ++j) {
        const double* row = w + j * n_in;
        for (std::size_t k = 0; k < n_in; ++k) delta_prev[k] += row[k] * delta[j];
      }
      for (std::size_t k = 0; k < n_in; ++k) {
        delta_prev[k] *= activate_grad(model.activation(), trace.pre[l - 1][k], in[k]);
      }
      delta.swap(delta_prev);
    }
  }
  return grad;
}

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  out << "mlp";
  for (std::size_t s : model.layer_sizes()) out << ' ' << s;
  out << ' ' << to_string(model.activation()) << '\n';
  for (double v : model.parameters()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
    out.write(bytes, 8);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

MlpModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream fields(header);
  std::string magic;
  fields >> magic;
  if (magic != "mlp") throw std::runtime_error("not an mlp checkpoint: " + path.string());
  std::vector<std::string> tokens;
  for (std::string t; fields >> t;) tokens.push_back(t);
  if (tokens.size() < 3) throw std::runtime_error("truncated checkpoint header: " + path.string());
  const Activation act = parse_activation(tokens.back());
  std::vector<std::size_t> sizes;
  for (std::size_t k = 0; k + 1 < tokens.size(); ++k) sizes.push_back(std::stoul(tokens[k]));

  MlpModel model(sizes, act);
  for (double& v : model.parameters()) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
      throw std::runtime_error("checkpoint payload too short: " + path.string());
    }
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    v = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw std::runtime_error("checkpoint payload too long: " + path.string());
  }
  return model;
}

}  // namespace antidote
