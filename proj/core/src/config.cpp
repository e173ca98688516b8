#include "antidote/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace antidote {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw std::invalid_argument("bad value for " + std::string(key) + ": '" + std::string(value) + "'");
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  value = trim(value);
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size() || value.empty()) {
    bad_value(key, value);
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view value) {
  std::vector<T> out;
  for (auto item : split(value, ',')) out.push_back(parse_number<T>(key, item));
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    if constexpr (std::is_floating_point_v<T>) {
      out << fmt(values[i]);
    } else {
      out << values[i];
    }
  }
  return out.str();
}

std::optional<double> parse_optional(std::string_view key, std::string_view value) {
  if (trim(value) == "none" || trim(value).empty()) return std::nullopt;
  return parse_number<double>(key, value);
}

std::string format_optional(const std::optional<double>& v) { return v ? fmt(*v) : "none"; }

using Setter = std::function<void(ExperimentSpec&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"data.source", [](auto& s, auto k, auto v) {
         if (v != "blobs" && v != "csv") bad_value(k, v);
         s.data.source = std::string(v);
       }},
      {"data.classes", [](auto& s, auto k, auto v) { s.data.classes = parse_number<int>(k, v); }},
      {"data.samples", [](auto& s, auto k, auto v) { s.data.samples = parse_number<std::size_t>(k, v); }},
      {"data.test_samples",
       [](auto& s, auto k, auto v) { s.data.test_samples = parse_number<std::size_t>(k, v); }},
      {"data.dims", [](auto& s, auto k, auto v) { s.data.dims = parse_number<std::size_t>(k, v); }},
      {"data.separation", [](auto& s, auto k, auto v) { s.data.separation = parse_number<double>(k, v); }},
      {"data.spread", [](auto& s, auto k, auto v) { s.data.spread = parse_number<double>(k, v); }},
      {"data.csv_path", [](auto& s, auto, auto v) { s.data.csv_path = std::string(v); }},
      {"data.label_column", [](auto& s, auto k, auto v) { s.data.label_column = parse_number<int>(k, v); }},
      {"data.test_fraction",
       [](auto& s, auto k, auto v) { s.data.test_fraction = parse_number<double>(k, v); }},
      {"noise.type", [](auto& s, auto k, auto v) {
         if (v != "none" && v != "symmetric" && v != "asymmetric" && v != "transition") bad_value(k, v);
         s.data.noise = std::string(v);
       }},
      {"noise.rate", [](auto& s, auto k, auto v) { s.data.noise_rate = parse_number<double>(k, v); }},
      {"noise.map", [](auto& s, auto k, auto v) {
         s.data.flip_map.clear();
         for (auto pair : split(v, ',')) {
           const auto parts = split(pair, ':');
           if (parts.size() != 2) bad_value(k, v);
           s.data.flip_map.emplace_back(parse_number<int>(k, parts[0]), parse_number<int>(k, parts[1]));
         }
       }},
      {"noise.matrix", [](auto& s, auto k, auto v) {
         s.data.transition.clear();
         for (auto row : split(v, ';')) s.data.transition.push_back(parse_list<double>(k, row));
       }},
      {"model.hidden",
       [](auto& s, auto k, auto v) { s.model.hidden = parse_list<std::size_t>(k, v); }},
      {"model.activation",
       [](auto& s, auto, auto v) { s.model.activation = parse_activation(std::string(v)); }},
      {"train.epochs", [](auto& s, auto k, auto v) { s.train.epochs = parse_number<int>(k, v); }},
      {"train.batch_size",
       [](auto& s, auto k, auto v) { s.train.batch_size = parse_number<std::size_t>(k, v); }},
      {"train.lr", [](auto& s, auto k, auto v) { s.train.learning_rate = parse_number<double>(k, v); }},
      {"train.lr_decay", [](auto& s, auto k, auto v) { s.train.lr_decay = parse_number<double>(k, v); }},
      {"train.lr_milestones",
       [](auto& s, auto k, auto v) { s.train.lr_milestones = parse_list<int>(k, v); }},
      {"train.momentum", [](auto& s, auto k, auto v) { s.train.momentum = parse_number<double>(k, v); }},
      {"train.weight_decay",
       [](auto& s, auto k, auto v) { s.train.weight_decay = parse_number<double>(k, v); }},
      {"train.clip_norm", [](auto& s, auto k, auto v) { s.train.clip_norm = parse_number<double>(k, v); }},
      {"divergence.delta",
       [](auto& s, auto k, auto v) { s.neighborhood.delta = parse_optional(k, v); }},
      {"divergence.r_max",
       [](auto& s, auto k, auto v) { s.neighborhood.r_max = parse_optional(k, v); }},
      {"divergence.kappa",
       [](auto& s, auto k, auto v) { s.neighborhood.kappa = parse_number<double>(k, v); }},
      {"divergence.alpha",
       [](auto& s, auto k, auto v) { s.neighborhood.alpha = parse_number<double>(k, v); }},
      {"divergence.penalized_family", [](auto& s, auto, auto v) {
         FFamily::parse(std::string(v));
         s.neighborhood.penalized_family = std::string(v);
       }},
      {"divergence.penalty_c",
       [](auto& s, auto k, auto v) { s.neighborhood.penalty_c = parse_number<double>(k, v); }},
      {"solver.tolerance",
       [](auto& s, auto k, auto v) { s.train.solver.derivative_tolerance = parse_number<double>(k, v); }},
      {"solver.bracket_init",
       [](auto& s, auto k, auto v) { s.train.solver.lambda_bracket_init = parse_number<double>(k, v); }},
      {"solver.max_doublings",
       [](auto& s, auto k, auto v) { s.train.solver.max_bracket_doublings = parse_number<int>(k, v); }},
      {"solver.max_iterations",
       [](auto& s, auto k, auto v) { s.train.solver.max_iterations = parse_number<int>(k, v); }},
      {"experiment.arms", [](auto& s, auto, auto v) {
         s.arms.clear();
         for (auto a : split(v, ',')) s.arms.push_back(parse_method(std::string(a)));
       }},
      {"experiment.seeds",
       [](auto& s, auto k, auto v) { s.seeds = parse_list<std::uint64_t>(k, v); }},
      {"experiment.output", [](auto& s, auto, auto v) { s.output_dir = std::string(v); }},
      {"experiment.checkpoint_epochs",
       [](auto& s, auto k, auto v) { s.checkpoint_epochs = parse_list<int>(k, v); }},
  };
  return table;
}

}  // namespace

void apply_override(ExperimentSpec& spec, std::string_view key, std::string_view value) {
  key = trim(key);
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw std::invalid_argument("unknown config key: " + std::string(key));
  try {
    it->second(spec, key, trim(value));
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    if (what.find(std::string(key)) != std::string::npos) throw;
    throw std::invalid_argument(std::string(key) + ": " + what);
  }
}

ExperimentSpec parse_config(std::string_view text) {
  ExperimentSpec spec;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    auto line = text.substr(start, end == std::string_view::npos ? text.size() - start : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_override(spec, line.substr(0, eq), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return spec;
}

ExperimentSpec load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentSpec& spec) {
  std::ostringstream out;
  const auto& d = spec.data;
  out << "data.source = " << d.source << '\n'
      << "data.classes = " << d.classes << '\n'
      << "data.samples = " << d.samples << '\n'
      << "data.test_samples = " << d.test_samples << '\n'
      << "data.dims = " << d.dims << '\n'
      << "data.separation = " << fmt(d.separation) << '\n'
      << "data.spread = " << fmt(d.spread) << '\n'
      << "data.csv_path = " << d.csv_path << '\n'
      << "data.label_column = " << d.label_column << '\n'
      << "data.test_fraction = " << fmt(d.test_fraction) << '\n';
  out << "noise.type = " << d.noise << '\n' << "noise.rate = " << fmt(d.noise_rate) << '\n';
  out << "noise.map = ";
  for (std::size_t i = 0; i < d.flip_map.size(); ++i) {
    out << (i ? "," : "") << d.flip_map[i].first << ':' << d.flip_map[i].second;
  }
  out << '\n' << "noise.matrix = ";
  for (std::size_t i = 0; i < d.transition.size(); ++i) out << (i ? ";" : "") << join(d.transition[i]);
  out << '\n';
  out << "model.hidden = " << join(spec.model.hidden) << '\n'
      << "model.activation = " << to_string(spec.model.activation) << '\n';
  const auto& t = spec.train;
  out << "train.epochs = " << t.epochs << '\n'
      << "train.batch_size = " << t.batch_size << '\n'
      << "train.lr = " << fmt(t.learning_rate) << '\n'
      << "train.lr_decay = " << fmt(t.lr_decay) << '\n'
      << "train.lr_milestones = " << join(t.lr_milestones) << '\n'
      << "train.momentum = " << fmt(t.momentum) << '\n'
      << "train.weight_decay = " << fmt(t.weight_decay) << '\n'
      << "train.clip_norm = " << fmt(t.clip_norm) << '\n';
  const auto& n = spec.neighborhood;
  out << "divergence.delta = " << format_optional(n.delta) << '\n'
      << "divergence.r_max = " << format_optional(n.r_max) << '\n'
      << "divergence.kappa = " << fmt(n.kappa) << '\n'
      << "divergence.alpha = " << fmt(n.alpha) << '\n'
      << "divergence.penalized_family = " << n.penalized_family << '\n'
      << "divergence.penalty_c = " << fmt(n.penalty_c) << '\n';
  out << "solver.tolerance = " << fmt(t.solver.derivative_tolerance) << '\n'
      << "solver.bracket_init = " << fmt(t.solver.lambda_bracket_init) << '\n'
      << "solver.max_doublings = " << t.solver.max_bracket_doublings << '\n'
      << "solver.max_iterations = " << t.solver.max_iterations << '\n';
  out << "experiment.arms = ";
  for (std::size_t i = 0; i < spec.arms.size(); ++i) out << (i ? "," : "") << to_string(spec.arms[i]);
  out << '\n'
      << "experiment.seeds = " << join(spec.seeds) << '\n'
      << "experiment.output = " << spec.output_dir << '\n'
      << "experiment.checkpoint_epochs = " << join(spec.checkpoint_epochs) << '\n';
  return out.str();
}

TrainConfig config_for(const ExperimentSpec& spec, Method arm, std::uint64_t seed) {
  TrainConfig cfg = spec.train;
  cfg.method = arm;
  cfg.seed = seed;
  const auto& n = spec.neighborhood;
  switch (arm) {
    case Method::cross_entropy:
    case Method::antidote_kl: cfg.divergence.family = FFamily::kl(); break;
    case Method::antidote_alpha: cfg.divergence.family = FFamily::alpha(n.alpha); break;
    case Method::antidote_penalized: cfg.divergence.family = FFamily::parse(n.penalized_family); break;
  }
  cfg.divergence.kappa = n.kappa;
  cfg.divergence.penalty_strength.reset();
  if (arm == Method::antidote_penalized) {
    cfg.divergence.penalty_strength = n.penalty_c;
    cfg.divergence.delta = 0.0;
  } else if (n.delta) {
    cfg.divergence.delta = *n.delta;
  } else if (n.r_max) {
    cfg.divergence.delta = delta_from_rmax(cfg.divergence.family, *n.r_max);
  } else if (arm != Method::cross_entropy) {
    throw std::invalid_argument("divergence.delta or divergence.r_max must be set");
  }
  return cfg;
}

std::vector<std::size_t> layer_sizes_for(const ExperimentSpec& spec, std::size_t input_dims,
                                         int classes) {
  std::vector<std::size_t> sizes{input_dims};
  sizes.insert(sizes.end(), spec.model.hidden.begin(), spec.model.hidden.end());
  sizes.push_back(static_cast<std::size_t>(classes));
  return sizes;
}

void ExperimentSpec::validate() const {
  if (arms.empty()) throw std::invalid_argument("experiment needs at least one arm");
  if (seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw std::invalid_argument("experiment seeds must be distinct");
  }
  if (std::set<Method>(arms.begin(), arms.end()).size() != arms.size()) {
    throw std::invalid_argument("experiment arms must be distinct");
  }
  if (data.source == "csv" && data.csv_path.empty()) {
    throw std::invalid_argument("data.csv_path is required for csv source");
  }
  if (data.noise == "transition" && data.transition.empty()) {
    throw std::invalid_argument("noise.matrix is required for transition noise");
  }
  for (Method arm : arms) config_for(*this, arm, seeds.front()).validate();
}

}  // namespace antidote
