#include "antidote/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "antidote/rng.hpp"

namespace antidote {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw std::invalid_argument("feature matrix size does not match rows x cols");
  }
}

NoisyDataset::NoisyDataset(FeatureMatrix features, std::vector<int> labels, int class_count)
    : NoisyDataset(std::move(features), labels, labels, class_count) {}

NoisyDataset::NoisyDataset(FeatureMatrix features, std::vector<int> observed,
                           std::vector<int> clean, int class_count)
    : features_(std::move(features)),
      observed_(std::move(observed)),
      clean_(std::move(clean)),
      classes_(class_count) {
  if (classes_ < 2) throw std::invalid_argument("dataset needs at least two classes");
  if (observed_.size() != features_.rows() || clean_.size() != features_.rows()) {
    throw std::invalid_argument("label count does not match feature rows");
  }
  mask_.resize(observed_.size());
  for (std::size_t i = 0; i < observed_.size(); ++i) {
    for (int y : {observed_[i], clean_[i]}) {
      if (y < 0 || y >= classes_) {
        std::ostringstream msg;
        msg << "label " << y << " at row " << i << " outside [0, " << classes_ << ")";
        throw std::invalid_argument(msg.str());
      }
    }
    mask_[i] = observed_[i] != clean_[i] ? 1 : 0;
  }
}

std::size_t NoisyDataset::corrupted_count() const {
  std::size_t total = 0;
  for (auto m : mask_) total += m;
  return total;
}

NoisyDataset NoisyDataset::relabeled(std::vector<int> observed) const {
  return NoisyDataset(features_, std::move(observed), clean_, classes_);
}

NoisyDataset NoisyDataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw std::out_of_range("dataset slice out of range");
  const std::size_t d = dims();
  const auto values = features_.values();
  std::vector<double> sub(values.begin() + static_cast<std::ptrdiff_t>(begin * d),
                          values.begin() + static_cast<std::ptrdiff_t>(end * d));
  const auto b = static_cast<std::ptrdiff_t>(begin);
  const auto e = static_cast<std::ptrdiff_t>(end);
  return NoisyDataset(FeatureMatrix(end - begin, d, std::move(sub)),
                      std::vector<int>(observed_.begin() + b, observed_.begin() + e),
                      std::vector<int>(clean_.begin() + b, clean_.begin() + e), classes_);
}

NoisyDataset make_gaussian_blobs(const BlobSpec& spec) {
  if (spec.classes < 2) throw std::invalid_argument("blobs: need at least two classes");
  if (spec.samples < static_cast<std::size_t>(spec.classes)) {
    throw std::invalid_argument("blobs: need at least one sample per class");
  }
  if (spec.dims == 0) throw std::invalid_argument("blobs: dims must be positive");
  if (!(spec.spread > 0.0)) throw std::invalid_argument("blobs: spread must be positive");

  const auto k = static_cast<std::size_t>(spec.classes);
  std::vector<double> centers(k * spec.dims, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    if (spec.dims == 1) {
      centers[c] = spec.separation * (static_cast<double>(c) - 0.5 * static_cast<double>(k - 1));
    } else {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
      centers[c * spec.dims] = spec.separation * std::cos(angle);
      centers[c * spec.dims + 1] = spec.separation * std::sin(angle);
    }
  }

  Rng rng(spec.seed);
  std::vector<double> values(spec.samples * spec.dims);
  std::vector<int> labels(spec.samples);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const std::size_t c = i % k;
    labels[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < spec.dims; ++j) {
      values[i * spec.dims + j] = centers[c * spec.dims + j] + spec.spread * rng.normal();
    }
  }
  return NoisyDataset(FeatureMatrix(spec.samples, spec.dims, std::move(values)),
                      std::move(labels), spec.classes);
}

namespace {

void check_rate(double rate) {
  if (!(rate >= 0.0) || !(rate < 1.0)) throw std::invalid_argument("noise rate must lie in [0, 1)");
}

}  // namespace

NoisyDataset inject_symmetric(const NoisyDataset& ds, double rate, std::uint64_t seed) {
  check_rate(rate);
  Rng rng(seed);
  const auto clean = ds.evaluation().clean_labels;
  const auto others = static_cast<std::uint64_t>(ds.class_count() - 1);
  std::vector<int> observed(clean.begin(), clean.end());
  for (auto& y : observed) {
    if (rng.uniform() < rate) {
      const int pick = static_cast<int>(rng.below(others));
      y = pick >= y ? pick + 1 : pick;
    }
  }
  return ds.relabeled(std::move(observed));
}

NoisyDataset inject_asymmetric(const NoisyDataset& ds,
                               const std::vector<std::pair<int, int>>& flip_map, double rate,
                               std::uint64_t seed) {
  if (!(rate >= 0.0) || !(rate <= 1.0)) throw std::invalid_argument("flip rate must lie in [0, 1]");
  const int k = ds.class_count();
  std::vector<int> target(static_cast<std::size_t>(k), -1);
  for (const auto& [from, to] : flip_map) {
    if (from < 0 || from >= k || to < 0 || to >= k) {
      throw std::invalid_argument("flip map entry outside the class range");
    }
    if (from == to) throw std::invalid_argument("flip map must not map a class to itself");
    if (target[static_cast<std::size_t>(from)] != -1) {
      throw std::invalid_argument("flip map lists a source class twice");
    }
    target[static_cast<std::size_t>(from)] = to;
  }
  Rng rng(seed);
  const auto clean = ds.evaluation().clean_labels;
  std::vector<int> observed(clean.begin(), clean.end());
  for (auto& y : observed) {
    const int to = target[static_cast<std::size_t>(y)];
    if (to >= 0 && rng.uniform() < rate) y = to;
  }
  return ds.relabeled(std::move(observed));
}

TransitionMatrix::TransitionMatrix(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {
  if (rows_.size() < 2) throw std::invalid_argument("transition matrix needs K >= 2");
  for (const auto& r : rows_) {
    if (r.size() != rows_.size()) throw std::invalid_argument("transition matrix must be square");
    double total = 0.0;
    for (double p : r) {
      if (!(p >= 0.0)) throw std::invalid_argument("transition entries must be >= 0");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("transition matrix rows must sum to 1");
    }
  }
}

TransitionMatrix TransitionMatrix::identity(int classes) { return symmetric(classes, 0.0); }

TransitionMatrix TransitionMatrix::symmetric(int classes, double rate) {
  check_rate(rate);
  const auto k = static_cast<std::size_t>(classes);
  std::vector<std::vector<double>> rows(k, std::vector<double>(k, rate / (classes - 1)));
  for (std::size_t c = 0; c < k; ++c) rows[c][c] = 1.0 - rate;
  return TransitionMatrix(std::move(rows));
}

namespace {

int draw_from_row(Rng& rng, std::span<const double> row) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    cumulative += row[j];
    if (u < cumulative) return static_cast<int>(j);
  }
  // u landed in the rounding slack above the last partial sum.
  for (std::size_t j = row.size(); j-- > 0;) {
    if (row[j] > 0.0) return static_cast<int>(j);
  }
  return static_cast<int>(row.size() - 1);
}

}  // namespace

NoisyDataset inject_transition(const NoisyDataset& ds, const TransitionMatrix& transition,
                               std::uint64_t seed) {
  if (transition.classes() != ds.class_count()) {
    throw std::invalid_argument("transition matrix size does not match class count");
  }
  Rng rng(seed);
  const auto clean = ds.evaluation().clean_labels;
  std::vector<int> observed(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    observed[i] = draw_from_row(rng, transition.row(clean[i]));
  }
  return ds.relabeled(std::move(observed));
}

NoisyDataset inject_transition(
    const NoisyDataset& ds,
    const std::function<TransitionMatrix(std::span<const double>)>& transition_at,
    std::uint64_t seed) {
  Rng rng(seed);
  const auto clean = ds.evaluation().clean_labels;
  std::vector<int> observed(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const TransitionMatrix t = transition_at(ds.features().row(i));
    if (t.classes() != ds.class_count()) {
      throw std::invalid_argument("transition matrix size does not match class count");
    }
    observed[i] = draw_from_row(rng, t.row(clean[i]));
  }
  return ds.relabeled(std::move(observed));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty();
}

bool parse_int(std::string_view s, int& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty();
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void csv_error(const std::filesystem::path& path, std::size_t line,
                            const std::string& what) {
  std::ostringstream msg;
  msg << path.string() << ":" << line << ": " << what;
  throw std::runtime_error(msg.str());
}

}  // namespace

NoisyDataset load_csv(const std::filesystem::path& path, int label_column, int class_count) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path.string());

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t width = 0;
  std::size_t label_index = 0;
  std::size_t line_no = 0;
  bool first_row = true;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto fields = split(line);
    if (first_row) {
      first_row = false;
      width = fields.size();
      if (width < 2) csv_error(path, line_no, "need at least one feature and a label column");
      const long idx = label_column < 0 ? static_cast<long>(width) + label_column : label_column;
      if (idx < 0 || idx >= static_cast<long>(width)) {
        csv_error(path, line_no, "label column out of range");
      }
      label_index = static_cast<std::size_t>(idx);
      bool numeric = true;
      double scratch = 0.0;
      for (auto f : fields) numeric = numeric && parse_double(f, scratch);
      if (!numeric) continue;  // header
    }
    if (fields.size() != width) {
      csv_error(path, line_no, "expected " + std::to_string(width) + " fields, found " +
                                   std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < width; ++j) {
      if (j == label_index) {
        int y = 0;
        if (!parse_int(fields[j], y)) csv_error(path, line_no, "label is not an integer");
        if (y < 0 || y >= class_count) {
          csv_error(path, line_no, "label " + std::to_string(y) + " outside [0, " +
                                       std::to_string(class_count) + ")");
        }
        labels.push_back(y);
      } else {
        double v = 0.0;
        if (!parse_double(fields[j], v)) {
          csv_error(path, line_no, "cannot parse feature '" + std::string(fields[j]) + "'");
        }
        values.push_back(v);
      }
    }
  }
  if (labels.empty()) throw std::runtime_error("CSV file has no data rows: " + path.string());
  const std::size_t rows = labels.size();
  return NoisyDataset(FeatureMatrix(rows, width - 1, std::move(values)), std::move(labels),
                      class_count);
}

std::filesystem::path truth_sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".truth.csv");
}

void save_csv(const NoisyDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open CSV file for writing: " + path.string());
  for (std::size_t j = 0; j < ds.dims(); ++j) out << 'x' << j << ',';
  out << "label\n";
  const auto observed = ds.observed_labels();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.features().row(i)) out << format_double(v) << ',';
    out << observed[i] << '\n';
  }

  std::ofstream truth(truth_sidecar_path(path), std::ios::trunc);
  if (!truth) throw std::runtime_error("cannot open truth sidecar for writing");
  truth << "clean_label,corrupted\n";
  const auto eval = ds.evaluation();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    truth << eval.clean_labels[i] << ',' << static_cast<int>(eval.corruption_mask[i]) << '\n';
  }
  if (!out || !truth) throw std::runtime_error("failed writing dataset: " + path.string());
}

NoisyDataset load_csv_with_truth(const std::filesystem::path& path, int class_count) {
  const NoisyDataset observed = load_csv(path, -1, class_count);
  const auto sidecar = truth_sidecar_path(path);
  std::ifstream in(sidecar);
  if (!in) throw std::runtime_error("cannot open truth sidecar: " + sidecar.string());
  std::vector<int> clean;
  std::size_t line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line_no == 1) continue;
    const auto fields = split(line);
    int y = 0;
    if (fields.size() != 2 || !parse_int(fields[0], y)) csv_error(sidecar, line_no, "bad row");
    clean.push_back(y);
  }
  if (clean.size() != observed.size()) {
    throw std::runtime_error("truth sidecar row count does not match " + path.string());
  }
  // Rebuild with clean labels as ground truth, then restore observed labels.
  const auto obs = observed.observed_labels();
  NoisyDataset truth(observed.features(), clean, class_count);
  return truth.relabeled(std::vector<int>(obs.begin(), obs.end()));
}

}  // namespace antidote
