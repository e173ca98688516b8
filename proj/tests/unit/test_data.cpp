#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "antidote/data.hpp"
#include "antidote/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace antidote;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Multinomial logistic regression by full-batch gradient descent; returns its
// training accuracy.
double linear_probe_accuracy(const NoisyDataset& ds) {
  const std::size_t n = ds.size(), d = ds.dims();
  const auto K = static_cast<std::size_t>(ds.class_count());
  std::vector<double> W(K * (d + 1), 0.0);
  const auto labels = ds.observed_labels();
  std::vector<double> logits(K), grad(W.size());
  for (int it = 0; it < 500; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = ds.features().row(i);
      double m = -1e300;
      for (std::size_t c = 0; c < K; ++c) {
        logits[c] = W[c * (d + 1) + d];
        for (std::size_t j = 0; j < d; ++j) logits[c] += W[c * (d + 1) + j] * x[j];
        m = std::max(m, logits[c]);
      }
      double z = 0.0;
      for (double& l : logits) z += (l = std::exp(l - m));
      for (std::size_t c = 0; c < K; ++c) {
        const double r = logits[c] / z - (static_cast<int>(c) == labels[i] ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j) grad[c * (d + 1) + j] += r * x[j] / n;
        grad[c * (d + 1) + d] += r / n;
      }
    }
    for (std::size_t k = 0; k < W.size(); ++k) W[k] -= 0.5 * grad[k];
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = ds.features().row(i);
    std::size_t best = 0;
    double best_v = -1e300;
    for (std::size_t c = 0; c < K; ++c) {
      double v = W[c * (d + 1) + d];
      for (std::size_t j = 0; j < d; ++j) v += W[c * (d + 1) + j] * x[j];
      if (v > best_v) best_v = v, best = c;
    }
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / n;
}

NoisyDataset blobs(int K, std::size_t n, std::uint64_t seed = 0) {
  return make_gaussian_blobs({K, n, 2, 4.0, 1.0, seed});
}

}  // namespace

TEST_CASE("gaussian blobs") {
  const auto small = make_gaussian_blobs({2, 4, 2, 10.0, 1.0, 0});
  CHECK(small.size() == 4);
  CHECK(small.corrupted_count() == 0);
  std::array<int, 2> counts{};
  for (int y : small.observed_labels()) ++counts[y];
  CHECK(counts == std::array<int, 2>{2, 2});

  CHECK_THROWS_AS(make_gaussian_blobs({2, 1, 2, 10.0, 1.0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(make_gaussian_blobs({1, 10, 2, 10.0, 1.0, 0}), std::invalid_argument);

  const auto ds = make_gaussian_blobs({4, 2000, 2, 4.0, 1.0, 1});
  CHECK(linear_probe_accuracy(ds) >= 0.95);
  CHECK(ds == make_gaussian_blobs({4, 2000, 2, 4.0, 1.0, 1}));
  CHECK_FALSE(ds == make_gaussian_blobs({4, 2000, 2, 4.0, 1.0, 2}));

  const auto odd = make_gaussian_blobs({3, 10, 5, 4.0, 1.0, 3});
  std::array<int, 3> c3{};
  for (int y : odd.observed_labels()) ++c3[y];
  for (int c : c3) CHECK((c == 3 || c == 4));
}

TEST_CASE("symmetric noise") {
  const auto ds = blobs(4, 10000);
  CHECK(inject_symmetric(ds, 0.0, 1) == ds);
  const auto noisy = inject_symmetric(ds, 0.4, 7);
  CHECK(noisy.corrupted_count() >= 3855);
  CHECK(noisy.corrupted_count() <= 4145);
  CHECK(noisy.features() == ds.features());
  const auto eval = noisy.evaluation();
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    CHECK(eval.clean_labels[i] == ds.observed_labels()[i]);
    CHECK(static_cast<bool>(eval.corruption_mask[i]) == (noisy.observed_labels()[i] != eval.clean_labels[i]));
  }
  // flips are spread evenly over the other classes
  std::map<std::pair<int, int>, int> pairs;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    if (eval.corruption_mask[i]) ++pairs[{eval.clean_labels[i], noisy.observed_labels()[i]}];
  }
  CHECK(pairs.size() == 12);
  for (const auto& [k, v] : pairs) CHECK(std::abs(v - 4000.0 / 12.0) < 4.0 * std::sqrt(4000.0 / 12.0));

  CHECK_THROWS_AS(inject_symmetric(ds, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(inject_symmetric(ds, -0.1, 1), std::invalid_argument);
  CHECK(inject_symmetric(ds, 0.4, 7) == noisy);
}

TEST_CASE("asymmetric noise") {
  const auto ds = blobs(4, 400);
  const auto all = inject_asymmetric(ds, {{0, 1}}, 1.0, 3);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int clean = ds.observed_labels()[i];
    CHECK(all.observed_labels()[i] == (clean == 0 ? 1 : clean));
  }
  CHECK_THROWS_AS(inject_asymmetric(ds, {{0, 0}}, 0.4, 3), std::invalid_argument);
  CHECK_THROWS_AS(inject_asymmetric(ds, {{0, 1}, {0, 2}}, 0.4, 3), std::invalid_argument);
  CHECK_THROWS_AS(inject_asymmetric(ds, {{0, 4}}, 0.4, 3), std::invalid_argument);

  // truck->automobile, bird->airplane, deer->horse, cat<->dog on ten classes
  const auto ten = make_gaussian_blobs({10, 20000, 2, 4.0, 1.0, 4});
  const std::vector<std::pair<int, int>> map{{9, 1}, {2, 0}, {4, 7}, {3, 5}, {5, 3}};
  const auto noisy = inject_asymmetric(ten, map, 0.4, 5);
  std::array<int, 10> total{}, flipped{};
  for (std::size_t i = 0; i < ten.size(); ++i) {
    const int c = ten.observed_labels()[i];
    ++total[c];
    if (noisy.observed_labels()[i] != c) {
      ++flipped[c];
      bool mapped = false;
      for (const auto& [from, to] : map) mapped = mapped || (from == c && to == noisy.observed_labels()[i]);
      CHECK(mapped);
    }
  }
  for (int c = 0; c < 10; ++c) {
    bool source = false;
    for (const auto& [from, to] : map) source = source || from == c;
    if (source) {
      const double frac = static_cast<double>(flipped[c]) / total[c];
      CHECK(std::abs(frac - 0.4) < 3.0 * std::sqrt(0.24 / total[c]));
    } else {
      CHECK(flipped[c] == 0);
    }
  }
}

TEST_CASE("transition matrix noise") {
  const auto ds = blobs(4, 1000);
  CHECK(inject_transition(ds, TransitionMatrix::identity(4), 1) == ds);
  CHECK_THROWS_AS(TransitionMatrix({{0.5, 0.6}, {0.5, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(TransitionMatrix({{1.2, -0.2}, {0.5, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(inject_transition(ds, TransitionMatrix::identity(3), 1), std::invalid_argument);

  const auto big = blobs(4, 100000, 9);
  const TransitionMatrix T({{0.6, 0.2, 0.1, 0.1},
                            {0.05, 0.85, 0.05, 0.05},
                            {0.25, 0.25, 0.25, 0.25},
                            {0.0, 0.3, 0.0, 0.7}});
  const auto noisy = inject_transition(big, T, 11);
  std::array<std::array<double, 4>, 4> counts{};
  std::array<double, 4> rows{};
  for (std::size_t i = 0; i < big.size(); ++i) {
    ++counts[big.observed_labels()[i]][noisy.observed_labels()[i]];
    ++rows[big.observed_labels()[i]];
  }
  double chi2 = 0.0;
  int dof = 0;
  for (int a = 0; a < 4; ++a) {
    int cells = 0;
    for (int b = 0; b < 4; ++b) {
      const double expected = rows[a] * T.row(a)[b];
      if (expected == 0.0) {
        CHECK(counts[a][b] == 0.0);
        continue;
      }
      chi2 += (counts[a][b] - expected) * (counts[a][b] - expected) / expected;
      ++cells;
    }
    dof += cells - 1;
  }
  CHECK(dof == 10);
  CHECK(chi2 < 23.209);  // 99% quantile of chi-square with 10 degrees of freedom

  // uniform rows erase the clean label
  const auto uniform = inject_transition(big, TransitionMatrix::symmetric(4, 0.75), 12);
  std::array<std::array<double, 4>, 4> u{};
  for (std::size_t i = 0; i < big.size(); ++i) ++u[big.observed_labels()[i]][uniform.observed_labels()[i]];
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) CHECK(std::abs(u[a][b] / rows[a] - 0.25) < 4.0 * std::sqrt(0.1875 / rows[a]));
  }
}

TEST_CASE("diagonal transition reproduces symmetric noise in distribution") {
  const auto big = blobs(4, 100000, 13);
  const auto via_t = inject_transition(big, TransitionMatrix::symmetric(4, 0.3), 14);
  const auto via_s = inject_symmetric(big, 0.3, 15);
  const double n = static_cast<double>(big.size());
  const double a = via_t.corrupted_count() / n;
  const double b = via_s.corrupted_count() / n;
  CHECK(std::abs(a - b) < 4.0 * std::sqrt(2.0 * 0.21 / n));
  CHECK(std::abs(a - 0.3) < 4.0 * std::sqrt(0.21 / n));
}

TEST_CASE("sample-dependent transition") {
  const auto ds = blobs(2, 2000, 16);
  // corrupt only points with a positive first coordinate
  const auto noisy = inject_transition(
      ds,
      [](std::span<const double> x) {
        return x[0] > 0.0 ? TransitionMatrix({{0.0, 1.0}, {1.0, 0.0}}) : TransitionMatrix::identity(2);
      },
      17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(static_cast<bool>(noisy.evaluation().corruption_mask[i]) == (ds.features().row(i)[0] > 0.0));
  }
}

TEST_CASE("CSV input") {
  const auto dir = oracle::scratch_dir("data_csv");
  {
    std::ofstream(dir / "two.csv") << "1.5,2.0,1\n-3,4e-1,0\n";
    const auto ds = load_csv(dir / "two.csv", -1, 2);
    CHECK(ds.size() == 2);
    CHECK(ds.dims() == 2);
    CHECK(ds.features().row(1)[1] == 0.4);
    CHECK(ds.observed_labels()[0] == 1);
  }
  {
    std::ofstream(dir / "header.csv") << "label,a,b\n2,0.5,0.25\n0,1,1\n";
    const auto ds = load_csv(dir / "header.csv", 0, 3);
    CHECK(ds.size() == 2);
    CHECK(ds.observed_labels()[0] == 2);
    CHECK(ds.features().row(0)[1] == 0.25);
  }
  {
    std::ofstream(dir / "bad_label.csv") << "0.1,0\n0.2,3\n";
    try {
      load_csv(dir / "bad_label.csv", -1, 3);
      FAIL("expected an error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
  }
  {
    std::ofstream(dir / "bad_num.csv") << "x,y\n0.1,0\nabc,1\n";
    try {
      load_csv(dir / "bad_num.csv", -1, 2);
      FAIL("expected an error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
  }
  CHECK_THROWS(load_csv(dir / "missing.csv", -1, 2));
}

TEST_CASE("CSV round trip with truth sidecar") {
  const auto dir = oracle::scratch_dir("data_roundtrip");
  const auto noisy = inject_symmetric(make_gaussian_blobs({3, 300, 4, 3.0, 1.0, 21}), 0.3, 22);
  save_csv(noisy, dir / "d.csv");
  CHECK(std::filesystem::exists(truth_sidecar_path(dir / "d.csv")));
  const auto back = load_csv_with_truth(dir / "d.csv", 3);
  CHECK(back == noisy);
  // header is detected by the plain reader, clean labels are not in the main file
  const auto observed_only = load_csv(dir / "d.csv", -1, 3);
  CHECK(observed_only.features() == noisy.features());
  CHECK(observed_only.corrupted_count() == 0);

  // same seed, byte-identical files
  save_csv(inject_symmetric(make_gaussian_blobs({3, 300, 4, 3.0, 1.0, 21}), 0.3, 22), dir / "e.csv");
  CHECK(read_file(dir / "d.csv") == read_file(dir / "e.csv"));
  CHECK(read_file(truth_sidecar_path(dir / "d.csv")) == read_file(truth_sidecar_path(dir / "e.csv")));
}

TEST_CASE("dataset views and slicing") {
  const auto noisy = inject_symmetric(blobs(2, 10), 0.5, 1);
  const auto view = noisy.training_view();
  CHECK(view.size() == 10);
  CHECK(view.class_count == 2);
  const auto part = noisy.slice(2, 5);
  CHECK(part.size() == 3);
  CHECK(part.observed_labels()[0] == noisy.observed_labels()[2]);
  CHECK(part.evaluation().clean_labels[0] == noisy.evaluation().clean_labels[2]);
  CHECK_THROWS(noisy.slice(5, 11));
}
