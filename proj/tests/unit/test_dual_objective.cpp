#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "antidote/dual_objective.hpp"
#include "antidote/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace antidote;

namespace {

DivergenceSpec kl(double delta, double kappa) { return {FFamily::kl(), delta, kappa, std::nullopt}; }
DivergenceSpec alpha(double a, double delta, double kappa) {
  return {FFamily::alpha(a), delta, kappa, std::nullopt};
}

std::vector<double> random_losses(Rng& rng, std::size_t n, double hi = 5.0) {
  std::vector<double> L(n);
  for (double& l : L) l = rng.uniform(0.0, hi);
  return L;
}

}  // namespace

TEST_CASE("g_kl examples") {
  const std::vector<double> same{1.0, 1.0};
  CHECK(g_kl({1.0, 0.0}, same, kl(0.5, 0.0)) == doctest::Approx(0.5));
  CHECK(g_kl({2.0, 0.0}, same, kl(0.5, 0.0)) == doctest::Approx(0.0));
  const std::vector<double> L{0.0, std::log(9.0)};
  const double expected = -0.2 - std::log(5.0 / 9.0);
  CHECK(g_kl({1.0, 0.0}, L, kl(0.2, 0.0)) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(0.3878).epsilon(1e-4));
  CHECK(g_kl({1.0, 0.0}, L, kl(0.2, 0.0)) == doctest::Approx(oracle::g_kl(1.0, L, 0.2, 0.0)).epsilon(1e-14));
  CHECK_THROWS_AS(g_kl({1.0, 0.0}, std::vector<double>{}, kl(0.2, 0.0)), std::invalid_argument);
}

TEST_CASE("g_kl agrees with an independent log-sum-exp") {
  Rng rng(21);
  for (int t = 0; t < 500; ++t) {
    const auto L = random_losses(rng, 1 + rng.below(40), 30.0);
    const double lambda = rng.uniform(0.0, 5.0);
    const double delta = rng.uniform(0.01, 2.0);
    const double kappa = rng.uniform(0.001, 0.5);
    CHECK(g_kl({lambda, 0.0}, L, kl(delta, kappa)) ==
          doctest::Approx(oracle::g_kl(lambda, L, delta, kappa)).epsilon(1e-12));
  }
  // no overflow for huge losses and small s
  const std::vector<double> big{1e4, 1e4 + 1.0};
  CHECK(std::isfinite(g_kl({0.0, 0.0}, big, kl(0.1, 0.01))));
}

TEST_CASE("g_kl_dlambda") {
  const std::vector<double> same{3.0, 3.0};
  for (double lambda : {0.0, 0.5, 7.0}) {
    CHECK(g_kl_dlambda({lambda, 0.0}, same, kl(0.3, 0.05)) == doctest::Approx(-0.3).epsilon(1e-14));
  }

  const std::vector<double> L{0.0, 1.0};
  const auto g = [&](double lam) { return g_kl({lam, 0.0}, L, kl(0.2, 0.05)); };
  const double fd = oracle::central_difference(g, 1.0, 1e-6);
  CHECK(g_kl_dlambda({1.0, 0.0}, L, kl(0.2, 0.05)) == doctest::Approx(fd).epsilon(1e-6));

  const double far = g_kl_dlambda({1e6, 0.0}, L, kl(0.2, 0.0));
  CHECK(far < 0.0);
  CHECK(far == doctest::Approx(-0.2).epsilon(1e-3));

  Rng rng(22);
  for (int t = 0; t < 300; ++t) {
    const auto Lr = random_losses(rng, 2 + rng.below(30));
    const double lambda = rng.uniform(0.05, 10.0);
    const auto spec = kl(rng.uniform(0.01, 1.5), rng.uniform(0.0, 0.2));
    const auto gr = [&](double lam) { return g_kl({lam, 0.0}, Lr, spec); };
    const double fdr = oracle::central_difference(gr, lambda, 1e-5 * std::max(1.0, lambda));
    CHECK(g_kl_dlambda({lambda, 0.0}, Lr, spec) == doctest::Approx(fdr).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("g_kl is concave in lambda") {
  Rng rng(23);
  for (int t = 0; t < 1000; ++t) {
    const auto L = random_losses(rng, 2 + rng.below(20));
    const auto spec = kl(rng.uniform(0.01, 2.0), rng.uniform(0.0, 0.3));
    double l[3] = {rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
    std::sort(l, l + 3);
    if (l[1] - l[0] < 1e-2 || l[2] - l[1] < 1e-2) continue;
    const double g0 = g_kl({l[0], 0.0}, L, spec);
    const double g1 = g_kl({l[1], 0.0}, L, spec);
    const double g2 = g_kl({l[2], 0.0}, L, spec);
    const double second = ((g2 - g1) / (l[2] - l[1]) - (g1 - g0) / (l[1] - l[0])) / (l[2] - l[0]);
    CHECK(second <= 1e-10);
  }
}

TEST_CASE("g_f examples and errors") {
  const std::vector<double> neg{-1.0, -1.0};
  CHECK(g_f({1.0, 0.0}, neg, alpha(2.0, 1.0, 0.0)) == doctest::Approx(-2.0));
  const std::vector<double> L{0.0, 1.0};
  CHECK(g_f({1.0, 5.0}, L, alpha(2.0, 1.0, 0.0)) == doctest::Approx(-6.5));
  CHECK_THROWS_AS(g_f({1.0, 0.0}, L, kl(1.0, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(alpha_weights({1.0, 0.0}, L, kl(1.0, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(g_f({1.0, 0.0}, std::vector<double>{}, alpha(2.0, 1.0, 0.0)), std::invalid_argument);
}

TEST_CASE("g_f partial derivatives match finite differences") {
  Rng rng(24);
  for (double a : {1.5, 2.0, 3.0}) {
    for (int t = 0; t < 200; ++t) {
      const auto L = random_losses(rng, 2 + rng.below(20));
      const auto spec = alpha(a, rng.uniform(0.05, 1.5), rng.uniform(0.0, 0.2));
      const double lambda = rng.uniform(0.1, 5.0);
      const double rho = rng.uniform(-6.0, 1.0);
      const auto gl = [&](double x) { return g_f({x, rho}, L, spec); };
      const auto gr = [&](double x) { return g_f({lambda, x}, L, spec); };
      CHECK(g_f_dlambda({lambda, rho}, L, spec) ==
            doctest::Approx(oracle::central_difference(gl, lambda, 1e-6)).epsilon(1e-5).scale(1.0));
      CHECK(g_f_drho({lambda, rho}, L, spec) ==
            doctest::Approx(oracle::central_difference(gr, rho, 1e-6)).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("g_f is jointly concave in (lambda, rho)") {
  Rng rng(25);
  for (double a : {2.0, 3.0}) {
    for (int t = 0; t < 1000; ++t) {
      const auto L = random_losses(rng, 2 + rng.below(10));
      const auto spec = alpha(a, rng.uniform(0.05, 1.5), rng.uniform(0.0, 0.2));
      const DualParams p{rng.uniform(0.0, 5.0), rng.uniform(-8.0, 2.0)};
      const DualParams q{rng.uniform(0.0, 5.0), rng.uniform(-8.0, 2.0)};
      if (p.lambda + spec.kappa <= 1e-3 || q.lambda + spec.kappa <= 1e-3) continue;
      const DualParams mid{0.5 * (p.lambda + q.lambda), 0.5 * (p.rho + q.rho)};
      CHECK(g_f(mid, L, spec) >= 0.5 * (g_f(p, L, spec) + g_f(q, L, spec)) - 1e-10);
    }
  }
}

TEST_CASE("kl_weights examples") {
  const std::vector<double> same{2.0, 2.0, 2.0};
  for (double w : kl_weights({1.0, 0.0}, same, kl(0.1, 0.0))) CHECK(w == doctest::Approx(1.0));
  const std::vector<double> L{0.0, std::log(9.0)};
  const auto w = kl_weights({0.95, 0.0}, L, kl(0.1, 0.05));
  CHECK(w[0] == doctest::Approx(1.8).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(0.2).epsilon(1e-14));
  const std::vector<double> L01{0.0, 1.0};
  const auto limit = kl_weights({0.0, 0.0}, L01, kl(0.1, 1e-3));
  CHECK(std::abs(limit[0] - 2.0) <= 1e-6);
  CHECK(std::abs(limit[1]) <= 1e-6);
  // s = 0 exactly: uniform over the tied minimum
  const std::vector<double> tied{1.0, 0.5, 0.5, 3.0};
  const auto zero = kl_weights({0.0, 0.0}, tied, kl(0.1, 0.0));
  CHECK(zero == std::vector<double>{0.0, 2.0, 2.0, 0.0});
}

TEST_CASE("loss gradient of G_KL is w / B") {
  // The descent direction of the reweighted objective is therefore -w_i / B.
  Rng rng(26);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t B = 2 + rng.below(31);
    auto L = random_losses(rng, B);
    const auto spec = kl(rng.uniform(0.05, 1.5), rng.uniform(0.01, 0.3));
    const DualParams p{rng.uniform(0.0, 3.0), 0.0};
    const auto w = kl_weights(p, L, spec);
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(B);
    CHECK(std::abs(mean - 1.0) <= 1e-10);
    const std::size_t i = rng.below(B);
    const double expected = w[i] / static_cast<double>(B);
    if (expected < 1e-6) continue;
    const double fd = oracle::dg_kl_dloss(p.lambda, L, spec.delta, spec.kappa, i);
    CHECK(std::abs(fd - expected) <= 1e-6 * std::abs(expected));
    ++checked;
  }
  CHECK(checked > 900);
}

TEST_CASE("kl_weights are non-increasing in the loss") {
  Rng rng(27);
  for (int t = 0; t < 500; ++t) {
    const auto L = random_losses(rng, 2 + rng.below(50));
    const auto w = kl_weights({rng.uniform(0.0, 3.0), 0.0}, L, kl(0.3, 0.05));
    for (std::size_t a = 0; a < L.size(); ++a) {
      for (std::size_t b = 0; b < L.size(); ++b) {
        if (L[a] < L[b]) CHECK(w[a] >= w[b]);
      }
    }
  }
}

TEST_CASE("larger lambda pulls weights toward one") {
  Rng rng(28);
  for (int t = 0; t < 300; ++t) {
    const auto L = random_losses(rng, 3 + rng.below(20));
    const double lambda = rng.uniform(0.01, 3.0);
    const auto spec = kl(0.3, 0.05);
    const auto spread = [&](double lam) {
      double m = 0.0;
      for (double w : kl_weights({lam, 0.0}, L, spec)) m = std::max(m, std::abs(w - 1.0));
      return m;
    };
    CHECK(spread(10.0 * lambda) < spread(lambda));
  }
}

TEST_CASE("alpha_weights examples") {
  const std::vector<double> L{1.0, 2.0, 3.0};
  CHECK(alpha_weights({1.0, 0.0}, L, alpha(2.0, 0.5, 0.0)) == std::vector<double>{0.0, 0.0, 0.0});
  const std::vector<double> L2{-2.0, 0.0};
  const auto w = alpha_weights({0.95, 1.0}, L2, alpha(2.0, 0.5, 0.05));
  CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(w[1] == 0.0);
  const std::vector<double> L3{-2.0};
  CHECK(alpha_weights({2.0, 0.0}, L3, alpha(2.0, 0.5, 0.0))[0] == doctest::Approx(1.0));
}

TEST_CASE("alpha weights vanish exactly past the threshold") {
  Rng rng(29);
  for (double a : {1.5, 2.0, 3.0, 4.0}) {
    for (int t = 0; t < 200; ++t) {
      const auto L = random_losses(rng, 2 + rng.below(20));
      const double rho = -rng.uniform(0.0, 5.0);
      const DualParams p{rng.uniform(0.0, 3.0), rho};
      const auto spec = alpha(a, 0.4, 0.05);
      const auto w = alpha_weights(p, L, spec);
      const double s = p.lambda + spec.kappa;
      for (std::size_t i = 0; i < L.size(); ++i) {
        CHECK(w[i] >= 0.0);
        if (L[i] >= -rho) {
          CHECK(w[i] == 0.0);
        } else {
          const double t_arg = -(L[i] + rho) / s;
          const double expected = std::pow((a - 1.0) * t_arg, 1.0 / (a - 1.0));
          CHECK(w[i] == doctest::Approx(expected).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("tied minimum weights") {
  const std::vector<double> L{0.3, 0.1, 0.1, 0.2};
  CHECK(tied_minimum_weights(L) == std::vector<double>{0.0, 2.0, 2.0, 0.0});
}

TEST_CASE("family dispatch") {
  const std::vector<double> L{0.5, 1.5, 2.5};
  const DualParams p{0.7, -2.0};
  CHECK(dual_value(p, L, kl(0.3, 0.05)) == g_kl(p, L, kl(0.3, 0.05)));
  CHECK(dual_value(p, L, alpha(2.0, 0.3, 0.05)) == g_f(p, L, alpha(2.0, 0.3, 0.05)));
  CHECK(dual_weights(p, L, alpha(3.0, 0.3, 0.05)) == alpha_weights(p, L, alpha(3.0, 0.3, 0.05)));
}
