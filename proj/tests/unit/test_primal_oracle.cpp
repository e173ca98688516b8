#include <algorithm>
#include <cmath>
#include <numbers>

#include "antidote/divergences.hpp"
#include "antidote/inner_solver.hpp"
#include "antidote/primal_oracle.hpp"
#include "antidote/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace antidote;

namespace {

std::function<long double(long double)> reference_f(const FFamily& family) {
  if (family.is_kl()) return [](long double t) { return oracle::f_kl(t); };
  const long double a = family.exponent();
  return [a](long double t) { return oracle::f_alpha(t, a); };
}

void check_invariants(const PrimalSolution& sol, const std::vector<double>& L,
                      const DivergenceSpec& spec) {
  CHECK(sol.constraint_value <= spec.delta + 1e-9);
  double expected = spec.kappa * sol.constraint_value;
  for (std::size_t i = 0; i < L.size(); ++i) expected += sol.q[i] * L[i];
  CHECK(std::abs(sol.objective - expected) <= 1e-10);
  CHECK(sol.constraint_value ==
        doctest::Approx(divergence(spec.family, sol.q, DiscreteDistribution::uniform(L.size()))));
}

}  // namespace

TEST_CASE("primal examples") {
  const std::vector<double> L{0.0, 1.0};
  {
    const DivergenceSpec spec{FFamily::kl(), 0.0, 0.0, std::nullopt};
    const auto sol = solve_primal(L, spec);
    CHECK(sol.q[0] == doctest::Approx(0.5));
    CHECK(sol.objective == doctest::Approx(0.5));
  }
  {
    const DivergenceSpec spec{FFamily::kl(), std::numbers::ln2, 0.0, std::nullopt};
    const auto sol = solve_primal(L, spec);
    CHECK(std::abs(sol.objective) <= 1e-6);
    CHECK(sol.q[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(sol.objective - oracle::primal_by_grid(L, reference_f(spec.family), spec.delta, 0.0)) <= 1e-5);
  }
  {
    const std::vector<double> L4{0.0, 1.0, 2.0, 3.0};
    const DivergenceSpec spec{FFamily::alpha(2.0), 0.5, 0.05, std::nullopt};
    const auto sol = solve_primal(L4, spec);
    check_invariants(sol, L4, spec);
    CHECK(std::abs(sol.objective - solve_f_params(L4, spec).value) <= 1e-4);
  }
  const DivergenceSpec negative{FFamily::kl(), -0.1, 0.0, std::nullopt};
  CHECK_THROWS_AS(solve_primal(L, negative), std::invalid_argument);
}

TEST_CASE("primal matches a barycentric grid on small instances") {
  Rng rng(41);
  for (const auto& family : {FFamily::kl(), FFamily::alpha(2.0), FFamily::alpha(3.0)}) {
    for (int t = 0; t < 4; ++t) {
      std::vector<double> L(t < 2 ? 2 : 3);
      for (double& l : L) l = rng.uniform(0.0, 5.0);
      const DivergenceSpec spec{family, rng.uniform(0.05, 1.0), t % 2 == 0 ? 0.05 : 0.0, std::nullopt};
      const auto sol = solve_primal(L, spec);
      check_invariants(sol, L, spec);
      const double grid = oracle::primal_by_grid(L, reference_f(family), spec.delta, spec.kappa);
      CHECK(sol.objective <= grid + 1e-5);
      CHECK(sol.objective >= grid - 1e-5);
    }
  }
}

TEST_CASE("duality gap examples") {
  for (const auto& family : {FFamily::kl(), FFamily::alpha(2.0)}) {
    const std::vector<double> same(6, 2.5);
    CHECK(std::abs(duality_gap(same, {family, 0.3, 0.05, std::nullopt})) <= 1e-6);
    Rng rng(42);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> L(8);
      for (double& l : L) l = rng.uniform(0.0, 5.0);
      CHECK(std::abs(duality_gap(L, {family, 0.3, 0.05, std::nullopt})) <= 1e-4);
    }
  }
}

TEST_CASE("weak duality on arbitrary dual points") {
  Rng rng(43);
  for (const auto& family : {FFamily::kl(), FFamily::alpha(2.0), FFamily::alpha(3.0)}) {
    for (int t = 0; t < 300; ++t) {
      std::vector<double> L(2 + rng.below(20));
      for (double& l : L) l = rng.uniform(0.0, 5.0);
      const DivergenceSpec spec{family, rng.uniform(0.05, 1.0), rng.uniform(0.0, 0.1), std::nullopt};
      const double primal = solve_primal(L, spec).objective;
      const DualParams p{rng.uniform(0.01, 5.0), rng.uniform(-8.0, 0.0)};
      CHECK(dual_value(p, L, spec) <= primal + 1e-9);
    }
  }
}

TEST_CASE("primal monotonicity in delta and kappa") {
  Rng rng(44);
  for (const auto& family : {FFamily::kl(), FFamily::alpha(2.0)}) {
    for (int t = 0; t < 100; ++t) {
      std::vector<double> L(2 + rng.below(10));
      for (double& l : L) l = rng.uniform(0.0, 5.0);
      const double delta = rng.uniform(0.01, 1.0);
      const double kappa = rng.uniform(0.0, 0.2);
      const auto value = [&](double d, double k) {
        return solve_primal(L, {family, d, k, std::nullopt}).objective;
      };
      CHECK(value(1.5 * delta, kappa) <= value(delta, kappa) + 1e-12);
      CHECK(value(delta, kappa + 0.05) >= value(delta, kappa) - 1e-12);
    }
  }
}

TEST_CASE("a radius covering point masses reaches min L") {
  Rng rng(45);
  for (const auto& family : {FFamily::kl(), FFamily::alpha(2.0), FFamily::alpha(3.0)}) {
    for (std::size_t n : {2u, 5u, 16u}) {
      std::vector<double> L(n);
      for (double& l : L) l = rng.uniform(0.0, 5.0);
      const double delta = delta_from_rmax(family, static_cast<double>(n - 1) / n) + 1e-12;
      const auto sol = solve_primal(L, {family, delta, 0.0, std::nullopt});
      CHECK(std::abs(sol.objective - *std::min_element(L.begin(), L.end())) <= 1e-6);
    }
  }
}

TEST_CASE("equal-loss ties resolve to the uniform distribution") {
  const std::vector<double> L{1.0, 1.0, 1.0, 3.0};
  const auto sol = solve_primal(L, {FFamily::kl(), 0.5, 0.05, std::nullopt});
  CHECK(sol.q[0] == doctest::Approx(sol.q[1]).epsilon(1e-12));
  CHECK(sol.q[1] == doctest::Approx(sol.q[2]).epsilon(1e-12));
}
