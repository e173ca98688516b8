#include "antidote/primal_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "antidote/inner_solver.hpp"

namespace antidote {

namespace {

std::vector<double> normalized(std::vector<double> q) {
  double total = 0.0;
  for (double x : q) total += x;
  for (double& x : q) x /= total;
  return q;
}

std::vector<double> uniform_over_minimizers(std::span<const double> losses) {
  const double lo = *std::min_element(losses.begin(), losses.end());
  std::vector<double> q(losses.size(), 0.0);
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (losses[i] == lo) q[i] = 1.0;
  }
  return normalized(std::move(q));
}

// argmin_q { sum_i q_i L_i + s D_f(q || P_n) } for s > 0.
std::vector<double> lagrangian_minimizer(std::span<const double> losses,
                                         const FFamily& family, double s) {
  const std::size_t n = losses.size();
  const double lo = *std::min_element(losses.begin(), losses.end());
  std::vector<double> q(n);
  if (family.is_kl()) {
    // f'(t) = log t + 1, so q_i is proportional to exp(-L_i / s).
    for (std::size_t i = 0; i < n; ++i) q[i] = std::exp(-(losses[i] - lo) / s);
    return normalized(std::move(q));
  }

  // f'(t) = t^(a-1)/(a-1) and f'(0) = 0: n q_i = ((a-1)(nu - L_i)_+ / s)^(1/(a-1)).
  const double a = family.exponent();
  const double inv = 1.0 / (a - 1.0);
  const auto density = [&](double nu, std::size_t i) {
    const double gap = nu - losses[i];
    if (gap <= 0.0) return 0.0;
    const double x = (a - 1.0) * gap / s;
    if (a == 2.0) return x;
    if (a == 3.0) return std::sqrt(x);
    return std::pow(x, inv);
  };
  const auto mass = [&](double nu) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += density(nu, i);
    return total / static_cast<double>(n);
  };
  const double hi_loss = *std::max_element(losses.begin(), losses.end());
  double nu_lo = lo;
  double nu_hi = hi_loss + s / (a - 1.0);
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (nu_lo + nu_hi);
    if (mid <= nu_lo || mid >= nu_hi) break;
    const double m = mass(mid);
    if (m < 1.0) {
      nu_lo = mid;
    } else {
      nu_hi = mid;
      if (m - 1.0 <= 1e-15) break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) q[i] = density(nu_hi, i);
  return normalized(std::move(q));
}

PrimalSolution make_solution(std::vector<double> q, std::span<const double> losses,
                             const DivergenceSpec& spec) {
  const auto n = losses.size();
  DiscreteDistribution dist(std::move(q));
  const double constraint = divergence(spec.family, dist, DiscreteDistribution::uniform(n));
  double expected = 0.0;
  for (std::size_t i = 0; i < n; ++i) expected += dist[i] * losses[i];
  return {std::move(dist), expected + spec.kappa * constraint, constraint};
}

}  // namespace

PrimalSolution solve_primal(std::span<const double> losses, const DivergenceSpec& spec) {
  if (losses.empty()) throw std::invalid_argument("solve_primal: empty loss vector");
  for (double l : losses) {
    if (!std::isfinite(l)) throw std::invalid_argument("solve_primal: non-finite loss");
  }
  if (!(spec.delta >= 0.0)) throw std::invalid_argument("solve_primal: delta must be >= 0");
  if (!(spec.kappa >= 0.0)) throw std::invalid_argument("solve_primal: kappa must be >= 0");

  const std::size_t n = losses.size();
  if (spec.delta == 0.0) return make_solution(std::vector<double>(n, 1.0 / n), losses, spec);

  // Unconstrained candidate: multiplier kappa, or the point-mass limit at kappa = 0.
  PrimalSolution free = make_solution(spec.kappa > 0.0
                                          ? lagrangian_minimizer(losses, spec.family, spec.kappa)
                                          : uniform_over_minimizers(losses),
                                      losses, spec);
  if (free.constraint_value <= spec.delta) return free;

  // The constraint binds: find s > kappa with D(q(s)) = delta; D(q(s)) decreases in s.
  double s_lo = spec.kappa;
  double s_hi = std::max(1.0, 2.0 * spec.kappa);
  PrimalSolution feasible = make_solution(lagrangian_minimizer(losses, spec.family, s_hi),
                                          losses, spec);
  for (int doublings = 0; feasible.constraint_value > spec.delta; ++doublings) {
    if (doublings > 200) throw std::runtime_error("solve_primal: multiplier bracket failed");
    s_lo = s_hi;
    s_hi *= 2.0;
    feasible = make_solution(lagrangian_minimizer(losses, spec.family, s_hi), losses, spec);
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (s_lo + s_hi);
    if (mid <= s_lo || mid >= s_hi) break;
    PrimalSolution candidate =
        make_solution(lagrangian_minimizer(losses, spec.family, mid), losses, spec);
    if (candidate.constraint_value > spec.delta) {
      s_lo = mid;
    } else {
      s_hi = mid;
      feasible = std::move(candidate);
      if (spec.delta - feasible.constraint_value <= 1e-13) break;
    }
  }
  return feasible;
}

double duality_gap(std::span<const double> losses, const DivergenceSpec& spec) {
  const PrimalSolution primal = solve_primal(losses, spec);
  const InnerSolution dual = solve_dual(losses, spec);
  return primal.objective - dual.value;
}

}  // namespace antidote
