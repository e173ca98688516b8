#include "antidote/inner_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "alpha_kernel.hpp"

namespace antidote {

namespace {

void validate(std::span<const double> losses, const DivergenceSpec& spec,
              const SolverSettings& settings) {
  if (losses.empty()) throw std::invalid_argument("inner solver: empty loss vector");
  for (double l : losses) {
    if (!std::isfinite(l)) throw std::invalid_argument("inner solver: non-finite loss");
  }
  if (!(spec.delta > 0.0) || !std::isfinite(spec.delta)) {
    throw std::invalid_argument("inner solver: delta must be finite and > 0");
  }
  if (!(spec.kappa >= 0.0)) throw std::invalid_argument("inner solver: kappa must be >= 0");
  if (!(settings.derivative_tolerance > 0.0) || !(settings.lambda_bracket_init > 0.0) ||
      settings.max_bracket_doublings <= 0 || settings.max_iterations <= 0) {
    throw std::invalid_argument("inner solver: settings must be positive");
  }
}

struct Root {
  double lambda;
  double derivative;
  LambdaCase lambda_case;
  int iterations;
};

// Maximizes a concave function of lambda >= 0 given its (non-increasing)
// derivative.
Root maximize_concave(const std::function<double(double)>& derivative,
                      const SolverSettings& settings, std::span<const double> losses) {
  const double d0 = derivative(0.0);
  if (d0 <= 0.0) return {0.0, d0, LambdaCase::boundary, 0};

  double lo = 0.0;
  double hi = settings.lambda_bracket_init;
  double d_hi = derivative(hi);
  int doublings = 0;
  while (d_hi >= 0.0) {
    if (d_hi == 0.0) return {hi, 0.0, LambdaCase::interior, doublings};
    if (++doublings > settings.max_bracket_doublings) {
      std::ostringstream msg;
      msg << "lambda bracket search did not find a sign change after "
          << settings.max_bracket_doublings << " doublings (lambda = " << hi
          << ", derivative = " << d_hi << ", batch size = " << losses.size() << ")";
      throw SolverError(msg.str());
    }
    lo = hi;
    hi *= 2.0;
    d_hi = derivative(hi);
  }

  Root best{hi, d_hi, LambdaCase::interior, doublings};
  for (int it = 1; it <= settings.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double d = derivative(mid);
    if (std::abs(d) < std::abs(best.derivative)) best = {mid, d, LambdaCase::interior, it};
    if (std::abs(d) <= settings.derivative_tolerance) break;
    if (d > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    best.iterations = it;
  }
  return best;
}

double min_loss(std::span<const double> losses) {
  return *std::min_element(losses.begin(), losses.end());
}

}  // namespace

InnerSolution solve_kl_lambda(std::span<const double> losses, const DivergenceSpec& spec,
                              const SolverSettings& settings) {
  if (!spec.family.is_kl()) throw std::invalid_argument("solve_kl_lambda needs the KL family");
  validate(losses, spec, settings);
  const auto derivative = [&](double lambda) {
    return g_kl_dlambda({lambda, 0.0}, losses, spec);
  };
  const Root root = maximize_concave(derivative, settings, losses);
  InnerSolution out;
  out.params = {root.lambda, 0.0};
  out.value = g_kl(out.params, losses, spec);
  out.dlambda = root.derivative;
  out.lambda_case = root.lambda_case;
  out.iterations = root.iterations;
  return out;
}

double optimal_rho(double lambda, std::span<const double> losses, const DivergenceSpec& spec) {
  if (spec.family.is_kl()) throw std::invalid_argument("optimal_rho needs an alpha family");
  if (losses.empty()) throw std::invalid_argument("optimal_rho: empty loss vector");
  const double s = lambda + spec.kappa;
  const double lo_loss = min_loss(losses);
  if (s == 0.0) return -lo_loss;

  // With nu = -rho, phi(nu) = mean_i (f*)'((nu - L_i)/s) is non-decreasing,
  // zero at nu = min L and at least one at nu = max L + s/(alpha - 1).
  const detail::AlphaKernel kernel(spec.family);
  const auto phi = [&](double nu) {
    double sum = 0.0;
    for (double l : losses) sum += kernel.weight((nu - l) / s);
    return sum / static_cast<double>(losses.size());
  };
  const double hi_loss = *std::max_element(losses.begin(), losses.end());
  double lo = lo_loss;
  double hi = hi_loss + s / (kernel.exponent() - 1.0);
  double nu = hi;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gap = phi(mid) - 1.0;
    if (std::abs(gap) < best_gap) {
      best_gap = std::abs(gap);
      nu = mid;
    }
    if (std::abs(gap) <= 1e-14) break;
    if (gap < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return -nu;
}

InnerSolution solve_f_params(std::span<const double> losses, const DivergenceSpec& spec,
                             const SolverSettings& settings) {
  if (spec.family.is_kl()) throw std::invalid_argument("solve_f_params needs an alpha family");
  validate(losses, spec, settings);
  const detail::AlphaKernel kernel(spec.family);

  const auto derivative = [&](double lambda) {
    if (lambda + spec.kappa == 0.0) {
      double sum = 0.0;
      for (double w : tied_minimum_weights(losses)) sum += f_value(spec.family, w);
      return -spec.delta + sum / static_cast<double>(losses.size());
    }
    const double rho = optimal_rho(lambda, losses, spec);
    return g_f_dlambda({lambda, rho}, losses, spec);
  };
  const Root root = maximize_concave(derivative, settings, losses);

  InnerSolution out;
  out.params = {root.lambda, optimal_rho(root.lambda, losses, spec)};
  out.value = g_f(out.params, losses, spec);
  out.dlambda = root.derivative;
  out.lambda_case = root.lambda_case;
  out.iterations = root.iterations;
  if (!std::isfinite(out.value)) {
    std::ostringstream msg;
    msg << "solve_f_params: non-finite objective at lambda = " << out.params.lambda
        << ", rho = " << out.params.rho;
    throw SolverError(msg.str());
  }
  return out;
}

InnerSolution solve_dual(std::span<const double> losses, const DivergenceSpec& spec,
                         const SolverSettings& settings) {
  return spec.family.is_kl() ? solve_kl_lambda(losses, spec, settings)
                             : solve_f_params(losses, spec, settings);
}

PenalizedSolution solve_penalized(std::span<const double> losses, const DivergenceSpec& spec,
                                  const PenaltySpec& penalty, const SolverSettings& settings) {
  if (!(penalty.strength > 0.0)) throw std::invalid_argument("penalty strength must be > 0");
  if (!(penalty.lower > 0.0) || !(penalty.upper < 1.0) || !(penalty.lower < penalty.upper)) {
    throw std::invalid_argument("penalty bounds must satisfy 0 < lower < upper < 1");
  }

  const auto evaluate = [&](double r) {
    DivergenceSpec at = spec;
    at.delta = delta_from_rmax(spec.family, r);
    PenalizedSolution sol;
    sol.inner = solve_dual(losses, at, settings);
    sol.r_max = r;
    sol.delta = at.delta;
    sol.objective = sol.inner.value + penalty.value(r);
    return sol;
  };

  constexpr int kScanPoints = 17;
  const double width = penalty.upper - penalty.lower;
  const auto grid = [&](int j) { return penalty.lower + width * j / (kScanPoints - 1); };
  PenalizedSolution best = evaluate(grid(0));
  int best_j = 0;
  for (int j = 1; j < kScanPoints; ++j) {
    PenalizedSolution sol = evaluate(grid(j));
    if (sol.objective < best.objective) {
      best = std::move(sol);
      best_j = j;
    }
  }

  double a = grid(std::max(best_j - 1, 0));
  double b = grid(std::min(best_j + 1, kScanPoints - 1));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  PenalizedSolution fc = evaluate(c);
  PenalizedSolution fd = evaluate(d);
  while (b - a > 1e-7) {
    if (fc.objective <= fd.objective) {
      b = d;
      d = c;
      fd = std::move(fc);
      c = b - inv_phi * (b - a);
      fc = evaluate(c);
    } else {
      a = c;
      c = d;
      fc = std::move(fd);
      d = a + inv_phi * (b - a);
      fd = evaluate(d);
    }
  }
  for (PenalizedSolution* candidate : {&fc, &fd}) {
    if (candidate->objective < best.objective) best = std::move(*candidate);
  }
  return best;
}

}  // namespace antidote
