#pragma once

#include <span>
#include <stdexcept>
#include <string>

#include "antidote/dual_objective.hpp"

namespace antidote {

struct SolverSettings {
  double derivative_tolerance = 1e-10;
  double lambda_bracket_init = 1.0;
  int max_bracket_doublings = 60;
  int max_iterations = 200;

  friend bool operator==(const SolverSettings&, const SolverSettings&) = default;
};

// Penalty V(r) = C r^2 / (1 - r) on the forgettable fraction r, searched over
// the open interval (lower, upper).
struct PenaltySpec {
  double strength = 1.0;
  double lower = 1e-4;
  double upper = 1.0 - 1e-4;

  double value(double r_max) const { return strength * r_max * r_max / (1.0 - r_max); }
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Which side of the lambda >= 0 boundary the maximizer landed on.
enum class LambdaCase {
  boundary,  // lambda = 0 and dG/dlambda(0) <= 0
  interior,  // lambda > 0 and |dG/dlambda| <= tolerance
};

struct InnerSolution {
  DualParams params;
  double value = 0.0;       // dual objective at params
  double dlambda = 0.0;     // dG/dlambda at params (profile derivative for alpha)
  LambdaCase lambda_case = LambdaCase::boundary;
  int iterations = 0;
};

/// argmax_{lambda >= 0} G_KL by sign-checking the derivative at zero, doubling
/// a bracket until the derivative turns negative, then bisecting.
InnerSolution solve_kl_lambda(std::span<const double> losses, const DivergenceSpec& spec,
                              const SolverSettings& settings = {});

/// argmax_{lambda >= 0, rho} G_f for alpha families. For each lambda the
/// optimal rho solves mean_i (f*)'(-(L_i + rho)/s) = 1 by bisection; the
/// resulting concave profile in lambda is then bisected on its derivative.
InnerSolution solve_f_params(std::span<const double> losses, const DivergenceSpec& spec,
                             const SolverSettings& settings = {});

// Dispatches on spec.family.
InnerSolution solve_dual(std::span<const double> losses, const DivergenceSpec& spec,
                         const SolverSettings& settings = {});

/// Optimal rho for a fixed lambda (alpha family).
double optimal_rho(double lambda, std::span<const double> losses, const DivergenceSpec& spec);

struct PenalizedSolution {
  InnerSolution inner;  // dual solution at delta(r_max)
  double r_max = 0.0;
  double delta = 0.0;
  double objective = 0.0;  // inner.value + V(r_max)
};

/// Minimizes [max dual at delta(r)] + V(r) over r in (penalty.lower,
/// penalty.upper): a coarse scan locates the basin, golden-section search
/// refines it.
PenalizedSolution solve_penalized(std::span<const double> losses, const DivergenceSpec& spec,
                                  const PenaltySpec& penalty,
                                  const SolverSettings& settings = {});

}  // namespace antidote
