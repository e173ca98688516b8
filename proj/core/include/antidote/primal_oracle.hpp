#pragma once

#include <span>

#include "antidote/divergences.hpp"

namespace antidote {

struct PrimalSolution {
  DiscreteDistribution q = DiscreteDistribution::uniform(1);
  double objective = 0.0;         // sum_i q_i L_i + kappa D_f(q || P_n)
  double constraint_value = 0.0;  // D_f(q || P_n) <= delta
};

/// Solves inf { E_q[L] + kappa D_f(q || P_n) : D_f(q || P_n) <= delta } over
/// the probability simplex directly in q. For a multiplier s the Lagrangian
/// min_q { E_q[L] + s D_f(q || P_n) } is solved from its stationarity
/// conditions (f'(n q_i) = (nu - L_i)/s on the support); s is then bisected so
/// the divergence ball constraint is tight. Works for n up to a few thousand.
/// Throws std::invalid_argument for delta < 0 or kappa < 0.
PrimalSolution solve_primal(std::span<const double> losses, const DivergenceSpec& spec);

/// Primal optimum minus dual optimum.
double duality_gap(std::span<const double> losses, const DivergenceSpec& spec);

}  // namespace antidote
