#pragma once

#include <span>
#include <vector>

#include "antidote/divergences.hpp"

namespace antidote {

// Adversarial multipliers of the dual problem. rho is unused by the KL form.
struct DualParams {
  double lambda = 0.0;
  double rho = 0.0;

  friend bool operator==(const DualParams&, const DualParams&) = default;
};

// Per-sample minibatch losses are passed as std::span<const double>; every
// entry must be finite and the span non-empty (std::invalid_argument
// otherwise). Weight vectors come back as std::vector<double>.
//
// Throughout, s = lambda + kappa. The functions accept s = 0 (lambda = 0 with
// kappa = 0) and return the s -> 0+ limit, where all mass concentrates on the
// minimal-loss samples.

/// G_KL = -lambda delta - s log(mean_i exp(-L_i / s)), evaluated with the
/// exponentials shifted by min(L).
double g_kl(const DualParams& params, std::span<const double> losses,
            const DivergenceSpec& spec);

/// Closed-form dG_KL/dlambda.
double g_kl_dlambda(const DualParams& params, std::span<const double> losses,
                    const DivergenceSpec& spec);

/// G_f = -lambda delta - rho - s mean_i f*(-(L_i + rho) / s). Not defined for
/// the KL family (use g_kl).
double g_f(const DualParams& params, std::span<const double> losses,
           const DivergenceSpec& spec);

// Partial derivatives of G_f; require s > 0.
double g_f_dlambda(const DualParams& params, std::span<const double> losses,
                   const DivergenceSpec& spec);
double g_f_drho(const DualParams& params, std::span<const double> losses,
                const DivergenceSpec& spec);

/// w_i = exp(-L_i / s) / mean_j exp(-L_j / s). Mean one; non-increasing in L_i.
std::vector<double> kl_weights(const DualParams& params, std::span<const double> losses,
                               const DivergenceSpec& spec);

/// w_i = (f*_alpha)'(-(L_i + rho) / s); zero exactly when L_i >= -rho.
std::vector<double> alpha_weights(const DualParams& params,
                                  std::span<const double> losses,
                                  const DivergenceSpec& spec);

// Family dispatch for the two pairs above.
double dual_value(const DualParams& params, std::span<const double> losses,
                  const DivergenceSpec& spec);
std::vector<double> dual_weights(const DualParams& params, std::span<const double> losses,
                                 const DivergenceSpec& spec);

// Weights of the s -> 0+ limit: uniform over the samples attaining min(L).
std::vector<double> tied_minimum_weights(std::span<const double> losses);

}  // namespace antidote
