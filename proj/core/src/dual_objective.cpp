#include "antidote/dual_objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "alpha_kernel.hpp"

namespace antidote {

namespace {

// Appendix-D style floor on logarithm arguments.
constexpr double kLogFloor = 1e-8;

void check_losses(std::span<const double> losses) {
  if (losses.empty()) throw std::invalid_argument("loss vector must be non-empty");
  for (double l : losses) {
    if (!std::isfinite(l)) throw std::invalid_argument("loss vector entries must be finite");
  }
}

double scale_of(const DualParams& params, const DivergenceSpec& spec) {
  if (!(params.lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(spec.kappa >= 0.0)) throw std::invalid_argument("kappa must be >= 0");
  return params.lambda + spec.kappa;
}

void require_alpha(const DivergenceSpec& spec, const char* what) {
  if (spec.family.is_kl()) {
    throw std::invalid_argument(std::string(what) + " is defined for alpha families only");
  }
}

// Moments of e_i = exp(-(L_i - min L) / s) for s > 0.
struct ShiftedExponentials {
  double min_loss;
  double mean_exp;         // mean_i e_i, in [1/B, 1]
  double mean_excess;      // sum_i (L_i - min) e_i / sum_i e_i
};

ShiftedExponentials shifted_exponentials(std::span<const double> losses, double s) {
  const double lo = *std::min_element(losses.begin(), losses.end());
  double sum_e = 0.0;
  double sum_ae = 0.0;
  for (double l : losses) {
    const double a = l - lo;
    const double e = std::exp(-a / s);
    sum_e += e;
    sum_ae += a * e;
  }
  const auto n = static_cast<double>(losses.size());
  return {lo, sum_e / n, sum_ae / sum_e};
}

}  // namespace

std::vector<double> tied_minimum_weights(std::span<const double> losses) {
  check_losses(losses);
  const double lo = *std::min_element(losses.begin(), losses.end());
  const auto ties = static_cast<double>(std::count(losses.begin(), losses.end(), lo));
  const double share = static_cast<double>(losses.size()) / ties;
  std::vector<double> w(losses.size(), 0.0);
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (losses[i] == lo) w[i] = share;
  }
  return w;
}

double g_kl(const DualParams& params, std::span<const double> losses,
            const DivergenceSpec& spec) {
  check_losses(losses);
  const double s = scale_of(params, spec);
  if (s == 0.0) return *std::min_element(losses.begin(), losses.end());
  const auto m = shifted_exponentials(losses, s);
  return -params.lambda * spec.delta + m.min_loss - s * std::log(std::max(m.mean_exp, kLogFloor));
}

double g_kl_dlambda(const DualParams& params, std::span<const double> losses,
                    const DivergenceSpec& spec) {
  check_losses(losses);
  const double s = scale_of(params, spec);
  if (s == 0.0) {
    const double lo = *std::min_element(losses.begin(), losses.end());
    const auto ties = static_cast<double>(std::count(losses.begin(), losses.end(), lo));
    return -spec.delta - std::log(ties / static_cast<double>(losses.size()));
  }
  const auto m = shifted_exponentials(losses, s);
  return -spec.delta - std::log(std::max(m.mean_exp, kLogFloor)) - m.mean_excess / s;
}

double g_f(const DualParams& params, std::span<const double> losses,
           const DivergenceSpec& spec) {
  require_alpha(spec, "g_f");
  check_losses(losses);
  const double s = scale_of(params, spec);
  if (s == 0.0) {
    const double lo = *std::min_element(losses.begin(), losses.end());
    return params.rho >= -lo ? -params.rho : -std::numeric_limits<double>::infinity();
  }
  const detail::AlphaKernel kernel(spec.family);
  double sum = 0.0;
  for (double l : losses) sum += kernel.conjugate(-(l + params.rho) / s);
  const auto n = static_cast<double>(losses.size());
  return -params.lambda * spec.delta - params.rho - s * sum / n;
}

double g_f_dlambda(const DualParams& params, std::span<const double> losses,
                   const DivergenceSpec& spec) {
  require_alpha(spec, "g_f_dlambda");
  check_losses(losses);
  const double s = scale_of(params, spec);
  if (!(s > 0.0)) throw std::invalid_argument("g_f_dlambda requires lambda + kappa > 0");
  // f*(t) - t f*'(t) = -f((f*)'(t)), so the derivative is mean f(w_i) - delta.
  const detail::AlphaKernel kernel(spec.family);
  double sum = 0.0;
  for (double l : losses) sum += kernel.f_of_weight(-(l + params.rho) / s);
  return -spec.delta + sum / static_cast<double>(losses.size());
}

double g_f_drho(const DualParams& params, std::span<const double> losses,
                const DivergenceSpec& spec) {
  require_alpha(spec, "g_f_drho");
  check_losses(losses);
  const double s = scale_of(params, spec);
  if (!(s > 0.0)) throw std::invalid_argument("g_f_drho requires lambda + kappa > 0");
  const detail::AlphaKernel kernel(spec.family);
  double sum = 0.0;
  for (double l : losses) sum += kernel.weight(-(l + params.rho) / s);
  return -1.0 + sum / static_cast<double>(losses.size());
}

std::vector<double> kl_weights(const DualParams& params, std::span<const double> losses,
                               const DivergenceSpec& spec) {
  check_losses(losses);
  const double s = scale_of(params, spec);
  if (s == 0.0) return tied_minimum_weights(losses);
  const double lo = *std::min_element(losses.begin(), losses.end());
  std::vector<double> w(losses.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    w[i] = std::exp(-(losses[i] - lo) / s);
    sum += w[i];
  }
  const double mean = sum / static_cast<double>(losses.size());
  for (double& x : w) x /= mean;
  return w;
}

std::vector<double> alpha_weights(const DualParams& params,
                                  std::span<const double> losses,
                                  const DivergenceSpec& spec) {
  require_alpha(spec, "alpha_weights");
  check_losses(losses);
  const double s = scale_of(params, spec);
  if (s == 0.0) return tied_minimum_weights(losses);
  const detail::AlphaKernel kernel(spec.family);
  std::vector<double> w(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) {
    w[i] = kernel.weight(-(losses[i] + params.rho) / s);
  }
  return w;
}

double dual_value(const DualParams& params, std::span<const double> losses,
                  const DivergenceSpec& spec) {
  return spec.family.is_kl() ? g_kl(params, losses, spec) : g_f(params, losses, spec);
}

std::vector<double> dual_weights(const DualParams& params, std::span<const double> losses,
                                 const DivergenceSpec& spec) {
  return spec.family.is_kl() ? kl_weights(params, losses, spec)
                             : alpha_weights(params, losses, spec);
}

}  // namespace antidote
