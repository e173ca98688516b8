#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace antidote {

enum class FamilyKind { kl, alpha };

// Generator family of an f-divergence: f_KL(t) = t log t, or
// f_alpha(t) = (t^alpha - 1) / (alpha (alpha - 1)) with alpha > 1.
class FFamily {
 public:
  static FFamily kl() { return FFamily(FamilyKind::kl, 1.0); }
  static FFamily alpha(double exponent);

  FamilyKind kind() const { return kind_; }
  bool is_kl() const { return kind_ == FamilyKind::kl; }
  // Only meaningful for the alpha family.
  double exponent() const { return exponent_; }

  // "kl", or "alpha:<exponent>".
  std::string name() const;
  static FFamily parse(const std::string& name);

  friend bool operator==(const FFamily&, const FFamily&) = default;

 private:
  FFamily(FamilyKind kind, double exponent) : kind_(kind), exponent_(exponent) {}

  FamilyKind kind_;
  double exponent_;
};

// Neighborhood description shared by the dual objectives and the solvers.
struct DivergenceSpec {
  FFamily family = FFamily::kl();
  double delta = 0.0;   // neighborhood radius
  double kappa = 0.05;  // soft-constraint penalty
  std::optional<double> penalty_strength;  // C of the adaptive-radius penalty

  friend bool operator==(const DivergenceSpec&, const DivergenceSpec&) = default;
};

/// f(t) for t >= 0, continuously extended at t = 0. Throws std::domain_error
/// for negative t.
double f_value(const FFamily& family, double t);

/// f'(t) for t > 0.
double f_derivative(const FFamily& family, double t);

/// Legendre transform f*(y) = sup_{x > 0} { y x - f(x) }, finite for all y.
double f_conjugate(const FFamily& family, double y);

/// (f*)'(y). For the alpha family this is zero on y <= 0.
double f_conjugate_derivative(const FFamily& family, double y);

// Probability vector over sample indices.
class DiscreteDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  // Throws std::invalid_argument when an entry is negative or non-finite, or
  // when the entries do not sum to one within kSumTolerance.
  explicit DiscreteDistribution(std::vector<double> weights);

  static DiscreteDistribution uniform(std::size_t n);

  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }

 private:
  std::vector<double> weights_;
};

/// D_f(q || p) = sum_i p_i f(q_i / p_i). Returns +infinity when q is not
/// absolutely continuous with respect to p.
double divergence(const FFamily& family, const DiscreteDistribution& q,
                  const DiscreteDistribution& p);

/// Neighborhood radius whose ball admits forgetting at most a fraction
/// r_max of the samples: delta = r f(0) + (1 - r) f(1 / (1 - r)).
double delta_from_rmax(const FFamily& family, double r_max);

}  // namespace antidote
