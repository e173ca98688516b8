#include "antidote/divergences.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace antidote {

FFamily FFamily::alpha(double exponent) {
  if (!(exponent > 1.0) || !std::isfinite(exponent)) {
    throw std::invalid_argument("alpha-divergence exponent must be finite and > 1");
  }
  return FFamily(FamilyKind::alpha, exponent);
}

std::string FFamily::name() const {
  if (is_kl()) return "kl";
  std::ostringstream out;
  out << "alpha:" << exponent_;
  return out.str();
}

FFamily FFamily::parse(const std::string& name) {
  if (name == "kl" || name == "KL") return kl();
  const std::string prefix = "alpha";
  if (name.rfind(prefix, 0) == 0) {
    if (name.size() == prefix.size()) return alpha(2.0);
    std::size_t offset = prefix.size();
    if (name[offset] == ':' || name[offset] == '=') ++offset;
    std::size_t used = 0;
    const double exponent = std::stod(name.substr(offset), &used);
    if (offset + used != name.size()) {
      throw std::invalid_argument("bad divergence family: " + name);
    }
    return alpha(exponent);
  }
  throw std::invalid_argument("unknown divergence family: " + name);
}

double f_value(const FFamily& family, double t) {
  if (!(t >= 0.0)) throw std::domain_error("f_value: argument must be >= 0");
  if (family.is_kl()) {
    return t == 0.0 ? 0.0 : t * std::log(t);
  }
  const double a = family.exponent();
  return (std::pow(t, a) - 1.0) / (a * (a - 1.0));
}

double f_derivative(const FFamily& family, double t) {
  if (!(t > 0.0)) throw std::domain_error("f_derivative: argument must be > 0");
  if (family.is_kl()) return std::log(t) + 1.0;
  const double a = family.exponent();
  return std::pow(t, a - 1.0) / (a - 1.0);
}

double f_conjugate(const FFamily& family, double y) {
  if (family.is_kl()) return std::exp(y - 1.0);
  const double a = family.exponent();
  const double floor = 1.0 / (a * (a - 1.0));
  if (y <= 0.0) return floor;
  const double p = a / (a - 1.0);
  return std::pow(a - 1.0, p) * std::pow(y, p) / a + floor;
}

double f_conjugate_derivative(const FFamily& family, double y) {
  if (family.is_kl()) return std::exp(y - 1.0);
  if (y <= 0.0) return 0.0;
  const double a = family.exponent();
  return std::pow((a - 1.0) * y, 1.0 / (a - 1.0));
}

DiscreteDistribution::DiscreteDistribution(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw std::invalid_argument("distribution must be non-empty");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("distribution entries must be finite and >= 0");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw std::invalid_argument("distribution entries must sum to 1");
  }
}

DiscreteDistribution DiscreteDistribution::uniform(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform distribution needs n >= 1");
  return DiscreteDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

double divergence(const FFamily& family, const DiscreteDistribution& q,
                  const DiscreteDistribution& p) {
  if (q.size() != p.size()) {
    throw std::invalid_argument("divergence: distributions differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (p[i] == 0.0) {
      if (q[i] > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    total += p[i] * f_value(family, q[i] / p[i]);
  }
  // Rounding can push an exact zero slightly negative.
  return total < 0.0 && total > -1e-15 ? 0.0 : total;
}

double delta_from_rmax(const FFamily& family, double r_max) {
  if (!(r_max >= 0.0) || !(r_max < 1.0)) {
    throw std::domain_error("delta_from_rmax: r_max must lie in [0, 1)");
  }
  const double kept = 1.0 - r_max;
  return r_max * f_value(family, 0.0) + kept * f_value(family, 1.0 / kept);
}

}  // namespace antidote
