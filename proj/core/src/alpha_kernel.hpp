#pragma once

#include <cmath>

#include "antidote/divergences.hpp"

namespace antidote::detail {

// Fast path for the alpha family. With x = (alpha - 1) t_+ and
// w = x^{1/(alpha-1)} = (f*)'(t):
//   f*(t) = x w / alpha + 1 / (alpha (alpha - 1))
//   f(w)  = (x w - 1) / (alpha (alpha - 1))
// alpha = 2 and alpha = 3 avoid pow entirely.
class AlphaKernel {
 public:
  explicit AlphaKernel(const FFamily& family)
      : a_(family.exponent()),
        inverse_(1.0 / (a_ - 1.0)),
        floor_(1.0 / (a_ * (a_ - 1.0))) {}

  double weight(double t) const {
    if (t <= 0.0) return 0.0;
    const double x = (a_ - 1.0) * t;
    if (a_ == 2.0) return x;
    if (a_ == 3.0) return std::sqrt(x);
    return std::pow(x, inverse_);
  }

  double conjugate(double t) const {
    if (t <= 0.0) return floor_;
    return (a_ - 1.0) * t * weight(t) / a_ + floor_;
  }

  // f evaluated at the weight produced by t.
  double f_of_weight(double t) const {
    if (t <= 0.0) return -floor_;
    return ((a_ - 1.0) * t * weight(t) - 1.0) * floor_;
  }

  double exponent() const { return a_; }

 private:
  double a_;
  double inverse_;
  double floor_;
};

}  // namespace antidote::detail
