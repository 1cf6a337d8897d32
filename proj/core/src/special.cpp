#include "daedl/special.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace daedl {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2*pi)/2

void require_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error(std::string(fn) + ": argument must be positive and finite, got " +
                            std::to_string(x));
  }
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  // Shift into the asymptotic regime, then apply the Stirling series.
  double shift = 0.0;
  while (x < 10.0) {
    shift -= std::log(x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli coefficients B_{2k} / (2k(2k-1)).
  double series = inv *
      (1.0 / 12.0 +
       inv2 * (-1.0 / 360.0 +
       inv2 * (1.0 / 1260.0 +
       inv2 * (-1.0 / 1680.0 +
       inv2 * (1.0 / 1188.0 +
       inv2 * (-691.0 / 360360.0))))));
  return (x - 0.5) * std::log(x) - x + kHalfLog2Pi + series + shift;
}

double digamma(double x) {
  require_positive(x, "digamma");
  // psi(x) = psi(x+1) - 1/x below the asymptotic threshold.
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // psi(x) ~ log x - 1/(2x) - sum B_{2k} / (2k x^{2k}).
  double series = inv2 *
      (1.0 / 12.0 +
       inv2 * (-1.0 / 120.0 +
       inv2 * (1.0 / 252.0 +
       inv2 * (-1.0 / 240.0 +
       inv2 * (1.0 / 132.0 +
       inv2 * (-691.0 / 32760.0))))));
  return std::log(x) - 0.5 * inv - series + acc;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  // psi'(x) = psi'(x+1) + 1/x^2 below the asymptotic threshold.
  double acc = 0.0;
  while (x < 10.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // psi'(x) ~ 1/x + 1/(2x^2) + sum B_{2k} / x^{2k+1}.
  double series = inv * inv2 *
      (1.0 / 6.0 +
       inv2 * (-1.0 / 30.0 +
       inv2 * (1.0 / 42.0 +
       inv2 * (-1.0 / 30.0 +
       inv2 * (5.0 / 66.0 +
       inv2 * (-691.0 / 2730.0))))));
  return inv + 0.5 * inv2 + series + acc;
}

}  // namespace daedl
