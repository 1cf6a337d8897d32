#pragma once

namespace daedl {

/// Natural log of the gamma function for x > 0.
/// Stirling series above x = 10, downward recurrence below.
/// Absolute accuracy better than 1e-10 on [1e-3, 1e4].
double log_gamma(double x);

/// Digamma function psi(x) = d/dx log Gamma(x) for x > 0.
double digamma(double x);

/// Trigamma function psi'(x) for x > 0.
double trigamma(double x);

}  // namespace daedl
