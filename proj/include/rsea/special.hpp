#pragma once

namespace rsea {

/// psi(x) for x > 0. Upward recurrence to x >= 10, then the asymptotic series.
double digamma(double x);

/// psi'(x) for x > 0; adjoint of digamma.
double trigamma(double x);

/// ln Gamma(x) for x > 0. Same recurrence-plus-Stirling scheme as digamma.
double log_gamma(double x);

}  // namespace rsea
