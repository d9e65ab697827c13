#include "rsea/special.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rsea/error.hpp"

namespace rsea {
namespace {

constexpr double kAsymptoticThreshold = 10.0;

void require_positive(const char* fn, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError(std::string(fn) + ": argument must be positive and finite, got " + std::to_string(x));
    }
}

}  // namespace

double digamma(double x) {
    require_positive("digamma", x);
    double shift = 0.0;
    while (x < kAsymptoticThreshold) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    // psi(x) ~ ln x - 1/(2x) - sum B_2n / (2n x^2n)
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv2 * (1.0 / 12 -
                inv2 * (1.0 / 120 -
                        inv2 * (1.0 / 252 -
                                inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12.0))))));
    return shift + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
    require_positive("trigamma", x);
    double shift = 0.0;
    while (x < kAsymptoticThreshold) {
        shift += 1.0 / (x * x);
        x += 1.0;
    }
    // psi'(x) ~ 1/x + 1/(2x^2) + sum B_2n / x^(2n+1)
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv * inv2 *
        (1.0 / 6 - inv2 * (1.0 / 30 - inv2 * (1.0 / 42 - inv2 * (1.0 / 30 - inv2 * (5.0 / 66 - inv2 * 691.0 / 2730)))));
    return shift + inv + 0.5 * inv2 + series;
}

double log_gamma(double x) {
    require_positive("log_gamma", x);
    // ln Gamma(x) = ln Gamma(x + n) - ln(x (x+1) ... (x+n-1))
    double product = 1.0;
    while (x < kAsymptoticThreshold) {
        product *= x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv * (1.0 / 12 -
               inv2 * (1.0 / 360 -
                       inv2 * (1.0 / 1260 - inv2 * (1.0 / 1680 - inv2 * (1.0 / 1188 - inv2 * (691.0 / 360360))))));
    const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
    return (x - 0.5) * std::log(x) - x + half_log_two_pi + series - std::log(product);
}

}  // namespace rsea
