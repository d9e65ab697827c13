#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "rsea/error.hpp"
#include "rsea/special.hpp"

using namespace rsea;

namespace {

// Reference values from mpmath at 30 significant digits.
struct Row {
    double x, digamma, log_gamma, trigamma;
};
constexpr Row kTable[] = {
    {0.001, -1000.5755719318103005, 6.9071788853838536825, 1000001.642533195869},
    {0.1, -10.423754940411076795, 2.2527126517342059599, 101.43329915079275882},
    {0.5, -1.9635100260214234794, 0.57236494292470008707, 4.9348022005446793094},
    {1.0, -0.57721566490153286061, 0.0, 1.6449340668482264365},
    {1.5, 0.036489973978576520559, -0.12078223763524522235, 0.93480220054467930942},
    {2.0, 0.42278433509846713939, 0.0, 0.64493406684822643647},
    {3.7, 1.1671535393615113859, 1.4280723266653879219, 0.3100378576700383191},
    {9.99, 2.2507003728312010995, 12.77931521435019288, 0.10527695014824178675},
    {10.0, 2.2517525890667211076, 12.801827480081469611, 0.10516633568168574612},
    {25.5, 3.2189424728839197665, 56.389167643719946744, 0.039994669649562924037},
    {100.0, 4.6001618527380874002, 359.13420536957539878, 0.010050166663333571395},
    {12345.678, 9.4210208207417608869, 103959.91990554606092, 0.000081003287231112068383},
    {1e6, 13.815510057964190771, 12815504.56914761166, 1.0000005000001666667e-6},
};

}  // namespace

TEST_CASE("digamma, log_gamma and trigamma against a high-precision table") {
    for (const auto& r : kTable) {
        CAPTURE(r.x);
        CHECK(std::abs(digamma(r.x) - r.digamma) <= 1e-10);
        CHECK(std::abs(log_gamma(r.x) - r.log_gamma) <= std::max(1e-10, 1e-13 * std::abs(r.log_gamma)));
        CHECK(std::abs(trigamma(r.x) - r.trigamma) <= 1e-9 * r.trigamma);
    }
}

TEST_CASE("closed-form special values") {
    constexpr double gamma = 0.57721566490153286061;
    CHECK(std::abs(digamma(1.0) + gamma) <= 1e-10);
    CHECK(std::abs(digamma(2.0) - digamma(1.0) - 1.0) <= 1e-10);
    CHECK(std::abs(digamma(0.5) - (-gamma - 2.0 * std::numbers::ln2)) <= 1e-10);
    CHECK(std::abs(log_gamma(1.0)) <= 1e-12);
    CHECK(std::abs(log_gamma(5.0) - std::log(24.0)) <= 1e-12);
    CHECK(std::abs(log_gamma(0.5) - 0.5 * std::log(std::numbers::pi)) <= 1e-12);
}

TEST_CASE("digamma recurrence on 1000 random points") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> d(0.0, 100.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        double x = d(rng);
        if (x == 0.0) x = 1e-3;
        worst = std::max(worst, std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("trigamma is the derivative of digamma") {
    for (double x : {0.3, 1.0, 4.2, 11.0, 70.0}) {
        const double h = 1e-5 * x;
        const double fd = (digamma(x + h) - digamma(x - h)) / (2 * h);
        CHECK(fd == doctest::Approx(trigamma(x)).epsilon(1e-6));
    }
}

TEST_CASE("non-positive arguments are domain errors") {
    for (double x : {0.0, -1.0, -0.5}) {
        CHECK_THROWS_AS(digamma(x), DomainError);
        CHECK_THROWS_AS(log_gamma(x), DomainError);
        CHECK_THROWS_AS(trigamma(x), DomainError);
    }
    CHECK_THROWS_AS(digamma(std::nan("")), DomainError);
}
