#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "rsea/error.hpp"
#include "rsea/subjective_logic.hpp"

using namespace rsea;

namespace {

double belief_mass(const Opinion& o) {
    double s = o.uncertainty;
    for (double b : o.belief) s += b;
    return s;
}

}  // namespace

TEST_CASE("evidence to alpha") {
    auto d = evidence_to_alpha(std::vector<double>{0, 0});
    CHECK(d.alpha == std::vector<double>{1, 1});
    CHECK(d.strength == 2.0);
    d = evidence_to_alpha(std::vector<double>{2, 1, 0});
    CHECK(d.alpha == std::vector<double>{3, 2, 1});
    CHECK(d.strength == 6.0);
    d = evidence_to_alpha(std::vector<double>{10});
    CHECK(d.alpha == std::vector<double>{11});
    CHECK(d.strength == 11.0);
    CHECK_THROWS_AS(evidence_to_alpha(std::vector<double>{1, -0.1}), DomainError);
    CHECK_THROWS_AS(evidence_to_alpha(std::vector<double>{1, INFINITY}), DomainError);
}

TEST_CASE("alpha to opinion") {
    auto o = alpha_to_opinion(evidence_to_alpha(std::vector<double>{0, 0}));
    CHECK(o.belief == std::vector<double>{0, 0});
    CHECK(o.uncertainty == 1.0);

    o = evidence_to_opinion(std::vector<double>{3, 1});
    CHECK(o.belief[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(o.belief[1] == doctest::Approx(1.0 / 6).epsilon(1e-15));
    CHECK(o.uncertainty == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(std::abs(belief_mass(o) - 1.0) <= 1e-15);

    // S = 30 and e = [12, 3, 3] give b = [0.4, 0.1, 0.1] and u = K/S = 0.1; a 0.4 uncertainty
    // needs S = 7.5, e = [3, 0.75, 0.75].
    o = evidence_to_opinion(std::vector<double>{3, 0.75, 0.75});
    CHECK(o.belief[0] == doctest::Approx(0.4));
    CHECK(o.belief[1] == doctest::Approx(0.1));
    CHECK(o.uncertainty == doctest::Approx(0.4));
}

TEST_CASE("aggregation parameter is belief variance over uncertainty") {
    Opinion o{{0.4, 0.1, 0.1}, 0.4};
    CHECK(aggregation_param(o) == doctest::Approx(0.02 / 0.4));
    CHECK(aggregation_param(Opinion{{0.0, 0.0}, 1.0}) == 0.0);
}

TEST_CASE("mass conservation on 1000 random evidence vectors") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> k_dist(2, 10);
    std::exponential_distribution<double> e_dist(0.2);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> e(static_cast<std::size_t>(k_dist(rng)));
        for (auto& v : e) v = e_dist(rng);
        const auto d = evidence_to_alpha(e);
        const auto o = alpha_to_opinion(d);
        REQUIRE(std::abs(belief_mass(o) - 1.0) <= 1e-14);
        REQUIRE(o.uncertainty == static_cast<double>(e.size()) / d.strength);
        for (double b : o.belief) REQUIRE(b >= 0.0);
    }
}

TEST_CASE("scaling evidence up strictly lowers uncertainty") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> e{u(rng), u(rng), u(rng)};
        std::vector<double> scaled = e;
        for (auto& v : scaled) v *= 1.5;
        CHECK(evidence_to_opinion(scaled).uncertainty < evidence_to_opinion(e).uncertainty);
    }
}

TEST_CASE("dirichlet log density") {
    const auto d11 = evidence_to_alpha(std::vector<double>{0, 0});
    CHECK(std::abs(dirichlet_log_pdf(d11, std::vector<double>{0.5, 0.5})) <= 1e-12);
    const auto d21 = evidence_to_alpha(std::vector<double>{1, 0});
    CHECK(std::abs(dirichlet_log_pdf(d21, std::vector<double>{0.5, 0.5})) <= 1e-12);
    const auto d111 = evidence_to_alpha(std::vector<double>{0, 0, 0});
    CHECK(dirichlet_log_pdf(d111, std::vector<double>{0.2, 0.3, 0.5}) == doctest::Approx(std::log(2.0)));
    CHECK(dirichlet_log_pdf(d111, std::vector<double>{0.9, 0.05, 0.05}) == doctest::Approx(std::log(2.0)));

    CHECK_THROWS_AS(dirichlet_log_pdf(d11, std::vector<double>{0.5, 0.6}), DomainError);
    CHECK_THROWS_AS(dirichlet_log_pdf(d11, std::vector<double>{1.0, 0.0}), DomainError);
    CHECK_THROWS_AS(dirichlet_log_pdf(d11, std::vector<double>{0.2, 0.3, 0.5}), DomainError);
}

TEST_CASE("two-class density integrates to one") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> e_dist(0.0, 5.0);
    const int n = 20000;
    for (int t = 0; t < 10; ++t) {
        const auto d = evidence_to_alpha(std::vector<double>{e_dist(rng), e_dist(rng)});
        double integral = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = (i + 0.5) / n;
            integral += std::exp(dirichlet_log_pdf(d, std::vector<double>{x, 1.0 - x})) / n;
        }
        CAPTURE(d.alpha[0]);
        CAPTURE(d.alpha[1]);
        CHECK(std::abs(integral - 1.0) <= 1e-4);
    }
}
