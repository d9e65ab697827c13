#pragma once

#include <span>
#include <vector>

namespace rsea {

struct DirichletParams {
    std::vector<double> alpha;
    double strength = 0.0;  // S = sum(alpha)

    std::size_t num_classes() const noexcept { return alpha.size(); }
};

/// Belief masses plus uncertainty; sum(belief) + uncertainty == 1.
struct Opinion {
    std::vector<double> belief;
    double uncertainty = 1.0;
};

/// alpha = e + 1. Throws DomainError on negative or non-finite evidence.
DirichletParams evidence_to_alpha(std::span<const double> evidence);

/// b_k = (alpha_k - 1) / S, u = K / S.
Opinion alpha_to_opinion(const DirichletParams& d);

inline Opinion evidence_to_opinion(std::span<const double> evidence) {
    return alpha_to_opinion(evidence_to_alpha(evidence));
}

/// ln Dir(p | alpha) for p in the open simplex.
double dirichlet_log_pdf(const DirichletParams& d, std::span<const double> p);

/// Population variance of the belief vector over the uncertainty mass.
double aggregation_param(const Opinion& op);

}  // namespace rsea
