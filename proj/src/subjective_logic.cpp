#include "rsea/subjective_logic.hpp"

#include <cmath>
#include <string>

#include "rsea/error.hpp"
#include "rsea/special.hpp"

namespace rsea {

DirichletParams evidence_to_alpha(std::span<const double> evidence) {
    if (evidence.empty()) throw DomainError("evidence_to_alpha: empty evidence");
    DirichletParams d;
    d.alpha.reserve(evidence.size());
    for (std::size_t k = 0; k < evidence.size(); ++k) {
        const double e = evidence[k];
        if (!std::isfinite(e) || e < 0.0) {
            throw DomainError("evidence_to_alpha: evidence[" + std::to_string(k) + "] = " + std::to_string(e));
        }
        d.alpha.push_back(e + 1.0);
        d.strength += e + 1.0;
    }
    return d;
}

Opinion alpha_to_opinion(const DirichletParams& d) {
    if (d.alpha.empty()) throw DomainError("alpha_to_opinion: empty alpha");
    for (double a : d.alpha) {
        if (!(a >= 1.0) || !std::isfinite(a)) throw DomainError("alpha_to_opinion: alpha entries must be >= 1");
    }
    Opinion op;
    op.belief.reserve(d.alpha.size());
    for (double a : d.alpha) op.belief.push_back((a - 1.0) / d.strength);
    op.uncertainty = static_cast<double>(d.alpha.size()) / d.strength;
    return op;
}

double dirichlet_log_pdf(const DirichletParams& d, std::span<const double> p) {
    if (p.size() != d.alpha.size()) throw DomainError("dirichlet_log_pdf: dimension mismatch");
    double total = 0.0;
    for (double pk : p) {
        if (!(pk > 0.0)) throw DomainError("dirichlet_log_pdf: point outside the open simplex");
        total += pk;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("dirichlet_log_pdf: point does not sum to one");

    double log_beta = -log_gamma(d.strength);
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        log_beta += log_gamma(d.alpha[k]);
        acc += (d.alpha[k] - 1.0) * std::log(p[k]);
    }
    return acc - log_beta;
}

double aggregation_param(const Opinion& op) {
    if (!(op.uncertainty > 0.0)) throw DomainError("aggregation_param: uncertainty must be positive");
    const auto k = static_cast<double>(op.belief.size());
    double mean = 0.0;
    for (double b : op.belief) mean += b;
    mean /= k;
    double var = 0.0;
    for (double b : op.belief) var += (b - mean) * (b - mean);
    return (var / k) / op.uncertainty;
}

}  // namespace rsea
