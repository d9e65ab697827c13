#include "rsea/enhancement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rsea/error.hpp"

namespace rsea {

std::size_t PriorityState::next_node() const {
    std::size_t best = phi.size();
    for (std::size_t k = 0; k < phi.size(); ++k) {
        if (enhanced[k]) continue;
        if (best == phi.size() || phi[k] > phi[best]) best = k;
    }
    return best;
}

std::size_t PriorityState::num_enhanced() const {
    return static_cast<std::size_t>(std::count(enhanced.begin(), enhanced.end(), true));
}

std::vector<double> degree_centrality(const Tensor& adjacency) {
    if (adjacency.rank() != 2 || adjacency.shape()[0] != adjacency.shape()[1]) {
        throw ShapeError("degree_centrality", shape_str(adjacency.shape()), "square matrix");
    }
    const std::size_t n = adjacency.rows();
    std::vector<double> delta(n, 0.0);
    if (n <= 1) return delta;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t degree = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (adjacency(i, j) > 0.0) ++degree;
        delta[i] = static_cast<double>(degree) / static_cast<double>(n - 1);
    }
    return delta;
}

std::vector<double> feature_variance(const Tensor& features) {
    const std::size_t n = features.rows(), d = features.cols();
    if (d == 0) throw ShapeError("feature_variance", shape_str(features.shape()), "D >= 1");
    std::vector<double> theta(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Shifting by the first entry keeps constant rows at exactly zero.
        const double shift = features(i, 0);
        double mean = 0.0;
        for (std::size_t c = 0; c < d; ++c) mean += features(i, c) - shift;
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double dev = features(i, c) - shift - mean;
            var += dev * dev;
        }
        theta[i] = var / static_cast<double>(d);
    }
    return theta;
}

PriorityState priority_vector(const Tensor& adjacency, const Tensor& features) {
    PriorityState s;
    s.delta = degree_centrality(adjacency);
    s.theta = feature_variance(features);
    if (s.delta.size() != s.theta.size()) {
        throw ShapeError("priority_vector", shape_str(adjacency.shape()), shape_str(features.shape()));
    }
    s.phi.resize(s.delta.size());
    for (std::size_t k = 0; k < s.phi.size(); ++k) s.phi[k] = s.delta[k] + s.theta[k];
    s.enhanced.assign(s.phi.size(), false);
    return s;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

Tensor enhance_node(const Tensor& adjacency, std::size_t node, double a_max, bool symmetric) {
    const std::size_t n = adjacency.rows();
    if (node >= n) throw DomainError("enhance_node: node " + std::to_string(node) + " out of range for N=" + std::to_string(n));
    Tensor out = adjacency;
    for (std::size_t j = 0; j < n; ++j) {
        if (out(node, j) > 0.0) out(node, j) = a_max;
        if (symmetric && out(j, node) > 0.0) out(j, node) = a_max;
    }
    return out;
}

PriorityState decorrelate(PriorityState state, const Tensor& features, std::size_t node) {
    const std::size_t n = features.rows(), d = features.cols();
    if (node >= n) throw DomainError("decorrelate: node out of range");
    const std::span<const double> all = features.values();
    const auto target = all.subspan(node * d, d);
    for (std::size_t k = 0; k < n; ++k) {
        state.phi[k] *= 1.0 - cosine_similarity(all.subspan(k * d, d), target);
    }
    state.enhanced[node] = true;
    return state;
}

std::size_t batch_size_for(std::size_t num_nodes) {
    const auto t = static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(num_nodes) + 0.5));
    return std::max<std::size_t>(1, t);
}

EnhancementOutcome reliable_enhance(const GraphView& view, const UncertaintyProbe& probe) {
    const Tensor& a = view.adjacency;
    if (a.rank() != 2 || a.shape()[0] == 0) throw DomainError("reliable_enhance: view has no nodes");
    const std::size_t n = a.rows();

    EnhancementOutcome out;
    out.enhanced_adjacency = a;
    out.batch_size = batch_size_for(n);
    out.symmetric = view.symmetric();

    // max(A) is taken from the original adjacency once.
    const double a_max = *std::max_element(a.values().begin(), a.values().end());
    PriorityState state = priority_vector(a, view.features);
    double accepted = std::numeric_limits<double>::infinity();

    while (true) {
        const double u = probe(out.enhanced_adjacency);
        ++out.iterations;
        if (std::isnan(u)) throw DomainError("reliable_enhance: probe returned NaN at iteration " + std::to_string(out.iterations));
        if (!(u <= accepted)) break;
        accepted = u;
        out.uncertainty_trace.push_back(u);
        for (std::size_t step = 0; step < out.batch_size; ++step) {
            const std::size_t ind = state.next_node();
            if (ind == n) break;
            out.enhanced_adjacency = enhance_node(out.enhanced_adjacency, ind, a_max, out.symmetric);
            state = decorrelate(std::move(state), view.features, ind);
            out.order.push_back(ind);
        }
        out.total_enhanced = out.order.size();
        if (out.total_enhanced == n) break;
    }
    return out;
}

}  // namespace rsea
