#pragma once

// Shared test fixtures: a hand-traced enhancement scenario and small builders.

#include <cstddef>
#include <random>
#include <vector>

#include "rsea/enhancement.hpp"
#include "rsea/graph_data.hpp"
#include "rsea/tensor.hpp"

namespace rsea::test {

/// N=20 threshold graph: k ~ j iff k + j <= 19, so degree falls with the index.
/// Edge weights 0.5 except (5,6) = 1.0, the global maximum. Features in D=3:
/// nodes 0,1 = e0, node 2 = e1, node 3 = e2, the rest = e1 + e2. Every row has
/// the same variance (2/9), so centrality and de-correlation alone set the order.
///
/// Traced by hand with a probe scripted to 0.9, 0.8, 0.7, 0.6, 0.65:
///   call 1 (nothing enhanced) 0.9 <= inf  accept -> enhance node 0; node 1 (same features) drops to 0
///   call 2 (0)                0.8 <= 0.9  accept -> node 2; nodes >= 4 scaled by 1 - 1/sqrt(2)
///   call 3 (0,2)              0.7 <= 0.8  accept -> node 3 beats node 4; nodes >= 4 scaled again
///   call 4 (0,2,3)            0.6 <= 0.7  accept -> node 4 (node 1 sits at 0)
///   call 5 (0,2,3,4)          0.65 > 0.6  reject -> stop, keep the current adjacency
/// Outcome: trace [0.9, 0.8, 0.7, 0.6], R = 4, 5 probe calls, order [0, 2, 3, 4].
struct HandTrace {
    GraphView view;
    std::vector<double> script{0.9, 0.8, 0.7, 0.6, 0.65};
    std::vector<double> expected_trace{0.9, 0.8, 0.7, 0.6};
    std::size_t expected_r = 4;
    std::size_t expected_iterations = 5;
    std::vector<std::size_t> expected_order{0, 2, 3, 4};
    /// Nodes already enhanced when probe call k (0-based) runs.
    std::vector<std::vector<std::size_t>> enhanced_before_call{{}, {0}, {0, 2}, {0, 2, 3}, {0, 2, 3, 4}};
    double a_max = 1.0;

    HandTrace() {
        const std::size_t n = 20;
        Tensor a(Shape{n, n});
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j)
                if (k != j && k + j <= 19) a(k, j) = 0.5;
        a(5, 6) = a(6, 5) = 1.0;
        Tensor f(Shape{n, 3});
        for (std::size_t k = 0; k < n; ++k) {
            if (k <= 1) {
                f(k, 0) = 1.0;
            } else if (k == 2) {
                f(k, 1) = 1.0;
            } else if (k == 3) {
                f(k, 2) = 1.0;
            } else {
                f(k, 1) = f(k, 2) = 1.0;
            }
        }
        view = GraphView{a, f};
    }

    /// The original adjacency with the positive entries of the given rows/columns set to a_max.
    Tensor expected_adjacency(const std::vector<std::size_t>& nodes) const {
        Tensor a = view.adjacency;
        const std::size_t n = a.rows();
        for (std::size_t node : nodes) {
            for (std::size_t j = 0; j < n; ++j) {
                if (a(node, j) > 0.0) a(node, j) = a_max;
                if (a(j, node) > 0.0) a(j, node) = a_max;
            }
        }
        return a;
    }
};

/// Random symmetric weighted graph with zero diagonal and Gaussian features.
inline GraphView random_view(std::size_t n, std::size_t d, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor a(Shape{n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (unit(rng) < density) a(i, j) = a(j, i) = 0.05 + unit(rng);
    Tensor f(Shape{n, d});
    for (auto& v : f.values()) v = normal(rng);
    return GraphView{a, f};
}

}  // namespace rsea::test
