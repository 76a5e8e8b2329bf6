#pragma once

// Central finite-difference oracle for tape gradients. The graph builder is
// re-run per perturbation, so stochastic ops must be made deterministic by
// the builder itself (fixed-seed rng per invocation).

#include "moira/tape.hpp"
#include "moira/tensor.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace gradcheck {

using BuildFn =
    std::function<moira::NodeId(moira::Tape&, const std::vector<moira::NodeId>&)>;

// |a - b| relative to the larger magnitude, floored so that finite-difference
// noise on near-zero gradients is judged absolutely (at ~1e-8 for tol 1e-5).
inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

inline double eval(const BuildFn& build, const std::vector<moira::Tensor2>& leaves) {
    moira::Tape tape;
    std::vector<moira::NodeId> ids;
    ids.reserve(leaves.size());
    for (const auto& t : leaves) ids.push_back(tape.leaf(t));
    moira::NodeId root = build(tape, ids);
    return tape.value(root).values[0];
}

// Returns the max rel_err between tape gradients and central differences
// over every element of every leaf.
inline double max_rel_err(const BuildFn& build, const std::vector<moira::Tensor2>& leaves,
                          double h = 1e-5) {
    moira::Tape tape;
    std::vector<moira::NodeId> ids;
    for (const auto& t : leaves) ids.push_back(tape.leaf(t));
    moira::NodeId root = build(tape, ids);
    tape.backward(root);

    double worst = 0.0;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        const moira::Tensor2& analytic = tape.grad(ids[li]);
        for (std::size_t e = 0; e < leaves[li].size(); ++e) {
            std::vector<moira::Tensor2> plus = leaves;
            std::vector<moira::Tensor2> minus = leaves;
            plus[li].values[e] += h;
            minus[li].values[e] -= h;
            const double fd = (eval(build, plus) - eval(build, minus)) / (2.0 * h);
            worst = std::max(worst, rel_err(analytic.values[e], fd));
        }
    }
    return worst;
}

} // namespace gradcheck
