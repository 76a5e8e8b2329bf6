#pragma once

#include "moira/rng.hpp"
#include "moira/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace moira {

using NodeId = std::int32_t;

// Reverse-mode autodiff tape over Tensor2. Nodes are recorded in creation
// order, which is a topological order by construction (an op can only
// reference ids that already exist). Values are immutable once recorded.
// backward(root) fills per-node gradients by reverse accumulation.
//
// The op set is intentionally closed: exactly what the encoders, gated
// aggregation, predictor and loss terms require.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    NodeId leaf(Tensor2 value, std::string name = {});

    NodeId matmul(NodeId a, NodeId b);
    // a * b^T; b given row-major as n x k
    NodeId matmul_nt(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b); // elementwise
    NodeId scale(NodeId a, double s);
    // a: n x c, b: 1 x c broadcast over rows
    NodeId add_rowvec(NodeId a, NodeId b);
    // a: n x c, colv: n x 1 broadcast over columns
    NodeId mul_colvec(NodeId a, NodeId colv);
    // single column j as n x 1
    NodeId col(NodeId a, std::size_t j);
    NodeId concat_cols(const std::vector<NodeId>& parts);
    NodeId gather_rows(NodeId a, std::vector<std::size_t> idx);
    // inverse of gather: rows placed at idx (strictly increasing), rest zero
    NodeId scatter_rows(NodeId a, std::vector<std::size_t> idx, std::size_t n_rows);

    NodeId leaky_relu(NodeId a, double slope);
    // Inverted dropout: survivors scaled by 1/(1-p) so eval needs no rescale.
    // Identity (same node id) when training is off or p == 0.
    NodeId dropout(NodeId a, double p, bool training, Rng& rng);

    NodeId row_softmax(NodeId a);
    // mask: row-major flags matching a's shape; entries with mask == 0 are
    // excluded from the softmax support and output exactly 0
    NodeId row_softmax_masked(NodeId a, const std::vector<std::uint8_t>& mask);
    // rows divided by max(l2_norm, 1e-8)
    NodeId row_l2_normalize(NodeId a);

    NodeId sum_all(NodeId a);
    NodeId mean_all(NodeId a);
    // mean (or sum) over rows of -log(max(p[i, label[i]], 1e-12))
    NodeId nll(NodeId probs, const std::vector<int>& labels, bool mean);
    NodeId pick(NodeId a, std::size_t i, std::size_t j);

    void backward(NodeId root);

    const Tensor2& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    // Valid after backward(); untouched nodes read as zeros.
    const Tensor2& grad(NodeId id);

    std::size_t n_nodes() const { return nodes_.size(); }
    void clear();

private:
    struct Node {
        Tensor2 value;
        std::function<void(Tape&)> back; // empty for leaves
        std::string name;
    };

    NodeId record(Tensor2 value, std::function<void(Tape&)> back, const char* op);
    Tensor2& grad_buf(NodeId id);
    const Tensor2& val(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    void check_id(NodeId id) const;

    std::vector<Node> nodes_;
    std::vector<Tensor2> grads_;
    std::vector<std::uint8_t> touched_;
    bool has_grads_ = false;
};

} // namespace moira
