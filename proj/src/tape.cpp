#include "moira/tape.hpp"

#include "moira/common.hpp"
#include "moira/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace moira {

namespace {
constexpr double kLogClamp = 1e-12;
constexpr double kNormFloor = 1e-8;
} // namespace

void Tape::check_id(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        fail_runtime("tape: node id %d out of range (%zu nodes)", id, nodes_.size());
}

NodeId Tape::record(Tensor2 value, std::function<void(Tape&)> back, const char* op) {
    if (!value.all_finite())
        fail_runtime("tape: op '%s' produced a non-finite value", op);
    nodes_.push_back(Node{std::move(value), std::move(back), op});
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::leaf(Tensor2 value, std::string name) {
    if (!value.all_finite())
        fail_runtime("tape: leaf '%s' holds a non-finite value", name.c_str());
    nodes_.push_back(Node{std::move(value), {}, std::move(name)});
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tensor2& Tape::grad_buf(NodeId id) {
    auto k = static_cast<std::size_t>(id);
    if (grads_[k].size() == 0 && val(id).size() != 0) {
        grads_[k] = Tensor2(val(id).rows, val(id).cols);
    }
    touched_[k] = 1;
    return grads_[k];
}

const Tensor2& Tape::grad(NodeId id) {
    check_id(id);
    if (!has_grads_) fail_runtime("tape: grad() before backward()");
    return grad_buf(id);
}

void Tape::clear() {
    nodes_.clear();
    grads_.clear();
    touched_.clear();
    has_grads_ = false;
}

void Tape::backward(NodeId root) {
    check_id(root);
    const Tensor2& rv = val(root);
    if (rv.rows != 1 || rv.cols != 1)
        fail_runtime("backward: root must be 1x1, got %zux%zu", rv.rows, rv.cols);
    grads_.assign(nodes_.size(), Tensor2());
    touched_.assign(nodes_.size(), 0);
    has_grads_ = true;
    grad_buf(root).values[0] = 1.0;
    for (NodeId k = root; k >= 0; --k) {
        auto ki = static_cast<std::size_t>(k);
        if (touched_[ki] && nodes_[ki].back) nodes_[ki].back(*this);
    }
}

// ---------------------------------------------------------------------------
// ops
// ---------------------------------------------------------------------------

NodeId Tape::matmul(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor2& av = val(a);
    const Tensor2& bv = val(b);
    if (av.cols != bv.rows)
        fail_runtime("matmul: shape mismatch %zux%zu * %zux%zu", av.rows, av.cols, bv.rows,
                     bv.cols);
    Tensor2 out(av.rows, bv.cols);
    kernels::active().gemm_nn_acc(out.data(), av.data(), bv.data(), av.rows, av.cols, bv.cols);
    NodeId id = record(std::move(out), {}, "matmul");
    nodes_.back().back = [a, b, id](Tape& t) {
        const Tensor2& A = t.val(a);
        const Tensor2& B = t.val(b);
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        Tensor2 bt = transposed(B);
        kernels::active().gemm_nn_acc(t.grad_buf(a).data(), dC.data(), bt.data(), dC.rows,
                                      dC.cols, bt.cols);
        Tensor2 at = transposed(A);
        kernels::active().gemm_nn_acc(t.grad_buf(b).data(), at.data(), dC.data(), at.rows,
                                      at.cols, dC.cols);
    };
    return id;
}

NodeId Tape::matmul_nt(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor2& av = val(a);
    const Tensor2& bv = val(b);
    if (av.cols != bv.cols)
        fail_runtime("matmul_nt: shape mismatch %zux%zu * (%zux%zu)^T", av.rows, av.cols,
                     bv.rows, bv.cols);
    Tensor2 bt = transposed(bv);
    Tensor2 out(av.rows, bv.rows);
    kernels::active().gemm_nn_acc(out.data(), av.data(), bt.data(), av.rows, av.cols, bv.rows);
    NodeId id = record(std::move(out), {}, "matmul_nt");
    nodes_.back().back = [a, b, id](Tape& t) {
        const Tensor2& A = t.val(a);
        const Tensor2& B = t.val(b);
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        // dA += dC * B ; dB += dC^T * A
        kernels::active().gemm_nn_acc(t.grad_buf(a).data(), dC.data(), B.data(), dC.rows,
                                      dC.cols, B.cols);
        Tensor2 dct = transposed(dC);
        kernels::active().gemm_nn_acc(t.grad_buf(b).data(), dct.data(), A.data(), dct.rows,
                                      dct.cols, A.cols);
    };
    return id;
}

NodeId Tape::add(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor2& av = val(a);
    const Tensor2& bv = val(b);
    if (!av.same_shape(bv))
        fail_runtime("add: shape mismatch %zux%zu vs %zux%zu", av.rows, av.cols, bv.rows,
                     bv.cols);
    Tensor2 out(av.rows, av.cols);
    kernels::active().add(out.data(), av.data(), bv.data(), av.size());
    NodeId id = record(std::move(out), {}, "add");
    nodes_.back().back = [a, b, id](Tape& t) {
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        kernels::active().axpy(t.grad_buf(a).data(), 1.0, dC.data(), dC.size());
        kernels::active().axpy(t.grad_buf(b).data(), 1.0, dC.data(), dC.size());
    };
    return id;
}

NodeId Tape::sub(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor2& av = val(a);
    const Tensor2& bv = val(b);
    if (!av.same_shape(bv))
        fail_runtime("sub: shape mismatch %zux%zu vs %zux%zu", av.rows, av.cols, bv.rows,
                     bv.cols);
    Tensor2 out(av.rows, av.cols);
    kernels::active().sub(out.data(), av.data(), bv.data(), av.size());
    NodeId id = record(std::move(out), {}, "sub");
    nodes_.back().back = [a, b, id](Tape& t) {
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        kernels::active().axpy(t.grad_buf(a).data(), 1.0, dC.data(), dC.size());
        kernels::active().axpy(t.grad_buf(b).data(), -1.0, dC.data(), dC.size());
    };
    return id;
}

NodeId Tape::mul(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor2& av = val(a);
    const Tensor2& bv = val(b);
    if (!av.same_shape(bv))
        fail_runtime("mul: shape mismatch %zux%zu vs %zux%zu", av.rows, av.cols, bv.rows,
                     bv.cols);
    Tensor2 out(av.rows, av.cols);
    kernels::active().mul(out.data(), av.data(), bv.data(), av.size());
    NodeId id = record(std::move(out), {}, "mul");
    nodes_.back().back = [a, b, id](Tape& t) {
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        kernels::active().mul_acc(t.grad_buf(a).data(), dC.data(), t.val(b).data(), dC.size());
        kernels::active().mul_acc(t.grad_buf(b).data(), dC.data(), t.val(a).data(), dC.size());
    };
    return id;
}

NodeId Tape::scale(NodeId a, double s) {
    check_id(a);
    const Tensor2& av = val(a);
    Tensor2 out(av.rows, av.cols);
    kernels::active().scale(out.data(), av.data(), s, av.size());
    NodeId id = record(std::move(out), {}, "scale");
    nodes_.back().back = [a, s, id](Tape& t) {
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        kernels::active().axpy(t.grad_buf(a).data(), s, dC.data(), dC.size());
    };
    return id;
}

NodeId Tape::add_rowvec(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor2& av = val(a);
    const Tensor2& bv = val(b);
    if (bv.rows != 1 || bv.cols != av.cols)
        fail_runtime("add_rowvec: %zux%zu + %zux%zu (want 1x%zu)", av.rows, av.cols, bv.rows,
                     bv.cols, av.cols);
    Tensor2 out(av.rows, av.cols);
    for (std::size_t i = 0; i < av.rows; ++i)
        kernels::active().add(out.row(i), av.row(i), bv.data(), av.cols);
    NodeId id = record(std::move(out), {}, "add_rowvec");
    nodes_.back().back = [a, b, id](Tape& t) {
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        kernels::active().axpy(t.grad_buf(a).data(), 1.0, dC.data(), dC.size());
        kernels::active().colsum_acc(t.grad_buf(b).data(), dC.data(), dC.rows, dC.cols);
    };
    return id;
}

NodeId Tape::mul_colvec(NodeId a, NodeId colv) {
    check_id(a);
    check_id(colv);
    const Tensor2& av = val(a);
    const Tensor2& cv = val(colv);
    if (cv.cols != 1 || cv.rows != av.rows)
        fail_runtime("mul_colvec: %zux%zu * %zux%zu (want %zux1)", av.rows, av.cols, cv.rows,
                     cv.cols, av.rows);
    Tensor2 out(av.rows, av.cols);
    kernels::active().row_scale(out.data(), av.data(), cv.data(), av.rows, av.cols);
    NodeId id = record(std::move(out), {}, "mul_colvec");
    nodes_.back().back = [a, colv, id](Tape& t) {
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        const Tensor2& A = t.val(a);
        const Tensor2& cvv = t.val(colv);
        kernels::active().row_scale_acc(t.grad_buf(a).data(), dC.data(), cvv.data(), dC.rows,
                                        dC.cols);
        Tensor2& dcol = t.grad_buf(colv);
        for (std::size_t i = 0; i < dC.rows; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dC.cols; ++j) acc += dC.at(i, j) * A.at(i, j);
            dcol.at(i, 0) += acc;
        }
    };
    return id;
}

NodeId Tape::col(NodeId a, std::size_t j) {
    check_id(a);
    const Tensor2& av = val(a);
    if (j >= av.cols) fail_runtime("col: index %zu out of %zu columns", j, av.cols);
    Tensor2 out(av.rows, 1);
    for (std::size_t i = 0; i < av.rows; ++i) out.at(i, 0) = av.at(i, j);
    NodeId id = record(std::move(out), {}, "col");
    nodes_.back().back = [a, j, id](Tape& t) {
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        Tensor2& dA = t.grad_buf(a);
        for (std::size_t i = 0; i < dC.rows; ++i) dA.at(i, j) += dC.at(i, 0);
    };
    return id;
}

NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) fail_runtime("concat_cols: no inputs");
    std::size_t rows = 0, cols = 0;
    for (NodeId p : parts) {
        check_id(p);
        const Tensor2& pv = val(p);
        if (cols == 0 && rows == 0) rows = pv.rows;
        if (pv.rows != rows)
            fail_runtime("concat_cols: row mismatch (%zu vs %zu)", pv.rows, rows);
        cols += pv.cols;
    }
    Tensor2 out(rows, cols);
    std::size_t off = 0;
    for (NodeId p : parts) {
        const Tensor2& pv = val(p);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < pv.cols; ++j) out.at(i, off + j) = pv.at(i, j);
        off += pv.cols;
    }
    std::vector<NodeId> ps = parts;
    NodeId id = record(std::move(out), {}, "concat_cols");
    nodes_.back().back = [ps, id](Tape& t) {
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        std::size_t off = 0;
        for (NodeId p : ps) {
            Tensor2& dP = t.grad_buf(p);
            for (std::size_t i = 0; i < dP.rows; ++i)
                for (std::size_t j = 0; j < dP.cols; ++j) dP.at(i, j) += dC.at(i, off + j);
            off += dP.cols;
        }
    };
    return id;
}

NodeId Tape::gather_rows(NodeId a, std::vector<std::size_t> idx) {
    check_id(a);
    const Tensor2& av = val(a);
    for (std::size_t r : idx)
        if (r >= av.rows) fail_runtime("gather_rows: row %zu out of %zu", r, av.rows);
    Tensor2 out(idx.size(), av.cols);
    for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy(av.row(idx[r]), av.row(idx[r]) + av.cols, out.row(r));
    NodeId id = record(std::move(out), {}, "gather_rows");
    nodes_.back().back = [a, idx = std::move(idx), id](Tape& t) {
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        Tensor2& dA = t.grad_buf(a);
        for (std::size_t r = 0; r < idx.size(); ++r)
            kernels::active().axpy(dA.row(idx[r]), 1.0, dC.row(r), dC.cols);
    };
    return id;
}

NodeId Tape::scatter_rows(NodeId a, std::vector<std::size_t> idx, std::size_t n_rows) {
    check_id(a);
    const Tensor2& av = val(a);
    if (idx.size() != av.rows)
        fail_runtime("scatter_rows: %zu indices for %zu rows", idx.size(), av.rows);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= n_rows) fail_runtime("scatter_rows: row %zu out of %zu", idx[r], n_rows);
        if (r > 0 && idx[r] <= idx[r - 1])
            fail_runtime("scatter_rows: indices must be strictly increasing");
    }
    Tensor2 out(n_rows, av.cols);
    for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy(av.row(r), av.row(r) + av.cols, out.row(idx[r]));
    NodeId id = record(std::move(out), {}, "scatter_rows");
    nodes_.back().back = [a, idx = std::move(idx), id](Tape& t) {
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        Tensor2& dA = t.grad_buf(a);
        for (std::size_t r = 0; r < idx.size(); ++r)
            kernels::active().axpy(dA.row(r), 1.0, dC.row(idx[r]), dC.cols);
    };
    return id;
}

NodeId Tape::leaky_relu(NodeId a, double slope) {
    check_id(a);
    if (slope < 0.0 || slope >= 1.0)
        fail_runtime("leaky_relu: slope %g outside [0, 1)", slope);
    const Tensor2& av = val(a);
    Tensor2 out(av.rows, av.cols);
    kernels::active().leaky_relu_fwd(out.data(), av.data(), av.size(), slope);
    NodeId id = record(std::move(out), {}, "leaky_relu");
    nodes_.back().back = [a, slope, id](Tape& t) {
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        kernels::active().leaky_relu_bwd_acc(t.grad_buf(a).data(), t.val(a).data(), dC.data(),
                                             dC.size(), slope);
    };
    return id;
}

NodeId Tape::dropout(NodeId a, double p, bool training, Rng& rng) {
    check_id(a);
    if (p < 0.0 || p >= 1.0) fail_runtime("dropout: invalid probability %g (need 0 <= p < 1)", p);
    if (!training || p == 0.0) return a;
    const Tensor2& av = val(a);
    Tensor2 mask(av.rows, av.cols);
    const double keep_scale = 1.0 / (1.0 - p);
    for (double& mv : mask.values) mv = (rng.uniform() < p) ? 0.0 : keep_scale;
    Tensor2 out(av.rows, av.cols);
    kernels::active().mul(out.data(), av.data(), mask.data(), av.size());
    NodeId id = record(std::move(out), {}, "dropout");
    nodes_.back().back = [a, mask = std::move(mask), id](Tape& t) {
        const Tensor2& dC = t.grads_[static_cast<std::size_t>(id)];
        kernels::active().mul_acc(t.grad_buf(a).data(), dC.data(), mask.data(), dC.size());
    };
    return id;
}

NodeId Tape::row_softmax(NodeId a) {
    check_id(a);
    const Tensor2& av = val(a);
    std::vector<std::uint8_t> mask(av.size(), 1);
    return row_softmax_masked(a, mask);
}

NodeId Tape::row_softmax_masked(NodeId a, const std::vector<std::uint8_t>& mask) {
    check_id(a);
    const Tensor2& av = val(a);
    if (mask.size() != av.size())
        fail_runtime("row_softmax_masked: mask size %zu != %zu", mask.size(), av.size());
    Tensor2 out(av.rows, av.cols);
    for (std::size_t i = 0; i < av.rows; ++i) {
        double mx = -HUGE_VAL;
        bool any = false;
        for (std::size_t j = 0; j < av.cols; ++j) {
            if (!mask[i * av.cols + j]) continue;
            any = true;
            mx = std::max(mx, av.at(i, j));
        }
        if (!any) fail_runtime("row_softmax_masked: empty support in row %zu", i);
        double sum = 0.0;
        for (std::size_t j = 0; j < av.cols; ++j) {
            if (!mask[i * av.cols + j]) continue;
            const double e = std::exp(av.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < av.cols; ++j)
            if (mask[i * av.cols + j]) out.at(i, j) /= sum;
    }
    NodeId id = record(std::move(out), {}, "row_softmax");
    nodes_.back().back = [a, mask, id](Tape& t) {
        const Tensor2& dY = t.grads_[static_cast<std::size_t>(id)];
        const Tensor2& Y = t.val(id);
        Tensor2& dX = t.grad_buf(a);
        for (std::size_t i = 0; i < Y.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < Y.cols; ++j)
                if (mask[i * Y.cols + j]) dot += dY.at(i, j) * Y.at(i, j);
            for (std::size_t j = 0; j < Y.cols; ++j)
                if (mask[i * Y.cols + j])
                    dX.at(i, j) += Y.at(i, j) * (dY.at(i, j) - dot);
        }
    };
    return id;
}

NodeId Tape::row_l2_normalize(NodeId a) {
    check_id(a);
    const Tensor2& av = val(a);
    Tensor2 out(av.rows, av.cols);
    std::vector<double> norms(av.rows);
    for (std::size_t i = 0; i < av.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < av.cols; ++j) s += av.at(i, j) * av.at(i, j);
        const double nrm = std::sqrt(s);
        norms[i] = nrm;
        const double denom = std::max(nrm, kNormFloor);
        for (std::size_t j = 0; j < av.cols; ++j) out.at(i, j) = av.at(i, j) / denom;
    }
    NodeId id = record(std::move(out), {}, "row_l2_normalize");
    nodes_.back().back = [a, norms = std::move(norms), id](Tape& t) {
        const Tensor2& dY = t.grads_[static_cast<std::size_t>(id)];
        const Tensor2& Y = t.val(id);
        Tensor2& dX = t.grad_buf(a);
        for (std::size_t i = 0; i < Y.rows; ++i) {
            if (norms[i] <= kNormFloor) {
                // clamped region: y = x / floor is linear
                for (std::size_t j = 0; j < Y.cols; ++j)
                    dX.at(i, j) += dY.at(i, j) / kNormFloor;
                continue;
            }
            double dot = 0.0;
            for (std::size_t j = 0; j < Y.cols; ++j) dot += dY.at(i, j) * Y.at(i, j);
            for (std::size_t j = 0; j < Y.cols; ++j)
                dX.at(i, j) += (dY.at(i, j) - dot * Y.at(i, j)) / norms[i];
        }
    };
    return id;
}

NodeId Tape::sum_all(NodeId a) {
    check_id(a);
    const Tensor2& av = val(a);
    double s = 0.0;
    for (double x : av.values) s += x;
    Tensor2 out(1, 1);
    out.values[0] = s;
    NodeId id = record(std::move(out), {}, "sum_all");
    nodes_.back().back = [a, id](Tape& t) {
        const double g = t.grads_[static_cast<std::size_t>(id)].values[0];
        Tensor2& dA = t.grad_buf(a);
        for (double& x : dA.values) x += g;
    };
    return id;
}

NodeId Tape::mean_all(NodeId a) {
    check_id(a);
    const Tensor2& av = val(a);
    if (av.size() == 0) fail_runtime("mean_all: empty tensor");
    double s = 0.0;
    for (double x : av.values) s += x;
    const double inv_n = 1.0 / static_cast<double>(av.size());
    Tensor2 out(1, 1);
    out.values[0] = s * inv_n;
    NodeId id = record(std::move(out), {}, "mean_all");
    nodes_.back().back = [a, inv_n, id](Tape& t) {
        const double g = t.grads_[static_cast<std::size_t>(id)].values[0] * inv_n;
        Tensor2& dA = t.grad_buf(a);
        for (double& x : dA.values) x += g;
    };
    return id;
}

NodeId Tape::nll(NodeId probs, const std::vector<int>& labels, bool mean) {
    check_id(probs);
    const Tensor2& pv = val(probs);
    if (labels.size() != pv.rows)
        fail_runtime("nll: %zu labels for %zu rows", labels.size(), pv.rows);
    if (pv.rows == 0) fail_runtime("nll: empty batch");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= pv.cols)
            fail_runtime("nll: label %d out of range for %zu classes (row %zu)", labels[i],
                         pv.cols, i);
    double acc = 0.0;
    for (std::size_t i = 0; i < pv.rows; ++i)
        acc -= std::log(std::max(pv.at(i, static_cast<std::size_t>(labels[i])), kLogClamp));
    const double w = mean ? 1.0 / static_cast<double>(pv.rows) : 1.0;
    Tensor2 out(1, 1);
    out.values[0] = acc * w;
    NodeId id = record(std::move(out), {}, "nll");
    nodes_.back().back = [probs, labels, w, id](Tape& t) {
        const double g = t.grads_[static_cast<std::size_t>(id)].values[0] * w;
        const Tensor2& P = t.val(probs);
        Tensor2& dP = t.grad_buf(probs);
        for (std::size_t i = 0; i < P.rows; ++i) {
            const auto y = static_cast<std::size_t>(labels[i]);
            const double p = P.at(i, y);
            if (p > kLogClamp) dP.at(i, y) -= g / p;
        }
    };
    return id;
}

NodeId Tape::pick(NodeId a, std::size_t i, std::size_t j) {
    check_id(a);
    const Tensor2& av = val(a);
    if (i >= av.rows || j >= av.cols)
        fail_runtime("pick: (%zu,%zu) out of %zux%zu", i, j, av.rows, av.cols);
    Tensor2 out(1, 1);
    out.values[0] = av.at(i, j);
    NodeId id = record(std::move(out), {}, "pick");
    nodes_.back().back = [a, i, j, id](Tape& t) {
        t.grad_buf(a).at(i, j) += t.grads_[static_cast<std::size_t>(id)].values[0];
    };
    return id;
}

} // namespace moira
