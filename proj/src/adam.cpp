#include "moira/adam.hpp"

#include "moira/common.hpp"
#include "moira/kernels.hpp"

#include <cmath>

namespace moira {

void AdamState::init_like(const std::vector<Tensor2*>& params) {
    step = 0;
    m.clear();
    v.clear();
    m.reserve(params.size());
    v.reserve(params.size());
    for (const Tensor2* p : params) {
        m.emplace_back(p->rows, p->cols);
        v.emplace_back(p->rows, p->cols);
    }
}

void adam_step(const std::vector<Tensor2*>& params, const std::vector<const Tensor2*>& grads,
               AdamState& state, double lr, double weight_decay, bool decoupled) {
    if (lr < 0.0) fail_runtime("adam_step: negative learning rate %g", lr);
    if (params.size() != grads.size())
        fail_runtime("adam_step: %zu params vs %zu grads", params.size(), grads.size());
    if (!state.initialized()) state.init_like(params);
    if (state.m.size() != params.size())
        fail_runtime("adam_step: state tracks %zu params, got %zu", state.m.size(),
                     params.size());

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const double wd_l2 = decoupled ? 0.0 : weight_decay;
    const double wd_dec = decoupled ? weight_decay : 0.0;

    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor2& p = *params[k];
        const Tensor2& g = *grads[k];
        if (!p.same_shape(g))
            fail_runtime("adam_step: param %zu is %zux%zu but grad is %zux%zu", k, p.rows,
                         p.cols, g.rows, g.cols);
        if (!state.m[k].same_shape(p))
            fail_runtime("adam_step: state shape drift on param %zu", k);
        kernels::active().adam_update(p.data(), state.m[k].data(), state.v[k].data(), g.data(),
                                      p.size(), lr, state.beta1, state.beta2, state.eps, wd_l2,
                                      wd_dec, bc1, bc2);
        if (!p.all_finite()) fail_runtime("adam_step: non-finite parameter after update");
    }
}

} // namespace moira
