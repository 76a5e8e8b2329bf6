#pragma once

#include "moira/tensor.hpp"

#include <cstddef>
#include <vector>

namespace moira {

// Classic Adam with bias correction. Weight decay defaults to the coupled
// L2 form (decay added to the gradient before the moment updates); the
// decoupled form is available behind a flag.
struct AdamState {
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<Tensor2> m;
    std::vector<Tensor2> v;

    void init_like(const std::vector<Tensor2*>& params);
    bool initialized() const { return !m.empty(); }
};

void adam_step(const std::vector<Tensor2*>& params, const std::vector<const Tensor2*>& grads,
               AdamState& state, double lr, double weight_decay, bool decoupled = false);

} // namespace moira
