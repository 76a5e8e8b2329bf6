#pragma once

#include <cstddef>

namespace moira::kernels {

// Hot inner loops behind a runtime-dispatched function table.
//
// Contract: every SIMD variant produces results bitwise identical to the
// scalar reference. That means the same per-element operation sequence
// (no FMA contraction), the same accumulation order, and reductions kept
// scalar. Equivalence tests assert exact equality, and the determinism
// guarantees of the training pipeline hold no matter which backend the
// dispatcher picks.
struct Backend {
    const char* name;

    // c += a * b, row-major; a is m x k, b is k x n, c is m x n.
    void (*gemm_nn_acc)(double* c, const double* a, const double* b,
                        std::size_t m, std::size_t k, std::size_t n);
    // out = in^T; in is r x c, out is c x r.
    void (*transpose)(double* out, const double* in, std::size_t r, std::size_t c);

    // y[i] = max(x[i], slope * x[i])
    void (*leaky_relu_fwd)(double* y, const double* x, std::size_t n, double slope);
    // dx[i] += dy[i] * (x[i] > 0 ? 1 : slope)
    void (*leaky_relu_bwd_acc)(double* dx, const double* x, const double* dy,
                               std::size_t n, double slope);

    void (*mul)(double* out, const double* a, const double* b, std::size_t n);
    void (*mul_acc)(double* out, const double* a, const double* b, std::size_t n);
    void (*add)(double* out, const double* a, const double* b, std::size_t n);
    void (*sub)(double* out, const double* a, const double* b, std::size_t n);
    void (*scale)(double* out, const double* a, double s, std::size_t n);
    // y[i] += s * x[i]
    void (*axpy)(double* y, double s, const double* x, std::size_t n);

    // out[i*cols+j] = a[i*cols+j] * colv[i]
    void (*row_scale)(double* out, const double* a, const double* colv,
                      std::size_t rows, std::size_t cols);
    void (*row_scale_acc)(double* out, const double* a, const double* colv,
                          std::size_t rows, std::size_t cols);
    // out[j] += sum_i a[i*cols+j]
    void (*colsum_acc)(double* out, const double* a, std::size_t rows, std::size_t cols);

    // One fused Adam update over a flat parameter array. bc1/bc2 are the
    // bias corrections 1-beta1^t and 1-beta2^t. wd_l2 is added to the raw
    // gradient before the moment update; wd_dec is applied directly to the
    // parameter (decoupled form). Either may be zero.
    void (*adam_update)(double* p, double* m, double* v, const double* g, std::size_t n,
                        double lr, double beta1, double beta2, double eps,
                        double wd_l2, double wd_dec, double bc1, double bc2);
};

const Backend& scalar();

bool avx2_available();    // compiled in AND supported by this CPU
const Backend& avx2();    // valid only when avx2_available()

// Selected once per process: MOIRA_KERNELS=scalar|avx2 overrides, otherwise
// the widest available backend wins.
const Backend& active();

} // namespace moira::kernels
