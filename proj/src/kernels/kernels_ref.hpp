#pragma once

#include <cstddef>

// Scalar reference kernels, shared with the SIMD translation units so that
// remainder tails and non-vectorized ops reuse the exact same code.
namespace moira::kernels::ref {

void gemm_nn_acc(double* c, const double* a, const double* b,
                 std::size_t m, std::size_t k, std::size_t n);
void transpose(double* out, const double* in, std::size_t r, std::size_t c);
void leaky_relu_fwd(double* y, const double* x, std::size_t n, double slope);
void leaky_relu_bwd_acc(double* dx, const double* x, const double* dy,
                        std::size_t n, double slope);
void mul(double* out, const double* a, const double* b, std::size_t n);
void mul_acc(double* out, const double* a, const double* b, std::size_t n);
void add(double* out, const double* a, const double* b, std::size_t n);
void sub(double* out, const double* a, const double* b, std::size_t n);
void scale(double* out, const double* a, double s, std::size_t n);
void axpy(double* y, double s, const double* x, std::size_t n);
void row_scale(double* out, const double* a, const double* colv,
               std::size_t rows, std::size_t cols);
void row_scale_acc(double* out, const double* a, const double* colv,
                   std::size_t rows, std::size_t cols);
void colsum_acc(double* out, const double* a, std::size_t rows, std::size_t cols);
void adam_update(double* p, double* m, double* v, const double* g, std::size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double wd_l2, double wd_dec, double bc1, double bc2);

} // namespace moira::kernels::ref
