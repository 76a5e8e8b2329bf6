#include "moira/kernels.hpp"

#include "kernels_ref.hpp"
#include "moira/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace moira::kernels {

// ---------------------------------------------------------------------------
// Scalar reference kernels. The loop nests here define the canonical
// operation order; SIMD variants must replicate it exactly.
// ---------------------------------------------------------------------------

namespace ref {

void gemm_nn_acc(double* c, const double* a, const double* b,
                 std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

void transpose(double* out, const double* in, std::size_t r, std::size_t c) {
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
}

void leaky_relu_fwd(double* y, const double* x, std::size_t n, double slope) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::max(x[i], slope * x[i]);
}

void leaky_relu_bwd_acc(double* dx, const double* x, const double* dy,
                        std::size_t n, double slope) {
    for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * (x[i] > 0.0 ? 1.0 : slope);
}

void mul(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

void add(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void scale(double* out, const double* a, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

void axpy(double* y, double s, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

void row_scale(double* out, const double* a, const double* colv,
               std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double s = colv[i];
        for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = a[i * cols + j] * s;
    }
}

void row_scale_acc(double* out, const double* a, const double* colv,
                   std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double s = colv[i];
        for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] += a[i * cols + j] * s;
    }
}

void colsum_acc(double* out, const double* a, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out[j] += a[i * cols + j];
}

void adam_update(double* p, double* m, double* v, const double* g, std::size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double wd_l2, double wd_dec, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        const double ge = g[i] + wd_l2 * p[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * ge;
        v[i] = beta2 * v[i] + (1.0 - beta2) * (ge * ge);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] = p[i] - lr * (mhat / (std::sqrt(vhat) + eps)) - lr * wd_dec * p[i];
    }
}

} // namespace ref

const Backend& scalar() {
    static const Backend table = {
        "scalar",
        ref::gemm_nn_acc,
        ref::transpose,
        ref::leaky_relu_fwd,
        ref::leaky_relu_bwd_acc,
        ref::mul,
        ref::mul_acc,
        ref::add,
        ref::sub,
        ref::scale,
        ref::axpy,
        ref::row_scale,
        ref::row_scale_acc,
        ref::colsum_acc,
        ref::adam_update,
    };
    return table;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

static const Backend& select_backend() {
    const char* env = std::getenv("MOIRA_KERNELS");
    if (env) {
        if (std::strcmp(env, "scalar") == 0) return scalar();
        if (std::strcmp(env, "avx2") == 0) {
            if (avx2_available()) return avx2();
            MOIRA_LOG_WARN("MOIRA_KERNELS=avx2 requested but unavailable; using scalar");
            return scalar();
        }
        MOIRA_LOG_WARN("unknown MOIRA_KERNELS value '%s'; using default dispatch", env);
    }
    if (avx2_available()) return avx2();
    return scalar();
}

const Backend& active() {
    static const Backend& chosen = select_backend();
    return chosen;
}

} // namespace moira::kernels
