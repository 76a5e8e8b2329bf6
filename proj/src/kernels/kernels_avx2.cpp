// AVX2 kernel variants. Compiled with -mavx2 when the compiler supports it;
// execution is gated behind the runtime CPU check in avx2_available().
//
// Bitwise-identity rules: plain mul+add pairs instead of FMA, one lane per
// element with the scalar operation sequence, remainder tails delegated to
// the scalar reference. sqrt and div are IEEE correctly rounded, so the Adam
// kernel matches the scalar path exactly as well.

#include "moira/kernels.hpp"

#include "kernels_ref.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace moira::kernels {

#if defined(__AVX2__)

namespace avx {

static void gemm_nn_acc(double* c, const double* a, const double* b,
                        std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t n4 = n - (n % 4);
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double* bp = b + p * n;
            const __m256d va = _mm256_set1_pd(aip);
            std::size_t j = 0;
            for (; j < n4; j += 4) {
                __m256d vc = _mm256_loadu_pd(ci + j);
                const __m256d vb = _mm256_loadu_pd(bp + j);
                vc = _mm256_add_pd(vc, _mm256_mul_pd(va, vb));
                _mm256_storeu_pd(ci + j, vc);
            }
            for (; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

static void leaky_relu_fwd(double* y, const double* x, std::size_t n, double slope) {
    const __m256d vs = _mm256_set1_pd(slope);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(y + i, _mm256_max_pd(vx, _mm256_mul_pd(vs, vx)));
    }
    ref::leaky_relu_fwd(y + i, x + i, n - i, slope);
}

static void leaky_relu_bwd_acc(double* dx, const double* x, const double* dy,
                               std::size_t n, double slope) {
    const __m256d vs = _mm256_set1_pd(slope);
    const __m256d vone = _mm256_set1_pd(1.0);
    const __m256d vzero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d pos = _mm256_cmp_pd(vx, vzero, _CMP_GT_OQ);
        const __m256d f = _mm256_blendv_pd(vs, vone, pos);
        const __m256d vdx = _mm256_loadu_pd(dx + i);
        const __m256d vdy = _mm256_loadu_pd(dy + i);
        _mm256_storeu_pd(dx + i, _mm256_add_pd(vdx, _mm256_mul_pd(vdy, f)));
    }
    ref::leaky_relu_bwd_acc(dx + i, x + i, dy + i, n - i, slope);
}

static void mul(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    ref::mul(out + i, a + i, b + i, n - i);
}

static void mul_acc(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), prod));
    }
    ref::mul_acc(out + i, a + i, b + i, n - i);
}

static void add(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    ref::add(out + i, a + i, b + i, n - i);
}

static void sub(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    ref::sub(out + i, a + i, b + i, n - i);
}

static void scale(double* out, const double* a, double s, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
    ref::scale(out + i, a + i, s, n - i);
}

static void axpy(double* y, double s, const double* x, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(vs, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    ref::axpy(y + i, s, x + i, n - i);
}

static void row_scale(double* out, const double* a, const double* colv,
                      std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const __m256d vs = _mm256_set1_pd(colv[r]);
        const double* ar = a + r * cols;
        double* outr = out + r * cols;
        std::size_t j = 0;
        for (; j + 4 <= cols; j += 4)
            _mm256_storeu_pd(outr + j, _mm256_mul_pd(_mm256_loadu_pd(ar + j), vs));
        for (; j < cols; ++j) outr[j] = ar[j] * colv[r];
    }
}

static void row_scale_acc(double* out, const double* a, const double* colv,
                          std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const __m256d vs = _mm256_set1_pd(colv[r]);
        const double* ar = a + r * cols;
        double* outr = out + r * cols;
        std::size_t j = 0;
        for (; j + 4 <= cols; j += 4) {
            const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(ar + j), vs);
            _mm256_storeu_pd(outr + j, _mm256_add_pd(_mm256_loadu_pd(outr + j), prod));
        }
        for (; j < cols; ++j) outr[j] += ar[j] * colv[r];
    }
}

static void colsum_acc(double* out, const double* a, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* ai = a + i * cols;
        std::size_t j = 0;
        for (; j + 4 <= cols; j += 4)
            _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_loadu_pd(ai + j)));
        for (; j < cols; ++j) out[j] += ai[j];
    }
}

static void adam_update(double* p, double* m, double* v, const double* g, std::size_t n,
                        double lr, double beta1, double beta2, double eps,
                        double wd_l2, double wd_dec, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vomb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d vomb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d vwd = _mm256_set1_pd(wd_l2);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d vlrwd = _mm256_set1_pd(lr * wd_dec);
    const __m256d vbc1 = _mm256_set1_pd(bc1);
    const __m256d vbc2 = _mm256_set1_pd(bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vp = _mm256_loadu_pd(p + i);
        const __m256d vg = _mm256_loadu_pd(g + i);
        const __m256d ge = _mm256_add_pd(vg, _mm256_mul_pd(vwd, vp));
        const __m256d vm = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)),
                                         _mm256_mul_pd(vomb1, ge));
        const __m256d vv = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                                         _mm256_mul_pd(vomb2, _mm256_mul_pd(ge, ge)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_div_pd(vm, vbc1);
        const __m256d vhat = _mm256_div_pd(vv, vbc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        const __m256d step = _mm256_mul_pd(vlr, _mm256_div_pd(mhat, denom));
        const __m256d decayed = _mm256_sub_pd(_mm256_sub_pd(vp, step), _mm256_mul_pd(vlrwd, vp));
        _mm256_storeu_pd(p + i, decayed);
    }
    ref::adam_update(p + i, m + i, v + i, g + i, n - i, lr, beta1, beta2, eps,
                     wd_l2, wd_dec, bc1, bc2);
}

} // namespace avx

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const Backend& avx2() {
    static const Backend table = {
        "avx2",
        avx::gemm_nn_acc,
        ref::transpose, // data movement only, nothing to vectorize usefully
        avx::leaky_relu_fwd,
        avx::leaky_relu_bwd_acc,
        avx::mul,
        avx::mul_acc,
        avx::add,
        avx::sub,
        avx::scale,
        avx::axpy,
        avx::row_scale,
        avx::row_scale_acc,
        avx::colsum_acc,
        avx::adam_update,
    };
    return table;
}

#else // !__AVX2__

bool avx2_available() { return false; }

const Backend& avx2() { return scalar(); }

#endif

} // namespace moira::kernels
