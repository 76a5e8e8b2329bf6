// Backend equivalence: every SIMD variant must match the scalar reference
// bitwise, including awkward sizes that exercise the remainder tails.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "moira/kernels.hpp"
#include "moira/rng.hpp"

#include <cmath>
#include <cstring>
#include <vector>

using moira::Rng;
namespace kn = moira::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<const kn::Backend*> simd_backends() {
    std::vector<const kn::Backend*> out;
    if (kn::avx2_available()) out.push_back(&kn::avx2());
    return out;
}

} // namespace

TEST_CASE("gemm_nn_acc matches scalar bitwise") {
    Rng rng(11);
    for (const kn::Backend* be : simd_backends()) {
        for (auto [m, k, n] : {std::tuple<std::size_t, std::size_t, std::size_t>{1, 1, 1},
                               {3, 5, 7},
                               {4, 4, 4},
                               {13, 9, 6},
                               {2, 31, 17},
                               {16, 16, 16}}) {
            auto a = random_vec(rng, m * k);
            auto b = random_vec(rng, k * n);
            auto c0 = random_vec(rng, m * n);
            auto c1 = c0;
            kn::scalar().gemm_nn_acc(c0.data(), a.data(), b.data(), m, k, n);
            be->gemm_nn_acc(c1.data(), a.data(), b.data(), m, k, n);
            CAPTURE(be->name);
            CHECK(bitwise_equal(c0, c1));
        }
    }
}

TEST_CASE("elementwise kernels match scalar bitwise") {
    Rng rng(22);
    for (const kn::Backend* be : simd_backends()) {
        for (std::size_t n : {1u, 3u, 4u, 5u, 8u, 127u, 1024u}) {
            auto x = random_vec(rng, n);
            auto y = random_vec(rng, n);
            auto acc0 = random_vec(rng, n);
            auto acc1 = acc0;
            std::vector<double> out0(n), out1(n);

            kn::scalar().leaky_relu_fwd(out0.data(), x.data(), n, 0.01);
            be->leaky_relu_fwd(out1.data(), x.data(), n, 0.01);
            CHECK(bitwise_equal(out0, out1));

            kn::scalar().leaky_relu_bwd_acc(acc0.data(), x.data(), y.data(), n, 0.01);
            be->leaky_relu_bwd_acc(acc1.data(), x.data(), y.data(), n, 0.01);
            CHECK(bitwise_equal(acc0, acc1));

            kn::scalar().mul(out0.data(), x.data(), y.data(), n);
            be->mul(out1.data(), x.data(), y.data(), n);
            CHECK(bitwise_equal(out0, out1));

            kn::scalar().mul_acc(acc0.data(), x.data(), y.data(), n);
            be->mul_acc(acc1.data(), x.data(), y.data(), n);
            CHECK(bitwise_equal(acc0, acc1));

            kn::scalar().add(out0.data(), x.data(), y.data(), n);
            be->add(out1.data(), x.data(), y.data(), n);
            CHECK(bitwise_equal(out0, out1));

            kn::scalar().sub(out0.data(), x.data(), y.data(), n);
            be->sub(out1.data(), x.data(), y.data(), n);
            CHECK(bitwise_equal(out0, out1));

            kn::scalar().scale(out0.data(), x.data(), 1.37, n);
            be->scale(out1.data(), x.data(), 1.37, n);
            CHECK(bitwise_equal(out0, out1));

            kn::scalar().axpy(acc0.data(), -0.73, x.data(), n);
            be->axpy(acc1.data(), -0.73, x.data(), n);
            CHECK(bitwise_equal(acc0, acc1));
        }
    }
}

TEST_CASE("row kernels match scalar bitwise") {
    Rng rng(33);
    for (const kn::Backend* be : simd_backends()) {
        for (auto [rows, cols] :
             {std::pair<std::size_t, std::size_t>{1, 1}, {3, 5}, {7, 4}, {5, 13}, {8, 8}}) {
            auto a = random_vec(rng, rows * cols);
            auto colv = random_vec(rng, rows);
            std::vector<double> out0(rows * cols), out1(rows * cols);
            kn::scalar().row_scale(out0.data(), a.data(), colv.data(), rows, cols);
            be->row_scale(out1.data(), a.data(), colv.data(), rows, cols);
            CHECK(bitwise_equal(out0, out1));

            auto acc0 = random_vec(rng, rows * cols);
            auto acc1 = acc0;
            kn::scalar().row_scale_acc(acc0.data(), a.data(), colv.data(), rows, cols);
            be->row_scale_acc(acc1.data(), a.data(), colv.data(), rows, cols);
            CHECK(bitwise_equal(acc0, acc1));

            auto cs0 = random_vec(rng, cols);
            auto cs1 = cs0;
            kn::scalar().colsum_acc(cs0.data(), a.data(), rows, cols);
            be->colsum_acc(cs1.data(), a.data(), rows, cols);
            CHECK(bitwise_equal(cs0, cs1));
        }
    }
}

TEST_CASE("adam kernel matches scalar bitwise") {
    Rng rng(44);
    for (const kn::Backend* be : simd_backends()) {
        for (std::size_t n : {1u, 4u, 7u, 64u, 101u}) {
            auto p0 = random_vec(rng, n);
            auto m0 = random_vec(rng, n, 0.0, 0.1);
            auto v0 = random_vec(rng, n, 0.0, 0.1);
            auto g = random_vec(rng, n);
            auto p1 = p0;
            auto m1 = m0;
            auto v1 = v0;
            const double bc1 = 1.0 - std::pow(0.9, 3);
            const double bc2 = 1.0 - std::pow(0.999, 3);
            kn::scalar().adam_update(p0.data(), m0.data(), v0.data(), g.data(), n, 1e-3, 0.9,
                                     0.999, 1e-8, 1e-3, 0.0, bc1, bc2);
            be->adam_update(p1.data(), m1.data(), v1.data(), g.data(), n, 1e-3, 0.9, 0.999,
                            1e-8, 1e-3, 0.0, bc1, bc2);
            CHECK(bitwise_equal(p0, p1));
            CHECK(bitwise_equal(m0, m1));
            CHECK(bitwise_equal(v0, v1));
        }
    }
}

TEST_CASE("transpose round-trips") {
    Rng rng(55);
    auto a = random_vec(rng, 6 * 9);
    std::vector<double> t(9 * 6), back(6 * 9);
    kn::active().transpose(t.data(), a.data(), 6, 9);
    kn::active().transpose(back.data(), t.data(), 9, 6);
    CHECK(bitwise_equal(a, back));
    CHECK(t[3 * 6 + 2] == a[2 * 9 + 3]);
}

TEST_CASE("dispatcher reports an available backend") {
    const kn::Backend& b = kn::active();
    CHECK(b.name != nullptr);
    if (kn::avx2_available()) {
        CHECK(kn::avx2().gemm_nn_acc != kn::scalar().gemm_nn_acc);
    }
}
