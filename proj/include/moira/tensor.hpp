#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace moira {

// Dense row-major matrix of 64-bit reals. Row vectors are 1 x n, column
// vectors n x 1. All model arithmetic runs on this one type.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
    Tensor2(std::size_t r, std::size_t c, double fill)
        : rows(r), cols(c), values(r * c, fill) {}

    static Tensor2 from_rows(std::initializer_list<std::initializer_list<double>> data);
    static Tensor2 row_vector(std::initializer_list<double> data);

    double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

    double* data() { return values.data(); }
    const double* data() const { return values.data(); }
    double* row(std::size_t i) { return values.data() + i * cols; }
    const double* row(std::size_t i) const { return values.data() + i * cols; }

    std::size_t size() const { return values.size(); }
    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;

    bool operator==(const Tensor2& o) const {
        return rows == o.rows && cols == o.cols && values == o.values;
    }
};

Tensor2 transposed(const Tensor2& a);

// sim(a, b) = a.b / max(|a||b|, 1e-8). Shapes must hold the same number of
// elements; both are read as flat vectors. The max-guard keeps the value
// exact for healthy inputs and never divides by zero.
double cosine_sim(const Tensor2& a, const Tensor2& b);

inline constexpr double kCosineNormFloor = 1e-8;

} // namespace moira
